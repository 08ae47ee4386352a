// SPDX-License-Identifier: Apache-2.0
//
// misac - multistatic asynchronous ISAC sensing toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "misac/detect.hpp"
#include "misac/geometry.hpp"
#include "misac/scene.hpp"

namespace misac {

// Extended Kalman filter over per-frame detections. One tracker instance per
// receiver; the measurement space is (excess bistatic range, baseline-relative
// AoD), which is where the sensor noise actually lives. Cartesian positions
// from the localizer only seed new tracks.

enum class TrackStatus { tentative, confirmed, coasting, dead };

const char *to_string(TrackStatus status);

struct Track {
    int id = 0;
    Eigen::Vector4d x = Eigen::Vector4d::Zero(); // [x, y, vx, vy] (m, m, m/s, m/s)
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
    TrackStatus status = TrackStatus::tentative;
    int hits = 0;   // total assigned detections
    int misses = 0; // total association opportunities without a detection
    int miss_streak = 0;
    std::deque<bool> recent; // hit/miss over the last confirm_n opportunities
    std::uint32_t last_update_k = 0;

    Vec2 position() const { return {x[0], x[1]}; }
    Vec2 velocity() const { return {x[2], x[3]}; }
};

struct TrackerParams {
    double q = 1.0;                                      // white-accel intensity (m^2/s^3)
    double sigma_range_m = speed_of_light / 1.76e9;      // one tap quantum
    double sigma_theta_rad = 0.5 * M_PI / 11.0;          // half beam spacing
    double gate_chi2 = 9.21;                             // chi-square 0.99 quantile, 2 dof
    int confirm_m = 3;
    int confirm_n = 5;
    int max_coast = 10;   // tracker steps a track may miss before dying
    int decimation = 20;  // frames per tracker step (2 kHz frames -> 100 Hz tracking)
    double v_max_mps = 2.0;

    // sigma_range = c / bandwidth, sigma_theta = half the beam-center spacing,
    // decimation chosen so the tracker runs as close to 100 Hz as the frame
    // interval allows, v_max copied from the scene.
    static TrackerParams for_scene(const SceneConfig &scene);

    // Throws config_error unless every field is positive, confirm_m <= confirm_n
    // and the gate threshold is positive.
    void validate() const;
};

// Symmetrizes P in place and, if its smallest eigenvalue is not strictly
// positive, adds the minimal diagonal jitter that makes it so.
void ensure_spd(Eigen::Matrix4d &P);

// Constant-velocity predict: x <- Fx, P <- FPF' + Q(dt, q) with the standard
// white-acceleration discretization (per-axis blocks [[dt^3/3, dt^2/2],
// [dt^2/2, dt]] * q). Requires dt > 0.
void predict(Track &track, double dt, double q);

// z = [ |p-tx| + |p-rx| - |tx-rx| ; angle of (p - tx) relative to the
// baseline, wrapped to (-pi, pi] ]. Throws std::domain_error when p coincides
// with tx or rx (angle / unit vectors undefined).
Eigen::Vector2d measurement_model(const Eigen::Vector4d &x, const BistaticPair &pair);

// Analytic 2x4 Jacobian of measurement_model at x; velocity columns are zero.
Eigen::Matrix<double, 2, 4> measurement_jacobian(const Eigen::Vector4d &x,
                                                 const BistaticPair &pair);

// Joseph-form EKF update with the angle innovation wrapped to (-pi, pi].
// Returns false (track untouched) when the innovation covariance is not
// invertible, which signals degenerate geometry.
bool update(Track &track, const Eigen::Vector2d &z, const BistaticPair &pair,
            const TrackerParams &params);

// Measurement vector of a detection in the tracker's space.
Eigen::Vector2d detection_measurement(const Detection &det, const BistaticPair &pair);

struct Association {
    std::vector<std::pair<int, int>> pairs; // (track index, detection index)
    std::vector<int> unassigned_tracks;
    std::vector<int> unassigned_detections;
};

// Greedy nearest-neighbor by Mahalanobis distance in measurement space, gated
// at params.gate_chi2. Each track and detection appears in at most one pair.
Association associate(const std::vector<Track> &tracks, const std::vector<Detection> &detections,
                      const BistaticPair &pair, const TrackerParams &params);

struct TrackSnapshot {
    std::uint32_t k = 0;
    int id = 0;
    double x = 0, y = 0, vx = 0, vy = 0;
    TrackStatus status = TrackStatus::tentative;
};

// Sequential per-receiver tracker with the full lifecycle: tracks spawn
// tentative from unassigned detections, confirm after confirm_m hits in the
// last confirm_n opportunities, coast (predict-only) through misses and die
// after max_coast consecutive misses. Dead tracks never revive.
class Tracker {
  public:
    Tracker(BistaticPair pair, TrackerParams params, double frame_interval_s);

    // Advances one tracker step at frame k with that frame's detections.
    // Steps must be called with strictly increasing k; the caller is expected
    // to honor params.decimation (see track_stream).
    void step(std::uint32_t k, const std::vector<Detection> &detections);

    const std::vector<Track> &tracks() const { return tracks_; }
    const std::vector<TrackSnapshot> &history() const { return history_; }

  private:
    void spawn(std::uint32_t k, const Detection &det);

    BistaticPair pair_;
    TrackerParams params_;
    double frame_interval_s_;
    std::vector<Track> tracks_; // live tracks only
    std::vector<TrackSnapshot> history_;
    int next_id_ = 1;
    bool stepped_ = false;
    std::uint32_t last_k_ = 0;
};

// Runs the tracker over a detection stream ordered by k, consuming only
// frames with k % params.decimation == 0, and returns the per-step snapshots
// of every live track (status column tells confirmed from tentative).
std::vector<TrackSnapshot> track_stream(const std::vector<Detection> &detections,
                                        std::uint32_t num_frames, const BistaticPair &pair,
                                        const TrackerParams &params, double frame_interval_s);

} // namespace misac
