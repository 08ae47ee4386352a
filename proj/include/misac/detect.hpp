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

#include <vector>

#include "misac/cir.hpp"
#include "misac/geometry.hpp"
#include "misac/scene.hpp"

namespace misac {

/// Static background estimate: time-averaged CIR magnitude per (beam, tap).
struct Background {
    Eigen::MatrixXd mean_magnitude; ///< N_b x L
    std::uint64_t frame_count = 0;
};

/// Streaming mean-magnitude accumulator, so the background of long runs can
/// be built in one file pass without holding frames. Each tap is averaged
/// over the frames where it carries data (alignment zero-fills a per-frame
/// tail; dropped frames are all zero), so those zeros do not dilute the mean.
class BackgroundAccumulator {
  public:
    void add(const CirFrame &frame);
    Background finish() const; ///< throws stage_error when no frame was added

  private:
    Eigen::MatrixXd sum_;
    Eigen::VectorXd tap_count_;
    std::uint64_t count_ = 0;
};

/// Batch mean over a TO-aligned stream.
Background estimate_background(const CirStream &frames);

/// Foreground amplitude max(|h| - mean, 0), elementwise.
Eigen::MatrixXd foreground(const CirFrame &frame, const Background &bg);

/// Detection statistic s(l) = sum over beams of foreground(b, l)^2.
Eigen::VectorXd detection_statistic(const Eigen::MatrixXd &fg);

struct DetectParams {
    double prominence_ratio = 0.3; ///< peak prominence must reach ratio * max(s)
    int min_separation_taps = 3;
    int guard_taps = 2;  ///< taps 0..guard excluded (LOS leakage)
    int max_targets = 3;
    double noise_gate_kappa = 20.0; ///< peaks must clear median(s) + kappa * MAD(s)
};

/// Tap indices of dynamic-target peaks, strongest first. The noise gate
/// keeps pure-noise statistics from ever producing a "peak"; the prominence
/// rule separates real targets from sidelobes of stronger ones.
std::vector<int> detect_targets(const Eigen::VectorXd &s, const DetectParams &params = {});

/// Angle of departure at tap l: power-weighted circular mean of the beam
/// centers over the top-3 foreground beams. Throws std::domain_error when no
/// beam has foreground at this tap.
double aod_from_beams(const Eigen::MatrixXd &fg, int tap, const std::vector<double> &beam_centers_rad);

/// One dynamic-target observation.
struct Detection {
    std::uint32_t k = 0;
    std::uint32_t rx_id = 0;
    int tap = 0;
    int beam = 0;    ///< strongest foreground beam at the tap
    double power = 0; ///< detection statistic value
    double excess_bistatic_range_m = 0;
    double aod_world_rad = 0;
    Vec2 position{0.0, 0.0};
};

struct FrameDetections {
    std::vector<Detection> detections;
    int dropped = 0; ///< detections whose localization degenerated
};

/// Full per-frame chain: foreground -> statistic -> peaks -> AoD refinement
/// -> bistatic localization. The frame must be TO-aligned and FO-corrected.
FrameDetections frame_detections(const CirFrame &frame, const Background &bg,
                                 const SceneConfig &scene, int rx_id,
                                 const DetectParams &params = {});

} // namespace misac
