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

#include "misac/track.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "misac/errors.hpp"

namespace misac {

const char *to_string(TrackStatus status)
{
    switch (status) {
    case TrackStatus::tentative: return "tentative";
    case TrackStatus::confirmed: return "confirmed";
    case TrackStatus::coasting: return "coasting";
    case TrackStatus::dead: return "dead";
    }
    return "unknown";
}

TrackerParams TrackerParams::for_scene(const SceneConfig &scene)
{
    TrackerParams p;
    p.sigma_range_m = scene.range_quantum_m();
    p.v_max_mps = scene.v_max_mps;

    std::vector<double> centers = scene.beam_centers_rad;
    std::sort(centers.begin(), centers.end());
    if (centers.size() >= 2) {
        double spacing = 0.0;
        for (std::size_t i = 1; i < centers.size(); ++i)
            spacing += centers[i] - centers[i - 1];
        spacing /= static_cast<double>(centers.size() - 1);
        p.sigma_theta_rad = 0.5 * spacing;
    }

    p.decimation = std::max(1, static_cast<int>(std::lround(1.0 / (scene.frame_interval_s * 100.0))));
    return p;
}

void TrackerParams::validate() const
{
    if (q <= 0 || sigma_range_m <= 0 || sigma_theta_rad <= 0 || gate_chi2 <= 0 ||
        confirm_m <= 0 || confirm_n <= 0 || max_coast <= 0 || decimation <= 0 || v_max_mps <= 0)
        throw config_error("tracker params: all fields must be positive");
    if (confirm_m > confirm_n)
        throw config_error("tracker params: confirm_m must not exceed confirm_n");
}

void ensure_spd(Eigen::Matrix4d &P)
{
    P = 0.5 * (P + P.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(P);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig <= 0.0)
        P += (1e-12 - min_eig) * Eigen::Matrix4d::Identity();
    assert(Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(P).eigenvalues().minCoeff() > 0.0);
}

namespace {

Eigen::Matrix4d cv_transition(double dt)
{
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    F(0, 2) = dt;
    F(1, 3) = dt;
    return F;
}

Eigen::Matrix4d white_accel_noise(double dt, double q)
{
    const double a = dt * dt * dt / 3.0;
    const double b = dt * dt / 2.0;
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
    Q(0, 0) = Q(1, 1) = a * q;
    Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = b * q;
    Q(2, 2) = Q(3, 3) = dt * q;
    return Q;
}

void clamp_speed(Track &track, double v_max)
{
    const double speed = track.velocity().norm();
    const double limit = 2.0 * v_max;
    if (speed > limit) {
        track.x[2] *= limit / speed;
        track.x[3] *= limit / speed;
    }
}

void push_opportunity(Track &track, bool hit, int window)
{
    track.recent.push_back(hit);
    while (static_cast<int>(track.recent.size()) > window)
        track.recent.pop_front();
}

int hits_in_window(const Track &track)
{
    return static_cast<int>(std::count(track.recent.begin(), track.recent.end(), true));
}

} // namespace

void predict(Track &track, double dt, double q)
{
    if (dt <= 0.0)
        throw std::invalid_argument("predict: dt must be positive");
    const Eigen::Matrix4d F = cv_transition(dt);
    track.x = F * track.x;
    track.P = F * track.P * F.transpose() + white_accel_noise(dt, q);
    ensure_spd(track.P);
}

Eigen::Vector2d measurement_model(const Eigen::Vector4d &x, const BistaticPair &pair)
{
    const Vec2 p{x[0], x[1]};
    const double r_tx = (p - pair.tx).norm();
    const double r_rx = (p - pair.rx).norm();
    if (r_tx <= 0.0 || r_rx <= 0.0)
        throw std::domain_error("measurement_model: state coincides with tx or rx");
    Eigen::Vector2d z;
    z[0] = r_tx + r_rx - pair.baseline();
    z[1] = wrap_angle(angle_of(p - pair.tx) - pair.baseline_angle());
    return z;
}

Eigen::Matrix<double, 2, 4> measurement_jacobian(const Eigen::Vector4d &x,
                                                 const BistaticPair &pair)
{
    const Vec2 p{x[0], x[1]};
    const Vec2 d_tx = p - pair.tx;
    const Vec2 d_rx = p - pair.rx;
    const double r_tx = d_tx.norm();
    const double r_rx = d_rx.norm();
    if (r_tx <= 0.0 || r_rx <= 0.0)
        throw std::domain_error("measurement_jacobian: state coincides with tx or rx");

    Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
    // d(excess range)/dp = unit(p - tx) + unit(p - rx)
    H(0, 0) = d_tx.x() / r_tx + d_rx.x() / r_rx;
    H(0, 1) = d_tx.y() / r_tx + d_rx.y() / r_rx;
    // d(atan2(dy, dx))/dp = (-dy, dx) / r^2; the baseline angle is constant.
    const double r2 = r_tx * r_tx;
    H(1, 0) = -d_tx.y() / r2;
    H(1, 1) = d_tx.x() / r2;
    return H;
}

bool update(Track &track, const Eigen::Vector2d &z, const BistaticPair &pair,
            const TrackerParams &params)
{
    const Eigen::Vector2d z_pred = measurement_model(track.x, pair);
    const Eigen::Matrix<double, 2, 4> H = measurement_jacobian(track.x, pair);

    Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
    R(0, 0) = params.sigma_range_m * params.sigma_range_m;
    R(1, 1) = params.sigma_theta_rad * params.sigma_theta_rad;

    const Eigen::Matrix2d S = H * track.P * H.transpose() + R;
    Eigen::LDLT<Eigen::Matrix2d> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        return false;

    Eigen::Vector2d innovation = z - z_pred;
    innovation[1] = wrap_angle(innovation[1]);

    const Eigen::Matrix<double, 4, 2> K = track.P * H.transpose() * ldlt.solve(Eigen::Matrix2d::Identity());
    track.x += K * innovation;
    const Eigen::Matrix4d IKH = Eigen::Matrix4d::Identity() - K * H;
    track.P = IKH * track.P * IKH.transpose() + K * R * K.transpose();
    ensure_spd(track.P);
    clamp_speed(track, params.v_max_mps);
    return true;
}

Eigen::Vector2d detection_measurement(const Detection &det, const BistaticPair &pair)
{
    Eigen::Vector2d z;
    z[0] = det.excess_bistatic_range_m;
    z[1] = wrap_angle(det.aod_world_rad - pair.baseline_angle());
    return z;
}

Association associate(const std::vector<Track> &tracks, const std::vector<Detection> &detections,
                      const BistaticPair &pair, const TrackerParams &params)
{
    struct Candidate {
        double d2;
        int track;
        int det;
    };
    std::vector<Candidate> candidates;

    Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
    R(0, 0) = params.sigma_range_m * params.sigma_range_m;
    R(1, 1) = params.sigma_theta_rad * params.sigma_theta_rad;

    for (int ti = 0; ti < static_cast<int>(tracks.size()); ++ti) {
        const Track &track = tracks[ti];
        Eigen::Vector2d z_pred;
        Eigen::Matrix2d S;
        try {
            z_pred = measurement_model(track.x, pair);
            const auto H = measurement_jacobian(track.x, pair);
            S = H * track.P * H.transpose() + R;
        } catch (const std::domain_error &) {
            continue; // degenerate geometry: this track cannot gate anything
        }
        Eigen::LDLT<Eigen::Matrix2d> ldlt(S);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            continue;
        for (int di = 0; di < static_cast<int>(detections.size()); ++di) {
            Eigen::Vector2d nu = detection_measurement(detections[di], pair) - z_pred;
            nu[1] = wrap_angle(nu[1]);
            const double d2 = nu.dot(ldlt.solve(nu));
            if (d2 <= params.gate_chi2)
                candidates.push_back({d2, ti, di});
        }
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate &a, const Candidate &b) { return a.d2 < b.d2; });

    Association out;
    std::vector<bool> track_used(tracks.size(), false);
    std::vector<bool> det_used(detections.size(), false);
    for (const Candidate &c : candidates) {
        if (track_used[c.track] || det_used[c.det])
            continue;
        track_used[c.track] = true;
        det_used[c.det] = true;
        out.pairs.emplace_back(c.track, c.det);
    }
    for (int ti = 0; ti < static_cast<int>(tracks.size()); ++ti)
        if (!track_used[ti])
            out.unassigned_tracks.push_back(ti);
    for (int di = 0; di < static_cast<int>(detections.size()); ++di)
        if (!det_used[di])
            out.unassigned_detections.push_back(di);
    return out;
}

Tracker::Tracker(BistaticPair pair, TrackerParams params, double frame_interval_s)
    : pair_(std::move(pair)), params_(std::move(params)), frame_interval_s_(frame_interval_s)
{
    params_.validate();
    if (frame_interval_s_ <= 0.0)
        throw config_error("tracker: frame interval must be positive");
}

void Tracker::spawn(std::uint32_t k, const Detection &det)
{
    Track track;
    track.id = next_id_++;
    track.x << det.position.x(), det.position.y(), 0.0, 0.0;
    // Loose prior: a few range quanta of position uncertainty, velocity
    // anywhere up to the scene speed limit.
    const double sigma_pos = 4.0 * params_.sigma_range_m;
    track.P = Eigen::Matrix4d::Zero();
    track.P(0, 0) = track.P(1, 1) = sigma_pos * sigma_pos;
    track.P(2, 2) = track.P(3, 3) = params_.v_max_mps * params_.v_max_mps;
    track.status = TrackStatus::tentative;
    track.hits = 1;
    track.last_update_k = k;
    push_opportunity(track, true, params_.confirm_n);
    tracks_.push_back(std::move(track));
}

void Tracker::step(std::uint32_t k, const std::vector<Detection> &detections)
{
    if (stepped_ && k <= last_k_)
        throw stage_error("tracker: steps must have strictly increasing k");
    const double dt = stepped_ ? (k - last_k_) * frame_interval_s_
                               : params_.decimation * frame_interval_s_;

    for (Track &track : tracks_)
        predict(track, dt, params_.q);

    const Association assoc = associate(tracks_, detections, pair_, params_);

    for (const auto &[ti, di] : assoc.pairs) {
        Track &track = tracks_[ti];
        const bool ok = update(track, detection_measurement(detections[di], pair_), pair_, params_);
        if (!ok) {
            // Degenerate innovation covariance: treat as a miss.
            ++track.misses;
            ++track.miss_streak;
            push_opportunity(track, false, params_.confirm_n);
            continue;
        }
        ++track.hits;
        track.miss_streak = 0;
        track.last_update_k = k;
        push_opportunity(track, true, params_.confirm_n);
        if (track.status == TrackStatus::coasting)
            track.status = TrackStatus::confirmed;
        if (track.status == TrackStatus::tentative && hits_in_window(track) >= params_.confirm_m)
            track.status = TrackStatus::confirmed;
    }

    for (int ti : assoc.unassigned_tracks) {
        Track &track = tracks_[ti];
        ++track.misses;
        ++track.miss_streak;
        push_opportunity(track, false, params_.confirm_n);
        if (track.status == TrackStatus::confirmed)
            track.status = TrackStatus::coasting;
        if (track.miss_streak > params_.max_coast)
            track.status = TrackStatus::dead;
    }

    for (int di : assoc.unassigned_detections)
        spawn(k, detections[di]);

    for (const Track &track : tracks_) {
        if (track.status == TrackStatus::dead)
            continue;
        history_.push_back({k, track.id, track.x[0], track.x[1], track.x[2], track.x[3],
                            track.status});
    }

    tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                                 [](const Track &t) { return t.status == TrackStatus::dead; }),
                  tracks_.end());

    stepped_ = true;
    last_k_ = k;
}

std::vector<TrackSnapshot> track_stream(const std::vector<Detection> &detections,
                                        std::uint32_t num_frames, const BistaticPair &pair,
                                        const TrackerParams &params, double frame_interval_s)
{
    for (std::size_t i = 1; i < detections.size(); ++i)
        if (detections[i].k < detections[i - 1].k)
            throw stage_error("track_stream: detections must be ordered by k");

    Tracker tracker(pair, params, frame_interval_s);
    std::size_t cursor = 0;
    const std::uint32_t decim = static_cast<std::uint32_t>(params.decimation);
    for (std::uint32_t k = 0; k < num_frames; k += decim) {
        while (cursor < detections.size() && detections[cursor].k < k)
            ++cursor;
        std::vector<Detection> at_k;
        while (cursor < detections.size() && detections[cursor].k == k)
            at_k.push_back(detections[cursor++]);
        tracker.step(k, at_k);
    }
    return tracker.history();
}

} // namespace misac
