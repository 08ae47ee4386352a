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

#include "misac/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "misac/errors.hpp"

namespace misac {

void BackgroundAccumulator::add(const CirFrame &frame)
{
    if (count_ == 0) {
        sum_ = Eigen::MatrixXd::Zero(frame.beams(), frame.taps());
        tap_count_ = Eigen::VectorXd::Zero(frame.taps());
    } else if (sum_.rows() != frame.gains.rows() || sum_.cols() != frame.gains.cols()) {
        throw stage_error("background: frame shape changed mid-stream");
    }
    // TO alignment zero-fills a per-frame tail (and dropped frames are all
    // zero), so a tap is averaged only over the frames where it carries data.
    // A plain mean would dilute the background at the far taps and promote
    // ordinary noise there to "foreground".
    const Eigen::MatrixXd abs = frame.gains.cwiseAbs();
    for (Eigen::Index l = 0; l < abs.cols(); ++l) {
        if (abs.col(l).sum() > 0.0) {
            sum_.col(l) += abs.col(l);
            tap_count_[l] += 1.0;
        }
    }
    ++count_;
}

Background BackgroundAccumulator::finish() const
{
    if (count_ == 0)
        throw stage_error("background: empty stream");
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(sum_.rows(), sum_.cols());
    for (Eigen::Index l = 0; l < sum_.cols(); ++l) {
        if (tap_count_[l] > 0.0)
            mean.col(l) = sum_.col(l) / tap_count_[l];
    }
    return {mean, count_};
}

Background estimate_background(const CirStream &frames)
{
    BackgroundAccumulator acc;
    for (const CirFrame &f : frames)
        acc.add(f);
    return acc.finish();
}

Eigen::MatrixXd foreground(const CirFrame &frame, const Background &bg)
{
    if (frame.gains.rows() != bg.mean_magnitude.rows() ||
        frame.gains.cols() != bg.mean_magnitude.cols())
        throw std::invalid_argument("foreground: frame/background shape mismatch");
    return (frame.gains.cwiseAbs() - bg.mean_magnitude).cwiseMax(0.0);
}

Eigen::VectorXd detection_statistic(const Eigen::MatrixXd &fg)
{
    return fg.array().square().colwise().sum().transpose();
}

namespace {

double median_of(std::vector<double> v)
{
    const std::size_t n = v.size();
    auto mid = v.begin() + n / 2;
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1)
        return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

// Topographic prominence: height above the higher of the two key saddles
// (minima on the walks toward higher terrain or the edges).
double prominence_at(const Eigen::VectorXd &s, int i)
{
    const int n = static_cast<int>(s.size());
    double left_min = s[i];
    for (int j = i - 1; j >= 0; --j) {
        if (s[j] > s[i])
            break;
        left_min = std::min(left_min, s[j]);
    }
    double right_min = s[i];
    for (int j = i + 1; j < n; ++j) {
        if (s[j] > s[i])
            break;
        right_min = std::min(right_min, s[j]);
    }
    return s[i] - std::max(left_min, right_min);
}

} // namespace

std::vector<int> detect_targets(const Eigen::VectorXd &s, const DetectParams &params)
{
    const int n = static_cast<int>(s.size());
    const int first = params.guard_taps + 1;
    if (first >= n)
        return {};

    // All statistics come from the searchable region beyond the guard: a
    // LOS residual inside the guard (imperfect alignment, clock jitter)
    // must neither set the prominence reference nor bias the noise gate,
    // or it would mask every legitimate target.
    const double s_max = s.tail(n - first).maxCoeff();
    if (s_max <= 0.0)
        return {};

    std::vector<double> scratch(s.data() + first, s.data() + n);
    const double med = median_of(scratch);
    for (double &x : scratch)
        x = std::abs(x - med);
    const double mad = median_of(std::move(scratch));
    const double gate = med + params.noise_gate_kappa * mad;

    std::vector<int> candidates;
    for (int l = first; l < n; ++l) {
        const bool rises = s[l] > s[l - 1]; // l - 1 >= guard >= 0
        const bool falls = (l == n - 1) || s[l] > s[l + 1];
        if (!rises || !falls)
            continue;
        if (s[l] < gate)
            continue;
        if (prominence_at(s, l) < params.prominence_ratio * s_max)
            continue;
        candidates.push_back(l);
    }

    std::sort(candidates.begin(), candidates.end(),
              [&](int a, int b) { return s[a] > s[b]; });

    std::vector<int> kept;
    for (int l : candidates) {
        if (static_cast<int>(kept.size()) >= params.max_targets)
            break;
        bool separated = true;
        for (int other : kept)
            if (std::abs(other - l) < params.min_separation_taps) {
                separated = false;
                break;
            }
        if (separated)
            kept.push_back(l);
    }
    return kept;
}

double aod_from_beams(const Eigen::MatrixXd &fg, int tap, const std::vector<double> &beam_centers_rad)
{
    const int beams = static_cast<int>(fg.rows());
    if (tap < 0 || tap >= fg.cols())
        throw std::invalid_argument("aod_from_beams: tap out of range");

    std::vector<int> order(beams);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fg(a, tap) > fg(b, tap); });

    double sum_sin = 0.0, sum_cos = 0.0, total = 0.0;
    for (int i = 0; i < std::min(3, beams); ++i) {
        const int b = order[i];
        const double w = fg(b, tap) * fg(b, tap);
        if (w <= 0.0)
            break;
        sum_sin += w * std::sin(beam_centers_rad.at(b));
        sum_cos += w * std::cos(beam_centers_rad.at(b));
        total += w;
    }
    if (total <= 0.0)
        throw std::domain_error("aod_from_beams: no foreground power at this tap");
    return std::atan2(sum_sin, sum_cos);
}

FrameDetections frame_detections(const CirFrame &frame, const Background &bg,
                                 const SceneConfig &scene, int rx_id, const DetectParams &params)
{
    const Eigen::MatrixXd fg = foreground(frame, bg);
    const Eigen::VectorXd s = detection_statistic(fg);
    const BistaticPair pair = scene.pair(rx_id);

    FrameDetections out;
    for (int tap : detect_targets(s, params)) {
        int beam = 0;
        fg.col(tap).maxCoeff(&beam);

        Detection det;
        det.k = frame.k;
        det.rx_id = static_cast<std::uint32_t>(rx_id);
        det.tap = tap;
        det.beam = beam;
        det.power = s[tap];
        det.excess_bistatic_range_m = tap * scene.range_quantum_m();
        det.aod_world_rad = aod_from_beams(fg, tap, scene.beam_centers_rad);

        const double theta = wrap_angle(det.aod_world_rad - pair.baseline_angle());
        try {
            det.position = localize_bistatic(det.excess_bistatic_range_m, theta, pair.tx, pair.rx);
        } catch (const std::domain_error &) {
            ++out.dropped;
            continue;
        }
        out.detections.push_back(det);
    }
    return out;
}

} // namespace misac
