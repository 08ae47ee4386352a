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

#include "misac/sync.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "misac/errors.hpp"
#include "misac/geometry.hpp"

namespace misac {

namespace {

double median_inplace(std::vector<double> &v)
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

} // namespace

LosDetection detect_los(const CirFrame &frame, double threshold_kappa)
{
    if (frame.taps() == 0 || frame.beams() == 0)
        throw std::invalid_argument("detect_los: empty frame");

    const Eigen::VectorXd m = tap_peak_magnitude(frame);
    const int L = static_cast<int>(m.size());

    std::vector<double> scratch(m.data(), m.data() + L);
    const double med = median_inplace(scratch);
    for (int l = 0; l < L; ++l)
        scratch[l] = std::abs(m[l] - med);
    const double mad = median_inplace(scratch);
    const double threshold = med + threshold_kappa * mad;

    for (int l = 0; l < L; ++l) {
        const bool rises = (l == 0) || m[l] > m[l - 1];
        const bool falls = (l == L - 1) || m[l] > m[l + 1];
        if (rises && falls && m[l] >= threshold && m[l] > 0.0)
            return {l, threshold};
    }
    return {std::nullopt, threshold};
}

CirFrame align_to(const CirFrame &frame, int los_tap)
{
    const int L = frame.taps();
    if (los_tap < 0 || los_tap >= L)
        throw std::invalid_argument("align_to: LOS tap out of range");
    if (los_tap == 0)
        return frame;

    CirFrame out;
    out.k = frame.k;
    out.rx_id = frame.rx_id;
    out.gains = GainMatrix::Zero(frame.beams(), L);
    out.gains.leftCols(L - los_tap) = frame.gains.rightCols(L - los_tap);
    return out;
}

double estimate_fo_phase(const CirFrame &aligned, double min_magnitude)
{
    int best = 0;
    double best_mag = -1.0;
    for (int b = 0; b < aligned.beams(); ++b) {
        const double mag = std::abs(aligned.gains(b, 0));
        if (mag > best_mag) {
            best_mag = mag;
            best = b;
        }
    }
    if (best_mag <= min_magnitude)
        throw stage_error("estimate_fo_phase: LOS magnitude too small for a reliable phase");
    return wrap_angle(std::arg(aligned.gains(best, 0)));
}

CirFrame correct_fo(const CirFrame &frame, double fo_phase_rad)
{
    CirFrame out = frame;
    const Complex rot = std::polar(1.0, -fo_phase_rad);
    out.gains *= rot;
    return out;
}

std::optional<CirFrame> Synchronizer::process(const CirFrame &frame)
{
    const LosDetection det = detect_los(frame, policy_.threshold_kappa);

    SyncRecord rec;
    rec.k = frame.k;
    rec.threshold = det.threshold;

    if (det.tap) {
        const int tap = *det.tap;
        CirFrame aligned = align_to(frame, tap);
        const double phase = estimate_fo_phase(aligned);

        rec.los_tap = tap;
        rec.shift_taps = tap;
        rec.fo_phase_rad = phase;
        rec.los_magnitude = tap_peak_magnitude(frame)[tap];
        rec.status = SyncStatus::ok;
        report_.push_back(rec);

        previous_shift_ = tap;
        previous_phase_ = phase;
        have_previous_ = true;
        return correct_fo(aligned, phase);
    }

    if (policy_.drop_on_missing) {
        rec.status = SyncStatus::los_missing;
        report_.push_back(rec);
        return std::nullopt;
    }

    if (!have_previous_)
        throw stage_error("sync: first frame has no detectable LOS, nothing to reuse");

    rec.status = SyncStatus::reused_previous;
    rec.shift_taps = previous_shift_;
    rec.fo_phase_rad = previous_phase_;
    report_.push_back(rec);
    return correct_fo(align_to(frame, previous_shift_), previous_phase_);
}

std::pair<CirStream, SyncReport> sync_pipeline(const CirStream &stream, SyncPolicy policy)
{
    Synchronizer sync(policy);
    CirStream out;
    out.reserve(stream.size());
    for (const CirFrame &frame : stream)
        if (auto corrected = sync.process(frame))
            out.push_back(std::move(*corrected));
    return {std::move(out), sync.take_report()};
}

} // namespace misac
