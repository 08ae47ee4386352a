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

#include "misac/mdoppler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <unsupported/Eigen/FFT>

#include "misac/errors.hpp"

namespace misac {

const char *to_string(Window w)
{
    switch (w) {
    case Window::hann: return "hann";
    case Window::rect: return "rect";
    }
    return "unknown";
}

Window window_from_string(const std::string &name)
{
    if (name == "hann")
        return Window::hann;
    if (name == "rect")
        return Window::rect;
    throw config_error("unknown window type '" + name + "' (expected hann or rect)");
}

void StftParams::validate() const
{
    if (window_length <= 0 || hop <= 0)
        throw config_error("stft params: window_length and hop must be positive");
}

int primary_track_id(const std::vector<TrackSnapshot> &history)
{
    std::map<int, int> counts;
    for (const TrackSnapshot &s : history)
        if (s.status == TrackStatus::confirmed || s.status == TrackStatus::coasting)
            ++counts[s.id];
    if (counts.empty())
        throw stage_error("no confirmed track in history");
    int best_id = 0, best_count = -1;
    for (const auto &[id, count] : counts)
        if (count > best_count) {
            best_id = id;
            best_count = count;
        }
    return best_id;
}

SlowTimeBuilder::SlowTimeBuilder(std::vector<TrackSnapshot> snapshots, BistaticPair pair,
                                 double range_quantum_m, double frame_interval_s, int half_width,
                                 int max_extrapolation_frames)
    : snapshots_(std::move(snapshots)), pair_(std::move(pair)), range_quantum_m_(range_quantum_m),
      frame_interval_s_(frame_interval_s), half_width_(half_width),
      max_extrapolation_frames_(max_extrapolation_frames)
{
    if (snapshots_.empty())
        throw stage_error("slow-time: empty track history");
    if (half_width_ < 0)
        throw config_error("slow-time: half_width must be non-negative");
    for (std::size_t i = 1; i < snapshots_.size(); ++i)
        if (snapshots_[i].k <= snapshots_[i - 1].k ||
            snapshots_[i].id != snapshots_[i - 1].id)
            throw stage_error("slow-time: snapshots must be one track sorted by k");
    out_.track_id = snapshots_.front().id;
}

std::optional<int> SlowTimeBuilder::predicted_tap(std::uint32_t k, int num_taps)
{
    if (k < snapshots_.front().k)
        return std::nullopt;
    while (cursor_ + 1 < snapshots_.size() && snapshots_[cursor_ + 1].k <= k)
        ++cursor_;
    const TrackSnapshot &snap = snapshots_[cursor_];
    const std::uint32_t ahead = k - snap.k;
    if (cursor_ + 1 == snapshots_.size() &&
        ahead > static_cast<std::uint32_t>(max_extrapolation_frames_))
        return std::nullopt;
    const double dt = ahead * frame_interval_s_;
    const Vec2 p{snap.x + snap.vx * dt, snap.y + snap.vy * dt};
    const long tap = std::lround(pair_.excess_range(p) / range_quantum_m_);
    if (tap < 0 || tap >= num_taps)
        return std::nullopt;
    return static_cast<int>(tap);
}

void SlowTimeBuilder::feed(const CirFrame &frame)
{
    const std::optional<int> tap = predicted_tap(frame.k, frame.taps());
    if (!tap) {
        if (started_) {
            out_.gaps.push_back(frame.k);
            out_.samples.push_back(Complex{0.0, 0.0});
        }
        return; // frames before coverage are trimmed, not gap-recorded
    }
    if (!started_) {
        started_ = true;
        out_.k_begin = frame.k;
        out_.frame_interval_s = frame_interval_s_;
        out_.rx_id = frame.rx_id;
    }

    const int lo = std::max(0, *tap - half_width_);
    const int hi = std::min(frame.taps() - 1, *tap + half_width_);
    int best_beam = 0;
    double best_power = -1.0;
    for (int b = 0; b < frame.beams(); ++b) {
        double power = 0.0;
        for (int l = lo; l <= hi; ++l)
            power += std::norm(frame.gains(b, l));
        if (power > best_power) {
            best_power = power;
            best_beam = b;
        }
    }
    Complex sample{0.0, 0.0};
    for (int l = lo; l <= hi; ++l)
        sample += frame.gains(best_beam, l);
    out_.samples.push_back(sample);
}

SlowTime SlowTimeBuilder::finish() const
{
    if (!started_)
        throw stage_error("slow-time: track never covered the fed frames");
    return out_;
}

SlowTime target_slow_time(const CirStream &frames, const std::vector<TrackSnapshot> &history,
                          int track_id, const BistaticPair &pair, double range_quantum_m,
                          double frame_interval_s, int half_width)
{
    std::vector<TrackSnapshot> snapshots;
    for (const TrackSnapshot &s : history)
        if (s.id == track_id)
            snapshots.push_back(s);

    int max_extrap = 0;
    for (std::size_t i = 1; i < snapshots.size(); ++i)
        max_extrap = std::max(max_extrap, static_cast<int>(snapshots[i].k - snapshots[i - 1].k));
    if (max_extrap == 0)
        max_extrap = 1;

    SlowTimeBuilder builder(std::move(snapshots), pair, range_quantum_m, frame_interval_s,
                            half_width, max_extrap);
    for (const CirFrame &frame : frames)
        builder.feed(frame);
    return builder.finish();
}

namespace {

std::vector<double> make_window(const StftParams &params)
{
    const int n = params.window_length;
    std::vector<double> w(n, 1.0);
    if (params.window == Window::hann)
        for (int i = 0; i < n; ++i)
            w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n)); // periodic Hann
    return w;
}

} // namespace

Spectrogram stft_spectrogram(const std::vector<Complex> &slow_time, double frame_interval_s,
                             const StftParams &params, std::uint32_t k_begin, std::uint32_t rx_id)
{
    params.validate();
    if (frame_interval_s <= 0.0)
        throw config_error("stft: frame interval must be positive");
    const int n = params.window_length;
    if (static_cast<int>(slow_time.size()) < n)
        throw stage_error("stft: input shorter than one window");

    const int num_windows = 1 + (static_cast<int>(slow_time.size()) - n) / params.hop;
    const std::vector<double> window = make_window(params);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    Spectrogram spec;
    spec.params = params;
    spec.frame_interval_s = frame_interval_s;
    spec.rx_id = rx_id;
    spec.magnitude.resize(num_windows, n);
    spec.time_axis_s.resize(num_windows);
    spec.doppler_axis_hz.resize(n);

    // Doppler axis ascending over (-1/(2T), +1/(2T)]: bin i holds frequency
    // (i - (n/2 - 1)) * bin_spacing; the Nyquist bin carries +1/(2T).
    const double bin_spacing = 1.0 / (n * frame_interval_s);
    for (int i = 0; i < n; ++i)
        spec.doppler_axis_hz[i] = (i - (n / 2 - 1)) * bin_spacing;

    Eigen::FFT<double> fft;
    std::vector<Complex> buf(n), freq(n);
    for (int wi = 0; wi < num_windows; ++wi) {
        const int start = wi * params.hop;
        for (int i = 0; i < n; ++i)
            buf[i] = slow_time[start + i] * window[i];
        fft.fwd(freq, buf);
        for (int i = 0; i < n; ++i) {
            const int m = i - (n / 2 - 1);                // signed frequency index
            const int src = m >= 0 ? m : m + n;           // FFT output index
            spec.magnitude(wi, i) = std::abs(freq[src]) * scale;
        }
        spec.time_axis_s[wi] = (static_cast<double>(k_begin) + start + n / 2.0) * frame_interval_s;
    }
    return spec;
}

Spectrogram stft_spectrogram(const SlowTime &slow_time, const StftParams &params)
{
    return stft_spectrogram(slow_time.samples, slow_time.frame_interval_s, params,
                            slow_time.k_begin, slow_time.rx_id);
}

double PeakTrack::mean_abs_doppler_hz() const
{
    double sum = 0.0;
    int count = 0;
    for (const auto &d : doppler_hz)
        if (d) {
            sum += std::abs(*d);
            ++count;
        }
    if (count == 0)
        throw stage_error("peak track: no time bin above the floor");
    return sum / count;
}

PeakTrack peak_doppler_track(const Spectrogram &spec, double floor_db)
{
    PeakTrack out;
    out.doppler_hz.reserve(spec.time_bins());
    const double floor_ratio = std::pow(10.0, floor_db / 10.0);
    const int n = spec.doppler_bins();

    std::vector<double> power(n);
    for (int wi = 0; wi < spec.time_bins(); ++wi) {
        for (int i = 0; i < n; ++i)
            power[i] = spec.magnitude(wi, i) * spec.magnitude(wi, i);

        std::vector<double> sorted = power;
        auto mid = sorted.begin() + n / 2;
        std::nth_element(sorted.begin(), mid, sorted.end());
        double median = *mid;
        if (n % 2 == 0) {
            const double lo = *std::max_element(sorted.begin(), mid);
            median = 0.5 * (median + lo);
        }

        int peak = 0;
        for (int i = 1; i < n; ++i)
            if (power[i] > power[peak])
                peak = i;

        if (power[peak] <= 0.0 || power[peak] < median * floor_ratio) {
            out.doppler_hz.emplace_back(std::nullopt);
            continue;
        }

        double offset = 0.0;
        if (peak > 0 && peak < n - 1 && spec.magnitude(wi, peak - 1) > 0.0 &&
            spec.magnitude(wi, peak + 1) > 0.0) {
            const double lm = std::log(spec.magnitude(wi, peak - 1));
            const double l0 = std::log(spec.magnitude(wi, peak));
            const double lp = std::log(spec.magnitude(wi, peak + 1));
            const double denom = lm - 2.0 * l0 + lp;
            if (denom < 0.0) {
                offset = 0.5 * (lm - lp) / denom;
                offset = std::clamp(offset, -0.5, 0.5);
            }
        }
        const double bin_spacing = spec.doppler_axis_hz[1] - spec.doppler_axis_hz[0];
        out.doppler_hz.emplace_back(spec.doppler_axis_hz[peak] + offset * bin_spacing);
    }
    return out;
}

} // namespace misac
