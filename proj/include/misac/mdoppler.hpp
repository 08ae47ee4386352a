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
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "misac/cir.hpp"
#include "misac/geometry.hpp"
#include "misac/track.hpp"

namespace misac {

// Micro-Doppler extraction: collapse the FO-corrected CIR around the tracked
// target's tap into a one-sample-per-frame complex slow-time signal, then
// short-time Fourier transform it into a spectrogram.

enum class Window { hann, rect };

const char *to_string(Window w);
Window window_from_string(const std::string &name);

struct StftParams {
    int window_length = 128;
    int hop = 16;
    Window window = Window::hann;

    void validate() const; // throws config_error on non-positive fields
};

struct Spectrogram {
    // Rows are time bins, columns are Doppler bins sorted ascending.
    Eigen::MatrixXd magnitude;
    Eigen::VectorXd time_axis_s;     // window-center times
    Eigen::VectorXd doppler_axis_hz; // spans (-1/(2T), +1/(2T)], spacing 1/(window_length*T)
    StftParams params;
    double frame_interval_s = 0.0;
    std::uint32_t rx_id = 0;

    int time_bins() const { return static_cast<int>(magnitude.rows()); }
    int doppler_bins() const { return static_cast<int>(magnitude.cols()); }
};

struct SlowTime {
    std::uint32_t k_begin = 0; // frame index of samples[0]
    double frame_interval_s = 0.0;
    std::vector<Complex> samples;
    // Frames inside [k_begin, k_begin+samples.size()) with no track coverage.
    // Their samples are zero-filled so the time base stays uniform.
    std::vector<std::uint32_t> gaps;
    int track_id = 0;
    std::uint32_t rx_id = 0;
};

// The track id with the most confirmed/coasting snapshots; throws stage_error
// when the history holds no confirmed track.
int primary_track_id(const std::vector<TrackSnapshot> &history);

// Streaming slow-time extraction. Feed frames in k order; each frame inside
// the track's coverage contributes one sample: the coherent sum of the taps
// within +/- half_width of the track-predicted tap on the strongest beam
// (largest windowed power). Track states between tracker steps are propagated
// with their own constant velocity; coverage extends max_extrapolation_frames
// past the last snapshot.
class SlowTimeBuilder {
  public:
    // `snapshots` must belong to a single track id and be sorted by k.
    SlowTimeBuilder(std::vector<TrackSnapshot> snapshots, BistaticPair pair,
                    double range_quantum_m, double frame_interval_s, int half_width,
                    int max_extrapolation_frames);

    void feed(const CirFrame &frame);
    SlowTime finish() const;

  private:
    std::optional<int> predicted_tap(std::uint32_t k, int num_taps);

    std::vector<TrackSnapshot> snapshots_;
    BistaticPair pair_;
    double range_quantum_m_;
    double frame_interval_s_;
    int half_width_;
    int max_extrapolation_frames_;
    std::size_t cursor_ = 0;
    SlowTime out_;
    bool started_ = false;
};

// Batch form of SlowTimeBuilder over an in-memory stream, following the track
// with the given id (pass primary_track_id(history) for the usual case).
SlowTime target_slow_time(const CirStream &frames, const std::vector<TrackSnapshot> &history,
                          int track_id, const BistaticPair &pair, double range_quantum_m,
                          double frame_interval_s, int half_width = 2);

// Sliding-window FFT with unitary scaling (|X|/sqrt(N)), so each row's summed
// squared magnitude equals the windowed input energy (Parseval). Throws
// stage_error when the input is shorter than one window.
Spectrogram stft_spectrogram(const std::vector<Complex> &slow_time, double frame_interval_s,
                             const StftParams &params, std::uint32_t k_begin = 0,
                             std::uint32_t rx_id = 0);
Spectrogram stft_spectrogram(const SlowTime &slow_time, const StftParams &params);

struct PeakTrack {
    // One entry per spectrogram time bin; absent when the peak fails the floor.
    std::vector<std::optional<double>> doppler_hz;

    // Mean |Doppler| over present bins; throws stage_error when all absent.
    double mean_abs_doppler_hz() const;
};

// Per time bin: Doppler bin of maximum magnitude with parabolic 3-point
// refinement on the log magnitude; absent when the peak power is below
// floor_db above the bin-power median of that time bin.
PeakTrack peak_doppler_track(const Spectrogram &spec, double floor_db = 10.0);

} // namespace misac
