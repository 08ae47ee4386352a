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

#include <functional>
#include <utility>
#include <vector>

#include "misac/cir.hpp"
#include "misac/scene.hpp"

namespace misac {

/// Gaussian beam pattern gain in (0, 1], peaking at beam_centers[b] with the
/// configured 3 dB width. theta is a world-frame angle.
double beam_gain(const SceneConfig &scene, int b, double theta);

/// Realized clock asynchrony for one receiver over a whole run. Timing
/// offsets are independent per frame where the mode says so; the FO phase is
/// accumulated so that a constant offset f gives phi(k) = 2 pi f k T.
class ClockSequence {
  public:
    ClockSequence(const SceneConfig &scene, int rx_id);

    double to_seconds(std::uint32_t k) const;
    int to_shift_taps(std::uint32_t k) const;
    double fo_hz(std::uint32_t k) const;
    double fo_phase_rad(std::uint32_t k) const;

  private:
    double tap_spacing_s_;
    std::vector<double> to_s_;
    std::vector<double> fo_hz_;
    std::vector<double> fo_phase_;
};

/// Synthesizes the frame at index k for one receiver, depositing the LOS,
/// static scatterers, and moving target parts into taps, and returns the
/// matching ground-truth entry. Doppler is emergent: the deposit phase
/// follows the bistatic path length, so phase evolves across frames at the
/// analytic Doppler rate recorded in the log.
std::pair<CirFrame, FrameTruth> synthesize_frame(const SceneConfig &scene, int rx_id,
                                                 std::uint32_t k, const ClockSequence &clock);

/// Convenience overload building the clock realization on the fly.
std::pair<CirFrame, FrameTruth> synthesize_frame(const SceneConfig &scene, int rx_id,
                                                 std::uint32_t k);

struct RunOutput {
    std::vector<CirStream> streams; ///< [rx][k]
    GroundTruthLog truth;
};

/// Synthesizes floor(duration / T) frames for every receiver. Deterministic
/// given the scene seed; receivers share target trajectories but draw
/// independent clock and noise realizations.
RunOutput synthesize_run(const SceneConfig &scene);

/// Streaming variant: frames are handed to the sink in (rx, k) order and not
/// retained, so arbitrarily long runs stay in constant memory.
void synthesize_run(const SceneConfig &scene,
                    const std::function<void(CirFrame &&, const FrameTruth &)> &sink);

} // namespace misac
