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
#include <string>
#include <vector>

#include "misac/scene.hpp"

namespace misac {

// Canonical scenes. All use the 60 GHz / 1.76 GHz / 2 kHz defaults, a 30 dB
// LOS SNR noise floor, per-frame uniform timing offsets over [0, 32 taps) and
// a constant 1 kHz frequency offset, so every pipeline stage has work to do.

/// Evenly spaced beam centers from start to stop inclusive.
std::vector<double> make_beam_fan(double start_rad, double stop_rad, int n);

/// LOS path only: TX at the origin, one receiver 4 m away. Exercises TO/FO
/// compensation with nothing else in the channel.
SceneConfig los_only_scene(double duration_s = 1.0, std::uint64_t seed = 1);

/// LOS plus three static scatterers, no moving targets. Ground scene for the
/// FO residual-phase and false-alarm checks.
SceneConfig static_lab_scene(double duration_s = 1.0, std::uint64_t seed = 2);

/// One articulated walker (torso + one limb oscillator) on an oval path in a
/// 4 m bistatic cell, plus the static lab clutter.
SceneConfig single_walker_scene(double duration_s = 8.0, std::uint64_t seed = 3);

/// The same pacing walk observed by two receivers whose midpoint bistatic
/// angles are 40 and 140 degrees, with the walk direction at equal angles to
/// both bistatic bisectors. The predicted mean |Doppler| ratio is then purely
/// the bistatic-factor ratio cos(20 deg) / cos(70 deg) ~ 2.747.
SceneConfig pacing_pair_scene(double duration_s = 5.0, std::uint64_t seed = 4);

/// Predicted Doppler-scale ratio of the pacing pair at the walk midpoint.
double pacing_pair_predicted_xi_ratio();

/// Preset lookup by name: los, lab, walker, pair. Throws config_error on an
/// unknown name.
SceneConfig scene_preset(const std::string &name, double duration_s, std::uint64_t seed);
/// Preset with its own default duration and seed.
SceneConfig scene_preset(const std::string &name);
std::vector<std::string> scene_preset_names();

} // namespace misac
