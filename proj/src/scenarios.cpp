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

#include "misac/scenarios.hpp"

#include <cmath>

#include "misac/errors.hpp"

namespace misac {

namespace {

constexpr double deg = M_PI / 180.0;

ClockModel default_clock()
{
    ClockModel c;
    c.to_mode = ToMode::uniform_per_frame;
    c.to_uniform_max_s = 32.0 / 1.76e9; // 32 tap quanta
    c.fo_mode = FoMode::constant;
    c.fo_hz = 1000.0;
    return c;
}

SceneConfig base_scene(double duration_s, std::uint64_t seed)
{
    SceneConfig s;
    s.duration_s = duration_s;
    s.rng_seed = seed;
    s.noise_floor = 1e-3; // LOS SNR 30 dB with the unit LOS amplitude
    s.los_amplitude = {1.0, 0.0};
    return s;
}

} // namespace

std::vector<double> make_beam_fan(double start_rad, double stop_rad, int n)
{
    std::vector<double> centers(n);
    for (int i = 0; i < n; ++i)
        centers[i] = start_rad + (stop_rad - start_rad) * i / (n - 1);
    return centers;
}

SceneConfig los_only_scene(double duration_s, std::uint64_t seed)
{
    SceneConfig s = base_scene(duration_s, seed);
    s.tx_position = {0.0, 0.0};
    s.rx_positions = {{4.0, 0.0}};
    // Fan from the baseline (0 deg, exact LOS hit) up over the room.
    s.beam_centers_rad = make_beam_fan(0.0, 82.5 * deg, 12);
    s.beam_width_3db_rad = 9.0 * deg; // 1.2x the 7.5 deg spacing
    s.clock_models = {default_clock()};
    return s;
}

SceneConfig static_lab_scene(double duration_s, std::uint64_t seed)
{
    SceneConfig s = los_only_scene(duration_s, seed);
    // Furniture sits against the walls, clear of the walking loop used by the
    // walker scene (taps 8-19); cabinet tap 4, shelf tap 25, pillar tap 26.
    s.static_scatterers = {
        {{2.8, 1.2}, {0.8, 0.0}, "cabinet"}, // AoD 23.2 deg, excess 0.74 m
        {{0.6, 3.4}, {0.5, 0.0}, "shelf"},   // AoD 80.0 deg, excess 4.26 m
        {{4.5, 3.0}, {0.35, 0.0}, "pillar"}, // AoD 33.7 deg, excess 4.45 m
    };
    return s;
}

SceneConfig single_walker_scene(double duration_s, std::uint64_t seed)
{
    SceneConfig s = static_lab_scene(duration_s, seed);

    ArticulatedTarget walker;
    walker.label = "walker";
    walker.torso.kind = TrajectorySpec::Kind::oval;
    walker.torso.center = {2.0, 2.4};
    walker.torso.semi_axis_a = 1.0;
    walker.torso.semi_axis_b = 0.6;
    walker.torso.period_s = 8.0;   // max torso speed 2 pi / 8 = 0.785 m/s
    walker.torso_gain = {0.3, 0.0};

    LimbOscillator arm;
    arm.attachment_offset = {0.25, 0.0};
    arm.amplitude_m = 0.15;  // peak limb speed 2 pi * 1.2 * 0.15 = 1.13 m/s
    arm.frequency_hz = 1.2;
    arm.direction_rad = -45.0 * deg;
    arm.gain = {0.12, 0.0};
    arm.label = "arm";
    walker.limbs.push_back(arm);

    s.targets.push_back(std::move(walker));
    return s;
}

SceneConfig pacing_pair_scene(double duration_s, std::uint64_t seed)
{
    SceneConfig s = base_scene(duration_s, seed);
    s.tx_position = {0.0, 0.0};

    // Walk midpoint 12 m up from the TX; both receivers 12 m from the
    // midpoint, so the TX-midpoint-RX triangles are isoceles and the LOS
    // angles of departure are exactly 20 and 70 degrees. Bistatic angles at
    // the midpoint: 40 deg (rx0) and 140 deg (rx1); the walk direction
    // (-45 deg) sits 25 deg from both bistatic bisectors (-70 and -20 deg).
    const Vec2 mid{0.0, 12.0};
    const double r = 12.0;
    s.rx_positions = {
        mid + r * Vec2{std::cos(-50.0 * deg), std::sin(-50.0 * deg)},
        mid + r * Vec2{std::cos(+50.0 * deg), std::sin(+50.0 * deg)},
    };

    // Fan covering both LOS directions (20 / 70 deg) and the walk (86-94 deg).
    s.beam_centers_rad = make_beam_fan(20.0 * deg, 97.0 * deg, 12);
    s.beam_width_3db_rad = 8.4 * deg; // 1.2x the 7 deg spacing
    s.clock_models = {default_clock(), default_clock()};

    ArticulatedTarget pacer;
    pacer.label = "pacer";
    pacer.torso.kind = TrajectorySpec::Kind::pacing;
    pacer.torso.origin = mid;
    pacer.torso.direction_rad = -45.0 * deg;
    pacer.torso.amplitude_m = 1.0;
    pacer.torso.speed_mps = 0.8;
    pacer.torso_gain = {0.35, 0.0};
    s.targets.push_back(std::move(pacer));

    return s;
}

double pacing_pair_predicted_xi_ratio()
{
    return std::cos(20.0 * deg) / std::cos(70.0 * deg);
}

SceneConfig scene_preset(const std::string &name, double duration_s, std::uint64_t seed)
{
    if (name == "los")
        return los_only_scene(duration_s, seed);
    if (name == "lab")
        return static_lab_scene(duration_s, seed);
    if (name == "walker")
        return single_walker_scene(duration_s, seed);
    if (name == "pair")
        return pacing_pair_scene(duration_s, seed);
    throw config_error("unknown scene preset '" + name + "' (los, lab, walker, pair)");
}

SceneConfig scene_preset(const std::string &name)
{
    if (name == "los")
        return los_only_scene();
    if (name == "lab")
        return static_lab_scene();
    if (name == "walker")
        return single_walker_scene();
    if (name == "pair")
        return pacing_pair_scene();
    throw config_error("unknown scene preset '" + name + "' (los, lab, walker, pair)");
}

std::vector<std::string> scene_preset_names() { return {"los", "lab", "walker", "pair"}; }

} // namespace misac
