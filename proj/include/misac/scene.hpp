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

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "misac/geometry.hpp"

namespace misac {

enum class ToMode { zero, uniform_per_frame, drift };
enum class FoMode { zero, constant, random_walk };

/// Per-receiver clock asynchrony model. The timing offset (TO) shifts the
/// whole CIR in delay; the frequency offset (FO) imposes a common
/// time-varying phase on all taps.
struct ClockModel {
    ToMode to_mode = ToMode::zero;
    double to_uniform_max_s = 0.0; ///< uniform_per_frame: TO ~ U[0, max) each frame
    double to_initial_s = 0.0;     ///< drift: TO at t = 0
    double to_drift_rate = 0.0;    ///< drift: seconds of TO per second of run time

    FoMode fo_mode = FoMode::zero;
    double fo_hz = 0.0;                ///< constant FO, or random-walk initial value
    double fo_walk_std_hz_sqrt_s = 0.0; ///< random walk: std of FO increments per sqrt(second)
};

/// Static point scatterer.
struct Scatterer {
    Vec2 position{0.0, 0.0};
    std::complex<double> amplitude{1.0, 0.0};
    std::string label;
};

/// Parametric torso path.
struct TrajectorySpec {
    enum class Kind { waypoints, oval, pacing };

    Kind kind = Kind::waypoints;

    // waypoints: piecewise-linear (time, point) samples; position holds at
    // the endpoints outside the covered span.
    std::vector<double> times;
    std::vector<Vec2> points;

    // oval: p(t) = center + (a cos(w t + phase), b sin(w t + phase)),
    // w = 2 pi / period.
    Vec2 center{0.0, 0.0};
    double semi_axis_a = 0.0;
    double semi_axis_b = 0.0;
    double period_s = 0.0;
    double phase_rad = 0.0;

    // pacing: back-and-forth along a fixed direction at constant speed,
    // p(t) = origin + tri(t) * u(direction), tri a triangle wave with the
    // given amplitude.
    Vec2 origin{0.0, 0.0};
    double direction_rad = 0.0;
    double amplitude_m = 0.0;
    double speed_mps = 0.0;

    Vec2 position(double t) const;
    Vec2 velocity(double t) const;
    double max_speed() const;
};

/// One oscillating body part attached to the torso. Oscillation is along a
/// fixed world-frame direction so the part velocity stays analytic.
struct LimbOscillator {
    Vec2 attachment_offset{0.0, 0.0};
    double amplitude_m = 0.0;
    double frequency_hz = 0.0;
    double phase_rad = 0.0;
    double direction_rad = 0.0;
    std::complex<double> gain{0.0, 0.0};
    std::string label;
};

/// Moving target: a torso scatterer plus limb oscillators, each of which is
/// an independent point scatterer riding on the torso trajectory.
struct ArticulatedTarget {
    std::string label;
    TrajectorySpec torso;
    std::complex<double> torso_gain{0.3, 0.0};
    std::vector<LimbOscillator> limbs;

    /// Position of part i (0 = torso, 1.. = limbs) at time t.
    Vec2 part_position(int part, double t) const;
    /// Analytic velocity of part i at time t.
    Vec2 part_velocity(int part, double t) const;
    std::complex<double> part_gain(int part) const;
    const std::string &part_label(int part) const;
    int part_count() const { return 1 + static_cast<int>(limbs.size()); }
};

/// Full scene description; doubles as ground truth for evaluation.
struct SceneConfig {
    int schema_version = 1;

    Vec2 tx_position{0.0, 0.0};
    std::vector<Vec2> rx_positions;

    double carrier_frequency_hz = 60e9;
    double bandwidth_hz = 1.76e9;
    double frame_interval_s = 5e-4;
    int num_taps = 128;
    int num_beams = 12;
    std::vector<double> beam_centers_rad; ///< world frame, strictly increasing
    double beam_width_3db_rad = 0.0;
    double duration_s = 1.0;

    std::complex<double> los_amplitude{1.0, 0.0}; ///< the LOS path is always present
    std::vector<Scatterer> static_scatterers;
    std::vector<ArticulatedTarget> targets;
    std::vector<ClockModel> clock_models; ///< one per receiver

    double noise_floor = 0.0; ///< linear power per tap (total over both quadratures)
    double v_max_mps = 2.0;
    std::uint64_t rng_seed = 1;

    int rx_count() const { return static_cast<int>(rx_positions.size()); }
    double tap_spacing_s() const { return 1.0 / bandwidth_hz; }
    double range_quantum_m() const { return speed_of_light / bandwidth_hz; }
    double wavelength_m() const { return speed_of_light / carrier_frequency_hz; }
    std::uint32_t frame_count() const;
    BistaticPair pair(int rx_id) const { return {tx_position, rx_positions.at(rx_id)}; }

    /// Throws config_error on any violated invariant: dimensions, baseline,
    /// beam center ordering, TO range, torso speed bound, and the LOS
    /// dominance requirement (the LOS deposit must stay strictly the largest
    /// path magnitude for every receiver, otherwise LOS-based sync is
    /// untestable).
    void validate() const;
};

// ---- ground truth ---------------------------------------------------------

struct ClockTruth {
    int to_shift_taps = 0;     ///< round(TO / tap spacing)
    double to_seconds = 0.0;
    double fo_hz = 0.0;
    double fo_phase_rad = 0.0; ///< accumulated FO phase at this frame
};

struct TargetTruth {
    Vec2 position{0.0, 0.0}; ///< torso
    Vec2 velocity{0.0, 0.0};
};

/// One dynamic scatterer (torso or limb) as seen by one receiver.
struct PartTruth {
    int target = 0;
    int part = 0; ///< 0 = torso, 1.. = limbs
    Vec2 position{0.0, 0.0};
    double doppler_hz = 0.0;     ///< analytic bistatic Doppler
    double path_length_m = 0.0;  ///< total bistatic path length
    double aod_world_rad = 0.0;
};

struct FrameTruth {
    std::uint32_t k = 0;
    std::uint32_t rx_id = 0;
    ClockTruth clock;
    std::vector<TargetTruth> targets;
    std::vector<PartTruth> parts;
    int dropped_paths = 0; ///< scatterers past the last tap, dropped with a count
};

/// Per-receiver, per-frame truth records for test oracles and evaluation.
struct GroundTruthLog {
    std::vector<std::vector<FrameTruth>> frames; ///< [rx][k]
};

} // namespace misac
