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

#include "misac/scene.hpp"

#include <cmath>
#include <string>

#include "misac/errors.hpp"
#include "misac/sim.hpp"

namespace misac {

namespace {

void require(bool ok, const std::string &msg)
{
    if (!ok)
        throw config_error("scene: " + msg);
}

} // namespace

// ---- trajectories ----------------------------------------------------------

Vec2 TrajectorySpec::position(double t) const
{
    switch (kind) {
    case Kind::waypoints: {
        if (points.empty())
            return {0.0, 0.0};
        if (t <= times.front())
            return points.front();
        if (t >= times.back())
            return points.back();
        std::size_t i = 1;
        while (times[i] < t)
            ++i;
        const double f = (t - times[i - 1]) / (times[i] - times[i - 1]);
        return points[i - 1] + f * (points[i] - points[i - 1]);
    }
    case Kind::oval: {
        const double w = 2.0 * M_PI / period_s;
        return center + Vec2{semi_axis_a * std::cos(w * t + phase_rad),
                             semi_axis_b * std::sin(w * t + phase_rad)};
    }
    case Kind::pacing: {
        if (amplitude_m <= 0.0 || speed_mps <= 0.0)
            return origin;
        const double period = 4.0 * amplitude_m / speed_mps;
        double tau = std::fmod(t, period);
        if (tau < 0.0)
            tau += period;
        const double a = amplitude_m, v = speed_mps;
        double s;
        if (tau < a / v)
            s = v * tau;
        else if (tau < 3.0 * a / v)
            s = a - v * (tau - a / v);
        else
            s = -a + v * (tau - 3.0 * a / v);
        return origin + s * unit_vector(direction_rad);
    }
    }
    return {0.0, 0.0};
}

Vec2 TrajectorySpec::velocity(double t) const
{
    switch (kind) {
    case Kind::waypoints: {
        if (points.size() < 2 || t < times.front() || t >= times.back())
            return {0.0, 0.0};
        std::size_t i = 1;
        while (times[i] <= t && i + 1 < times.size())
            ++i;
        return (points[i] - points[i - 1]) / (times[i] - times[i - 1]);
    }
    case Kind::oval: {
        const double w = 2.0 * M_PI / period_s;
        return {-semi_axis_a * w * std::sin(w * t + phase_rad),
                semi_axis_b * w * std::cos(w * t + phase_rad)};
    }
    case Kind::pacing: {
        if (amplitude_m <= 0.0 || speed_mps <= 0.0)
            return {0.0, 0.0};
        const double period = 4.0 * amplitude_m / speed_mps;
        double tau = std::fmod(t, period);
        if (tau < 0.0)
            tau += period;
        const double a = amplitude_m, v = speed_mps;
        const double sign = (tau < a / v || tau >= 3.0 * a / v) ? 1.0 : -1.0;
        return sign * v * unit_vector(direction_rad);
    }
    }
    return {0.0, 0.0};
}

double TrajectorySpec::max_speed() const
{
    switch (kind) {
    case Kind::waypoints: {
        double best = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i)
            best = std::max(best, (points[i] - points[i - 1]).norm() / (times[i] - times[i - 1]));
        return best;
    }
    case Kind::oval:
        if (period_s <= 0.0)
            return 0.0;
        return 2.0 * M_PI / period_s * std::max(semi_axis_a, semi_axis_b);
    case Kind::pacing:
        return speed_mps;
    }
    return 0.0;
}

// ---- articulated target ----------------------------------------------------

Vec2 ArticulatedTarget::part_position(int part, double t) const
{
    Vec2 p = torso.position(t);
    if (part == 0)
        return p;
    const LimbOscillator &limb = limbs.at(part - 1);
    const double s = limb.amplitude_m * std::sin(2.0 * M_PI * limb.frequency_hz * t + limb.phase_rad);
    return p + limb.attachment_offset + s * unit_vector(limb.direction_rad);
}

Vec2 ArticulatedTarget::part_velocity(int part, double t) const
{
    Vec2 v = torso.velocity(t);
    if (part == 0)
        return v;
    const LimbOscillator &limb = limbs.at(part - 1);
    const double w = 2.0 * M_PI * limb.frequency_hz;
    const double ds = limb.amplitude_m * w * std::cos(w * t + limb.phase_rad);
    return v + ds * unit_vector(limb.direction_rad);
}

std::complex<double> ArticulatedTarget::part_gain(int part) const
{
    return part == 0 ? torso_gain : limbs.at(part - 1).gain;
}

const std::string &ArticulatedTarget::part_label(int part) const
{
    return part == 0 ? label : limbs.at(part - 1).label;
}

// ---- scene -----------------------------------------------------------------

std::uint32_t SceneConfig::frame_count() const
{
    return static_cast<std::uint32_t>(std::floor(duration_s / frame_interval_s));
}

void SceneConfig::validate() const
{
    require(num_beams >= 1, "num_beams must be >= 1");
    require(num_taps >= 2, "num_taps must be >= 2");
    require(bandwidth_hz > 0.0, "bandwidth must be positive");
    require(frame_interval_s > 0.0, "frame_interval must be positive");
    require(carrier_frequency_hz > 0.0, "carrier_frequency must be positive");
    require(duration_s > 0.0, "duration must be positive");
    require(frame_count() >= 1, "duration covers no frame");
    require(noise_floor >= 0.0, "noise_floor must be nonnegative");
    require(!rx_positions.empty(), "at least one receiver required");
    require(static_cast<int>(clock_models.size()) == rx_count(),
            "need exactly one clock model per receiver");

    require(static_cast<int>(beam_centers_rad.size()) == num_beams,
            "beam_centers must have num_beams entries");
    for (std::size_t i = 1; i < beam_centers_rad.size(); ++i)
        require(beam_centers_rad[i] > beam_centers_rad[i - 1],
                "beam_centers must be strictly increasing");
    require(beam_width_3db_rad > 0.0, "beam_width_3db must be positive");

    for (const Vec2 &rx : rx_positions)
        require((rx - tx_position).norm() > 0.0, "RX must not coincide with TX");

    const double to_limit = (num_taps - 1) * tap_spacing_s();
    for (const ClockModel &cm : clock_models) {
        switch (cm.to_mode) {
        case ToMode::zero:
            break;
        case ToMode::uniform_per_frame:
            require(cm.to_uniform_max_s >= 0.0 && cm.to_uniform_max_s <= to_limit,
                    "uniform TO range must lie in [0, (L-1) * tap spacing)");
            break;
        case ToMode::drift: {
            const double t0 = cm.to_initial_s;
            const double t1 = cm.to_initial_s + cm.to_drift_rate * duration_s;
            require(t0 >= 0.0 && t0 < to_limit && t1 >= 0.0 && t1 < to_limit,
                    "drifting TO leaves [0, (L-1) * tap spacing) during the run");
            break;
        }
        }
        if (cm.fo_mode == FoMode::random_walk)
            require(cm.fo_walk_std_hz_sqrt_s >= 0.0, "FO walk std must be nonnegative");
    }

    require(std::abs(los_amplitude) > 0.0, "LOS amplitude must be nonzero");
    for (const Scatterer &s : static_scatterers)
        require(std::abs(s.amplitude) > 0.0, "static scatterer amplitude must be nonzero");

    for (const ArticulatedTarget &tgt : targets) {
        require(std::abs(tgt.torso_gain) > 0.0, "target torso gain must be nonzero");
        for (const LimbOscillator &limb : tgt.limbs)
            require(std::abs(limb.gain) > 0.0, "limb gain must be nonzero");
        if (tgt.torso.kind == TrajectorySpec::Kind::oval)
            require(tgt.torso.period_s > 0.0, "oval trajectory needs a positive period");
        if (tgt.torso.kind == TrajectorySpec::Kind::waypoints) {
            require(!tgt.torso.points.empty() && tgt.torso.points.size() == tgt.torso.times.size(),
                    "waypoint trajectory needs matching times and points");
            for (std::size_t i = 1; i < tgt.torso.times.size(); ++i)
                require(tgt.torso.times[i] > tgt.torso.times[i - 1],
                        "waypoint times must be strictly increasing");
        }
        require(tgt.torso.max_speed() <= v_max_mps,
                "torso speed exceeds v_max (" + tgt.label + ")");
    }

    // LOS dominance: LOS-based sync needs the LOS deposit to stay strictly
    // the strongest path for every receiver. Every other path magnitude is
    // bounded by its amplitude (beam gain <= 1), so compare against the LOS
    // amplitude at its best beam.
    for (int r = 0; r < rx_count(); ++r) {
        const double aod = angle_of(rx_positions[r] - tx_position);
        double g_los = 0.0;
        for (int b = 0; b < num_beams; ++b)
            g_los = std::max(g_los, beam_gain(*this, b, aod));
        const double los_mag = std::abs(los_amplitude) * g_los;

        double strongest_other = 0.0;
        for (const Scatterer &s : static_scatterers)
            strongest_other = std::max(strongest_other, std::abs(s.amplitude));
        for (const ArticulatedTarget &tgt : targets)
            for (int p = 0; p < tgt.part_count(); ++p)
                strongest_other = std::max(strongest_other, std::abs(tgt.part_gain(p)));

        require(los_mag > strongest_other,
                "LOS path is not strictly the strongest for receiver " + std::to_string(r) +
                    " (LOS " + std::to_string(los_mag) + " vs " + std::to_string(strongest_other) +
                    "); aim a beam at the receiver or lower scatterer amplitudes");
    }
}

} // namespace misac
