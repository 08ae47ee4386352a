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

#include "misac/sim.hpp"

#include <cmath>

#include "misac/rng.hpp"

namespace misac {

double beam_gain(const SceneConfig &scene, int b, double theta)
{
    // Gaussian mainlobe; sigma chosen so the gain is exactly 0.5 at
    // +-beam_width_3db/2 from the center (2.355 = 2 sqrt(2 ln 2)).
    const double sigma = scene.beam_width_3db_rad / 2.3548200450309493;
    const double d = wrap_angle(theta - scene.beam_centers_rad.at(b));
    return std::exp(-0.5 * d * d / (sigma * sigma));
}

ClockSequence::ClockSequence(const SceneConfig &scene, int rx_id)
{
    tap_spacing_s_ = scene.tap_spacing_s();
    const ClockModel &cm = scene.clock_models.at(rx_id);
    const std::uint32_t frames = scene.frame_count();
    const double T = scene.frame_interval_s;

    to_s_.resize(frames);
    fo_hz_.resize(frames);
    fo_phase_.resize(frames);

    double phase = 0.0;
    double fo = cm.fo_hz;
    for (std::uint32_t k = 0; k < frames; ++k) {
        switch (cm.to_mode) {
        case ToMode::zero:
            to_s_[k] = 0.0;
            break;
        case ToMode::uniform_per_frame: {
            KeyedRng rng(scene.rng_seed, rx_id, k, KeyedRng::clock_stream);
            to_s_[k] = rng.next_uniform() * cm.to_uniform_max_s;
            break;
        }
        case ToMode::drift:
            to_s_[k] = cm.to_initial_s + cm.to_drift_rate * k * T;
            break;
        }

        switch (cm.fo_mode) {
        case FoMode::zero:
            fo = 0.0;
            break;
        case FoMode::constant:
            fo = cm.fo_hz;
            break;
        case FoMode::random_walk:
            if (k > 0) {
                KeyedRng rng(scene.rng_seed, rx_id, k, KeyedRng::clock_stream + 16);
                fo += cm.fo_walk_std_hz_sqrt_s * std::sqrt(T) * rng.next_normal();
            }
            break;
        }
        fo_hz_[k] = fo;
        if (k > 0)
            phase += 2.0 * M_PI * fo * T;
        fo_phase_[k] = phase;
    }
}

double ClockSequence::to_seconds(std::uint32_t k) const { return to_s_.at(k); }

int ClockSequence::to_shift_taps(std::uint32_t k) const
{
    return static_cast<int>(std::lround(to_s_.at(k) / tap_spacing_s_));
}

double ClockSequence::fo_hz(std::uint32_t k) const { return fo_hz_.at(k); }

double ClockSequence::fo_phase_rad(std::uint32_t k) const { return fo_phase_.at(k); }

namespace {

struct Path {
    Complex amplitude;
    double total_length_m;
    double aod_world_rad;
};

void deposit(CirFrame &frame, const SceneConfig &scene, const Path &path, double baseline_m,
             int to_shift_taps, double fo_phase, int &dropped)
{
    // The timing offset shifts the whole (already tap-quantized) CIR by an
    // integer number of taps: round the excess delay first, then add the shift.
    const int tap = static_cast<int>(std::lround((path.total_length_m - baseline_m) /
                                                 scene.range_quantum_m())) +
                    to_shift_taps;
    if (tap < 0 || tap >= scene.num_taps) {
        ++dropped;
        return;
    }
    // Propagation delay phase plus the receiver's accumulated FO phase. The
    // -2 pi d / lambda convention makes the slow-time phase advance at the
    // analytic Doppler rate f_D = -(1/lambda) d(d_total)/dt.
    const double phase = -2.0 * M_PI * path.total_length_m / scene.wavelength_m() + fo_phase;
    const Complex value = path.amplitude * std::polar(1.0, phase);
    for (int b = 0; b < scene.num_beams; ++b)
        frame.gains(b, tap) += value * beam_gain(scene, b, path.aod_world_rad);
}

} // namespace

std::pair<CirFrame, FrameTruth> synthesize_frame(const SceneConfig &scene, int rx_id,
                                                 std::uint32_t k, const ClockSequence &clock)
{
    const double t = k * scene.frame_interval_s;
    const BistaticPair pair = scene.pair(rx_id);
    const double baseline = pair.baseline();
    const int to_shift = clock.to_shift_taps(k);
    const double fo_phase = clock.fo_phase_rad(k);

    CirFrame frame;
    frame.k = k;
    frame.rx_id = static_cast<std::uint32_t>(rx_id);
    frame.gains = GainMatrix::Zero(scene.num_beams, scene.num_taps);

    FrameTruth truth;
    truth.k = k;
    truth.rx_id = static_cast<std::uint32_t>(rx_id);
    truth.clock = {clock.to_shift_taps(k), clock.to_seconds(k), clock.fo_hz(k), fo_phase};

    // LOS path: zero excess range, departure toward the receiver.
    deposit(frame, scene,
            {scene.los_amplitude, baseline, angle_of(pair.rx - pair.tx)},
            baseline, to_shift, fo_phase, truth.dropped_paths);

    for (const Scatterer &s : scene.static_scatterers)
        deposit(frame, scene, {s.amplitude, pair.sum_range(s.position), pair.aod_world(s.position)},
                baseline, to_shift, fo_phase, truth.dropped_paths);

    for (std::size_t ti = 0; ti < scene.targets.size(); ++ti) {
        const ArticulatedTarget &tgt = scene.targets[ti];
        truth.targets.push_back({tgt.torso.position(t), tgt.torso.velocity(t)});
        for (int p = 0; p < tgt.part_count(); ++p) {
            const Vec2 pos = tgt.part_position(p, t);
            const Vec2 vel = tgt.part_velocity(p, t);
            const double d_total = pair.sum_range(pos);
            deposit(frame, scene, {tgt.part_gain(p), d_total, pair.aod_world(pos)}, baseline,
                    to_shift, fo_phase, truth.dropped_paths);
            truth.parts.push_back({static_cast<int>(ti), p, pos,
                                   bistatic_doppler(pos, vel, pair.tx, pair.rx, scene.wavelength_m()),
                                   d_total, pair.aod_world(pos)});
        }
    }

    if (scene.noise_floor > 0.0) {
        KeyedRng rng(scene.rng_seed, rx_id, k, KeyedRng::noise_stream);
        const double sigma = std::sqrt(scene.noise_floor);
        for (int b = 0; b < scene.num_beams; ++b)
            for (int l = 0; l < scene.num_taps; ++l)
                frame.gains(b, l) += sigma * rng.next_complex_normal();
    }

    return {std::move(frame), std::move(truth)};
}

std::pair<CirFrame, FrameTruth> synthesize_frame(const SceneConfig &scene, int rx_id,
                                                 std::uint32_t k)
{
    return synthesize_frame(scene, rx_id, k, ClockSequence(scene, rx_id));
}

RunOutput synthesize_run(const SceneConfig &scene)
{
    RunOutput out;
    out.streams.resize(scene.rx_count());
    out.truth.frames.resize(scene.rx_count());
    synthesize_run(scene, [&](CirFrame &&frame, const FrameTruth &truth) {
        out.streams[frame.rx_id].push_back(std::move(frame));
        out.truth.frames[truth.rx_id].push_back(truth);
    });
    return out;
}

void synthesize_run(const SceneConfig &scene,
                    const std::function<void(CirFrame &&, const FrameTruth &)> &sink)
{
    scene.validate();
    const std::uint32_t frames = scene.frame_count();
    for (int r = 0; r < scene.rx_count(); ++r) {
        const ClockSequence clock(scene, r);
        for (std::uint32_t k = 0; k < frames; ++k) {
            auto [frame, truth] = synthesize_frame(scene, r, k, clock);
            sink(std::move(frame), truth);
        }
    }
}

} // namespace misac
