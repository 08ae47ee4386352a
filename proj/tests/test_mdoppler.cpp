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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "misac/errors.hpp"
#include "misac/mdoppler.hpp"
#include "misac/scenarios.hpp"
#include "misac/sim.hpp"

using namespace misac;

namespace {

constexpr double deg = M_PI / 180.0;
constexpr double kT = 5e-4;            // 2 kHz slow-time rate
constexpr double kBin = 1.0 / (128 * kT); // 15.625 Hz

std::vector<Complex> tone(double f_hz, int n)
{
    std::vector<Complex> x(n);
    for (int k = 0; k < n; ++k)
        x[k] = std::polar(1.0, 2.0 * M_PI * f_hz * k * kT);
    return x;
}

int zero_bin(const Spectrogram &spec)
{
    int best = 0;
    for (int i = 1; i < spec.doppler_bins(); ++i)
        if (std::abs(spec.doppler_axis_hz[i]) < std::abs(spec.doppler_axis_hz[best]))
            best = i;
    return best;
}

} // namespace

TEST_CASE("the Doppler axis is ascending, symmetric, and Nyquist-inclusive")
{
    const auto spec = stft_spectrogram(tone(0.0, 256), kT, StftParams{});
    REQUIRE(spec.doppler_bins() == 128);
    CHECK(spec.doppler_axis_hz[0] == doctest::Approx(-1000.0 + kBin));
    CHECK(spec.doppler_axis_hz[127] == doctest::Approx(1000.0));
    CHECK(spec.doppler_axis_hz[63] == doctest::Approx(0.0));
    for (int i = 1; i < 128; ++i)
        CHECK(spec.doppler_axis_hz[i] - spec.doppler_axis_hz[i - 1] == doctest::Approx(kBin));
    // Window centers: first window covers samples 0..127.
    CHECK(spec.time_axis_s[0] == doctest::Approx(64 * kT));
}

TEST_CASE("each spectrogram row satisfies Parseval against its windowed input")
{
    std::mt19937_64 gen(51);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Complex> x(500);
    for (auto &v : x)
        v = Complex{g(gen), g(gen)};

    for (const Window w : {Window::rect, Window::hann}) {
        StftParams params;
        params.window = w;
        const auto spec = stft_spectrogram(x, kT, params);

        // Reconstruct the window to compute the reference energy.
        std::vector<double> win(128, 1.0);
        if (w == Window::hann)
            for (int i = 0; i < 128; ++i)
                win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / 128.0);

        for (int r = 0; r < spec.time_bins(); ++r) {
            double expect = 0.0;
            for (int i = 0; i < 128; ++i)
                expect += std::norm(win[i] * x[r * params.hop + i]);
            const double got = spec.magnitude.row(r).squaredNorm();
            CHECK(got == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("a constant signal concentrates at 0 Hz in every time bin")
{
    const auto spec = stft_spectrogram(tone(0.0, 1000), kT, StftParams{});
    const int dc = zero_bin(spec);
    int hits = 0;
    for (int r = 0; r < spec.time_bins(); ++r) {
        int best;
        spec.magnitude.row(r).maxCoeff(&best);
        if (best == dc)
            ++hits;
    }
    CHECK(double(hits) / spec.time_bins() >= 0.99);
}

TEST_CASE("a 250 Hz tone lands on its exact bin, refined to 0.1 bin")
{
    const auto spec = stft_spectrogram(tone(250.0, 1000), kT, StftParams{});
    const int expect = zero_bin(spec) + 16; // 250 / 15.625 = 16 bins above DC
    for (int r = 0; r < spec.time_bins(); ++r) {
        int best;
        spec.magnitude.row(r).maxCoeff(&best);
        CHECK(best == expect);
    }
    CHECK(spec.doppler_axis_hz[expect] == doctest::Approx(250.0));

    const PeakTrack track = peak_doppler_track(spec);
    for (const auto &f : track.doppler_hz) {
        REQUIRE(f.has_value());
        CHECK(std::abs(*f - 250.0) <= 0.1 * kBin);
    }
    CHECK(track.mean_abs_doppler_hz() == doctest::Approx(250.0).epsilon(1e-3));
}

TEST_CASE("a mid-bin tone is localized within 0.1 bin by parabolic refinement")
{
    const double f = 250.0 + 0.5 * kBin; // worst case between bins
    const auto spec = stft_spectrogram(tone(f, 2000), kT, StftParams{});
    const PeakTrack track = peak_doppler_track(spec);
    for (const auto &est : track.doppler_hz) {
        REQUIRE(est.has_value());
        CHECK(std::abs(*est - f) <= 0.1 * kBin);
    }
}

TEST_CASE("negative frequencies resolve on the negative half-axis")
{
    const auto spec = stft_spectrogram(tone(-312.5, 1000), kT, StftParams{});
    const PeakTrack track = peak_doppler_track(spec);
    for (const auto &est : track.doppler_hz) {
        REQUIRE(est.has_value());
        CHECK(std::abs(*est + 312.5) <= 0.1 * kBin);
    }
}

TEST_CASE("inputs shorter than one window are rejected")
{
    CHECK_THROWS_AS(stft_spectrogram(tone(0.0, 100), kT, StftParams{}), stage_error);
    StftParams bad;
    bad.hop = 0;
    CHECK_THROWS_AS(stft_spectrogram(tone(0.0, 256), kT, bad), config_error);
}

TEST_CASE("window names round-trip and reject unknowns")
{
    CHECK(window_from_string("hann") == Window::hann);
    CHECK(window_from_string("rect") == Window::rect);
    CHECK(std::string(to_string(Window::hann)) == "hann");
    CHECK_THROWS_AS(window_from_string("hamming"), config_error);
}

TEST_CASE("the peak floor suppresses peaks under floor_db above the row median")
{
    Spectrogram spec;
    spec.params = StftParams{};
    spec.frame_interval_s = kT;
    spec.magnitude = Eigen::MatrixXd::Ones(1, 128);
    spec.time_axis_s = Eigen::VectorXd::Zero(1);
    spec.doppler_axis_hz.resize(128);
    for (int i = 0; i < 128; ++i)
        spec.doppler_axis_hz[i] = (i - 63) * kBin;

    spec.magnitude(0, 70) = 2.0; // 6 dB above the median bin power
    CHECK(!peak_doppler_track(spec, 10.0).doppler_hz[0].has_value());
    const auto loose = peak_doppler_track(spec, 3.0);
    REQUIRE(loose.doppler_hz[0].has_value());
    CHECK(std::abs(*loose.doppler_hz[0] - spec.doppler_axis_hz[70]) <= kBin);

    spec.magnitude(0, 70) = 100.0; // 40 dB: comfortably above the floor
    REQUIRE(peak_doppler_track(spec, 10.0).doppler_hz[0].has_value());

    PeakTrack empty;
    empty.doppler_hz.assign(4, std::nullopt);
    CHECK_THROWS_AS(empty.mean_abs_doppler_hz(), stage_error);
}

TEST_CASE("slow-time extraction reproduces a planted single-cell series")
{
    const BistaticPair pair{{0.0, 0.0}, {4.0, 0.0}};
    const double quantum = speed_of_light / 1.76e9;
    const Vec2 p{2.0, 2.0};
    const int tap = static_cast<int>(std::lround(pair.excess_range(p) / quantum));

    std::vector<TrackSnapshot> snaps;
    for (std::uint32_t k = 0; k <= 200; k += 20)
        snaps.push_back({k, 1, p.x(), p.y(), 0.0, 0.0, TrackStatus::confirmed});

    SlowTimeBuilder builder(snaps, pair, quantum, kT, /*half_width=*/2,
                            /*max_extrapolation_frames=*/20);
    std::vector<Complex> planted;
    for (std::uint32_t k = 0; k <= 200; ++k) {
        CirFrame f;
        f.k = k;
        f.gains = GainMatrix::Zero(4, 32);
        const Complex v = std::polar(1.0 + 0.01 * k, 0.03 * k);
        f.gains(2, tap) = v;
        planted.push_back(v);
        builder.feed(f);
    }

    const SlowTime st = builder.finish();
    CHECK(st.k_begin == 0);
    CHECK(st.gaps.empty());
    REQUIRE(st.samples.size() == planted.size());
    for (std::size_t i = 0; i < planted.size(); ++i)
        CHECK(std::abs(st.samples[i] - planted[i]) < 1e-12);
}

TEST_CASE("frames past the extrapolation horizon become zero-filled gaps")
{
    const BistaticPair pair{{0.0, 0.0}, {4.0, 0.0}};
    const double quantum = speed_of_light / 1.76e9;
    const Vec2 p{2.0, 2.0};

    std::vector<TrackSnapshot> snaps = {
        {0, 1, p.x(), p.y(), 0.0, 0.0, TrackStatus::confirmed},
        {40, 1, p.x(), p.y(), 0.0, 0.0, TrackStatus::confirmed},
    };
    SlowTimeBuilder builder(snaps, pair, quantum, kT, 2, /*max_extrapolation_frames=*/10);
    for (std::uint32_t k = 0; k < 100; ++k) {
        CirFrame f;
        f.k = k;
        f.gains = GainMatrix::Constant(2, 32, Complex{0.5, 0.0});
        builder.feed(f);
    }

    const SlowTime st = builder.finish();
    REQUIRE(st.samples.size() == 100);
    // Covered through k = 50 (last snapshot + 10), gaps afterwards.
    REQUIRE(st.gaps.size() == 49);
    CHECK(st.gaps.front() == 51);
    CHECK(st.gaps.back() == 99);
    CHECK(std::abs(st.samples[60]) == 0.0);
    CHECK(std::abs(st.samples[30]) > 0.0);
}

TEST_CASE("primary_track_id picks the longest confirmed track")
{
    std::vector<TrackSnapshot> history;
    for (std::uint32_t k = 0; k < 10; ++k)
        history.push_back({k, 1, 0, 0, 0, 0, TrackStatus::tentative});
    for (std::uint32_t k = 0; k < 5; ++k)
        history.push_back({k, 2, 0, 0, 0, 0, TrackStatus::confirmed});
    for (std::uint32_t k = 0; k < 3; ++k)
        history.push_back({k, 3, 0, 0, 0, 0, TrackStatus::confirmed});
    CHECK(primary_track_id(history) == 2);

    std::vector<TrackSnapshot> none(4, {0, 1, 0, 0, 0, 0, TrackStatus::tentative});
    CHECK_THROWS_AS(primary_track_id(none), stage_error);
}

TEST_CASE("constant-radial-velocity target: spectrogram peak matches logged Doppler")
{
    SceneConfig s;
    s.tx_position = {0.0, 0.0};
    s.rx_positions = {{4.0, 0.0}};
    s.beam_centers_rad = make_beam_fan(0.0, 82.5 * deg, 12);
    s.beam_width_3db_rad = 9.0 * deg;
    s.clock_models = {ClockModel{}};
    s.noise_floor = 1e-3;
    s.duration_s = 1.0;
    s.rng_seed = 77;

    ArticulatedTarget t;
    t.label = "probe";
    t.torso.kind = TrajectorySpec::Kind::pacing;
    t.torso.origin = {2.0, 2.0};
    t.torso.direction_rad = 25.0 * deg;
    t.torso.amplitude_m = 2.0; // no reversal inside 1 s at 0.5 m/s
    t.torso.speed_mps = 0.5;
    t.torso_gain = {0.3, 0.0};
    s.targets = {t};
    s.validate();

    const RunOutput run = synthesize_run(s);
    const BistaticPair pair = s.pair(0);

    // Truth-driven track snapshots at the tracker's decimated rate.
    std::vector<TrackSnapshot> snaps;
    for (std::uint32_t k = 0; k < s.frame_count(); k += 20) {
        const auto &tr = run.truth.frames[0][k];
        snaps.push_back({k, 1, tr.parts[0].position.x(), tr.parts[0].position.y(), 0.0, 0.0,
                         TrackStatus::confirmed});
    }

    const SlowTime st = target_slow_time(run.streams[0], snaps, 1, pair, s.range_quantum_m(),
                                         s.frame_interval_s, 2);
    const auto spec = stft_spectrogram(st, StftParams{});
    const PeakTrack peaks = peak_doppler_track(spec);

    int present = 0;
    for (int r = 0; r < spec.time_bins(); ++r) {
        if (!peaks.doppler_hz[r])
            continue;
        ++present;
        const auto kc = static_cast<std::uint32_t>(
            std::lround(spec.time_axis_s[r] / s.frame_interval_s));
        const double truth = run.truth.frames[0][std::min(kc, s.frame_count() - 1)]
                                 .parts[0]
                                 .doppler_hz;
        CHECK(std::abs(*peaks.doppler_hz[r] - truth) <= kBin);
    }
    CHECK(present == spec.time_bins());
}

TEST_CASE("sinusoidal radial motion: peak track follows logged Doppler within 2 bins")
{
    // Sit/stand-like probe: a small oval gives a sinusoidal radial sweep.
    SceneConfig s;
    s.tx_position = {0.0, 0.0};
    s.rx_positions = {{4.0, 0.0}};
    s.beam_centers_rad = make_beam_fan(0.0, 82.5 * deg, 12);
    s.beam_width_3db_rad = 9.0 * deg;
    s.clock_models = {ClockModel{}};
    s.noise_floor = 1e-3;
    s.duration_s = 4.0;
    s.rng_seed = 78;

    ArticulatedTarget t;
    t.label = "bobber";
    t.torso.kind = TrajectorySpec::Kind::oval;
    t.torso.center = {2.0, 2.4};
    t.torso.semi_axis_a = 0.4;
    t.torso.semi_axis_b = 0.25;
    t.torso.period_s = 4.0;
    t.torso_gain = {0.3, 0.0};
    s.targets = {t};
    s.validate();

    const RunOutput run = synthesize_run(s);
    const BistaticPair pair = s.pair(0);

    std::vector<TrackSnapshot> snaps;
    for (std::uint32_t k = 0; k < s.frame_count(); k += 20) {
        const auto &part = run.truth.frames[0][k].parts[0];
        snaps.push_back(
            {k, 1, part.position.x(), part.position.y(), 0.0, 0.0, TrackStatus::confirmed});
    }

    const SlowTime st = target_slow_time(run.streams[0], snaps, 1, pair, s.range_quantum_m(),
                                         s.frame_interval_s, 2);
    const auto spec = stft_spectrogram(st, StftParams{});
    const PeakTrack peaks = peak_doppler_track(spec);

    double mae = 0.0;
    int n = 0;
    for (int r = 0; r < spec.time_bins(); ++r) {
        if (!peaks.doppler_hz[r])
            continue;
        const auto kc = static_cast<std::uint32_t>(
            std::lround(spec.time_axis_s[r] / s.frame_interval_s));
        const double truth = run.truth.frames[0][std::min(kc, s.frame_count() - 1)]
                                 .parts[0]
                                 .doppler_hz;
        mae += std::abs(*peaks.doppler_hz[r] - truth);
        ++n;
    }
    REQUIRE(n > spec.time_bins() / 2);
    mae /= n;
    CHECK(mae < 2.0 * kBin);
}
