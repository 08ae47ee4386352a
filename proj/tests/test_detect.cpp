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

#include <algorithm>
#include <cmath>
#include <random>

#include "misac/detect.hpp"
#include "misac/scenarios.hpp"
#include "misac/sim.hpp"
#include "misac/sync.hpp"

using namespace misac;

namespace {

constexpr double deg = M_PI / 180.0;

Eigen::VectorXd flat_statistic(int n, double base = 1e-4)
{
    // Low-level "noise" with nonzero MAD so the gate is finite.
    Eigen::VectorXd s(n);
    for (int l = 0; l < n; ++l)
        s[l] = base * (1.0 + 0.05 * std::sin(0.7 * l));
    return s;
}

} // namespace

TEST_CASE("foreground is max(|h| - mean, 0) cell by cell")
{
    std::mt19937_64 gen(31);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        CirFrame f;
        f.gains = GainMatrix::Zero(6, 40);
        Background bg;
        bg.mean_magnitude = Eigen::MatrixXd::Zero(6, 40);
        bg.frame_count = 1;
        for (int b = 0; b < 6; ++b)
            for (int l = 0; l < 40; ++l) {
                f.gains(b, l) = Complex{g(gen), g(gen)};
                bg.mean_magnitude(b, l) = std::abs(g(gen));
            }

        const Eigen::MatrixXd fg = foreground(f, bg);
        for (int b = 0; b < 6; ++b)
            for (int l = 0; l < 40; ++l)
                CHECK(fg(b, l) ==
                      doctest::Approx(std::max(std::abs(f.gains(b, l)) - bg.mean_magnitude(b, l), 0.0))
                          .epsilon(1e-15));
    }
}

TEST_CASE("detection statistic sums squared foreground over beams")
{
    Eigen::MatrixXd fg(2, 3);
    fg << 1.0, 0.0, 2.0, //
        3.0, 4.0, 0.0;
    const Eigen::VectorXd s = detection_statistic(fg);
    CHECK(s[0] == doctest::Approx(10.0));
    CHECK(s[1] == doctest::Approx(16.0));
    CHECK(s[2] == doctest::Approx(4.0));

    // Permuting beams cannot change the statistic.
    Eigen::MatrixXd perm(2, 3);
    perm.row(0) = fg.row(1);
    perm.row(1) = fg.row(0);
    CHECK((detection_statistic(perm) - s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("background is the per-cell mean magnitude over frames")
{
    CirFrame a, b;
    a.gains = GainMatrix::Constant(2, 4, Complex{1.0, 0.0});
    b.gains = GainMatrix::Constant(2, 4, Complex{0.0, 3.0});

    const Background bg = estimate_background({a, b});
    CHECK(bg.frame_count == 2);
    CHECK((bg.mean_magnitude.array() - 2.0).abs().maxCoeff() < 1e-15);

    BackgroundAccumulator acc;
    acc.add(a);
    acc.add(b);
    const Background bg2 = acc.finish();
    CHECK((bg.mean_magnitude - bg2.mean_magnitude).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("taps zeroed by alignment do not dilute the background mean")
{
    // Alignment zero-fills a per-frame tail, so a tap that carries data in
    // only some frames must be averaged over those frames alone. Otherwise
    // plain noise at high taps towers over a diluted mean and turns into
    // false foreground.
    CirFrame a, b;
    a.gains = GainMatrix::Constant(1, 4, Complex{2.0, 0.0});
    b.gains = GainMatrix::Constant(1, 4, Complex{4.0, 0.0});
    b.gains.col(3).setZero(); // this tap was shifted out in frame b

    const Background bg = estimate_background({a, b});
    CHECK(bg.mean_magnitude(0, 0) == doctest::Approx(3.0));
    CHECK(bg.mean_magnitude(0, 3) == doctest::Approx(2.0)); // frame a only
}

TEST_CASE("detect_targets finds separated peaks strongest first")
{
    Eigen::VectorXd s = flat_statistic(64);
    s[20] = 0.6;
    s[40] = 1.0;
    const auto taps = detect_targets(s);
    REQUIRE(taps.size() == 2);
    CHECK(taps[0] == 40);
    CHECK(taps[1] == 20);
}

TEST_CASE("peaks closer than the separation merge into the stronger one")
{
    Eigen::VectorXd s = flat_statistic(64);
    s[20] = 1.0;
    s[22] = 0.8; // within min_separation_taps = 3
    const auto taps = detect_targets(s);
    REQUIRE(taps.size() == 1);
    CHECK(taps[0] == 20);
}

TEST_CASE("the LOS guard region is excluded")
{
    Eigen::VectorXd s = flat_statistic(64);
    s[1] = 5.0;  // inside guard_taps = 2
    s[30] = 1.0; // legitimate target
    const auto taps = detect_targets(s);
    REQUIRE(taps.size() == 1);
    CHECK(taps[0] == 30);
}

TEST_CASE("low-prominence sidelobes are suppressed")
{
    Eigen::VectorXd s = flat_statistic(64);
    s[20] = 1.0;
    // A shoulder 8 taps out whose prominence (0.2) is under 0.3 * max.
    s[27] = 0.15;
    s[28] = 0.2;
    s[29] = 0.15;
    const auto taps = detect_targets(s);
    REQUIRE(taps.size() == 1);
    CHECK(taps[0] == 20);
}

TEST_CASE("pure noise produces no detections and max_targets caps the list")
{
    CHECK(detect_targets(flat_statistic(64)).empty());

    Eigen::VectorXd s = flat_statistic(64);
    s[10] = 1.0;
    s[20] = 0.9;
    s[30] = 0.8;
    s[40] = 0.7;
    const auto taps = detect_targets(s);
    REQUIRE(taps.size() == 3); // max_targets default
    CHECK(taps[0] == 10);
    CHECK(taps[1] == 20);
    CHECK(taps[2] == 30);
}

TEST_CASE("AoD refinement: power-weighted circular mean over the top beams")
{
    const std::vector<double> centers = make_beam_fan(0.0, 82.5 * deg, 12);

    Eigen::MatrixXd fg = Eigen::MatrixXd::Zero(12, 8);
    fg(4, 3) = 0.7; // single active beam
    CHECK(aod_from_beams(fg, 3, centers) == doctest::Approx(centers[4]).epsilon(1e-12));

    // Two equal neighbors average to the midpoint.
    fg(5, 3) = 0.7;
    CHECK(aod_from_beams(fg, 3, centers) ==
          doctest::Approx(0.5 * (centers[4] + centers[5])).epsilon(1e-9));

    // Symmetric 1-2-1 power profile centers on the middle beam.
    Eigen::MatrixXd fg2 = Eigen::MatrixXd::Zero(12, 8);
    fg2(3, 5) = 1.0;
    fg2(4, 5) = std::sqrt(2.0); // power 2
    fg2(5, 5) = 1.0;
    CHECK(aod_from_beams(fg2, 5, centers) == doctest::Approx(centers[4]).epsilon(1e-9));

    Eigen::MatrixXd empty = Eigen::MatrixXd::Zero(12, 8);
    CHECK_THROWS_AS(aod_from_beams(empty, 2, centers), std::domain_error);
}

TEST_CASE("frame_detections localizes a lone scatterer against an empty background")
{
    SceneConfig s = los_only_scene(0.01, 4);
    s.noise_floor = 0.0;
    s.clock_models = {ClockModel{}};
    const Vec2 p = localize_bistatic(1.6, 45.0 * deg, s.tx_position, s.rx_positions[0]);
    s.static_scatterers = {{p, {0.4, 0.0}, "probe"}};
    s.validate();

    const auto [frame, truth] = synthesize_frame(s, 0, 0);
    Background bg;
    bg.mean_magnitude = Eigen::MatrixXd::Zero(frame.beams(), frame.taps());
    bg.frame_count = 1;

    const FrameDetections out = frame_detections(frame, bg, s, 0, {});
    REQUIRE(out.detections.size() == 1);
    const Detection &d = out.detections[0];
    const int expect_tap = static_cast<int>(std::lround(1.6 / s.range_quantum_m()));
    CHECK(d.tap == expect_tap);
    CHECK(d.excess_bistatic_range_m == doctest::Approx(expect_tap * s.range_quantum_m()));
    CHECK(std::abs(wrap_angle(d.aod_world_rad - 45.0 * deg)) < 2.0 * deg);
    CHECK((d.position - p).norm() < 0.15);
    CHECK(d.rx_id == 0);
}

TEST_CASE("a static-only scene yields no detections in at least 99% of frames")
{
    const SceneConfig s = static_lab_scene(0.5, 12); // 1000 frames at 30 dB
    const RunOutput run = synthesize_run(s);
    auto [synced, report] = sync_pipeline(run.streams[0], {12.0, false});

    const Background bg = estimate_background(synced);
    int dirty = 0;
    for (const CirFrame &f : synced)
        if (!frame_detections(f, bg, s, 0, {}).detections.empty())
            ++dirty;
    CHECK(double(dirty) / double(synced.size()) <= 0.01);
}

TEST_CASE("walker detections: tap accuracy, multiplicity, and median position error")
{
    // Long enough for the walker to cover a good part of its oval; in a much
    // shorter window it lingers over a few taps and bleeds into the
    // background mean, which depresses the detection rate.
    const SceneConfig s = single_walker_scene(2.0, 13); // 4000 frames
    const RunOutput run = synthesize_run(s);
    auto [synced, report] = sync_pipeline(run.streams[0], {12.0, false});

    const Background bg = estimate_background(synced);
    const BistaticPair pair = s.pair(0);
    const double quantum = s.range_quantum_m();

    int tap_hits = 0, single_hits = 0;
    std::vector<double> errors;
    for (std::size_t i = 0; i < synced.size(); ++i) {
        const auto out = frame_detections(synced[i], bg, s, 0, {});
        const auto &truth = run.truth.frames[0][synced[i].k];

        const int torso_tap =
            static_cast<int>(std::lround((truth.parts[0].path_length_m - pair.baseline()) / quantum));
        if (out.detections.size() == 1)
            ++single_hits;
        if (!out.detections.empty()) {
            int best_dtap = 1 << 20;
            double best_err = 1e9;
            for (const Detection &d : out.detections) {
                best_dtap = std::min(best_dtap, std::abs(d.tap - torso_tap));
                for (const PartTruth &part : truth.parts)
                    best_err = std::min(best_err, (d.position - part.position).norm());
            }
            if (best_dtap <= 1)
                ++tap_hits;
            errors.push_back(best_err);
        }
    }

    const double n = double(synced.size());
    CHECK(double(tap_hits) / n >= 0.90);
    CHECK(double(single_hits) / n >= 0.90);

    REQUIRE(!errors.empty());
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] <= 0.5);
}
