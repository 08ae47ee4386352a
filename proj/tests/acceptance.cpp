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
//
// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line with the measured numbers and its pinned tolerance; the process exits
// with the number of failed criteria. Expensive scenario runs are shared
// between criteria (the walker run feeds 4 and 5; the two-receiver pair run
// feeds 3 and 9).

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "misac/detect.hpp"
#include "misac/io.hpp"
#include "misac/mdoppler.hpp"
#include "misac/pipeline.hpp"
#include "misac/scenarios.hpp"
#include "misac/sim.hpp"
#include "misac/sync.hpp"
#include "misac/track.hpp"

using namespace misac;
namespace fs = std::filesystem;

namespace {

constexpr double deg = M_PI / 180.0;

// Canonical runs use a higher LOS threshold than the library default: with
// kappa = 6 the max-over-12-beams noise tail at 30 dB SNR crosses the
// median + kappa * MAD line often enough (~1e-3 per tap and frame) that an
// early noise tap steals the LOS in ~2% of frames; kappa = 12 drops that to
// ~1e-6 while leaving the true LOS (30 dB above noise) untouched.
constexpr double kSyncKappa = 12.0;

int failures = 0;

void report(int criterion, const std::string &name, bool pass, const std::string &detail)
{
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << criterion << " (" << name
              << "): " << detail << std::endl;
    if (!pass)
        ++failures;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

double wall_seconds(const std::chrono::steady_clock::time_point &t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path work_dir(const std::string &leaf)
{
    const fs::path p = fs::temp_directory_path() / "misac_acceptance" / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

EvalReport run_preset(const SceneConfig &scene, const fs::path &dir)
{
    save_scene(dir / "scene.json", scene);
    RunManifest m;
    m.scene_path = dir / "scene.json";
    m.out_dir = dir / "out";
    m.overrides = nlohmann::json{{"sync.threshold_kappa", kSyncKappa}};
    return run_pipeline(m);
}

// Slow-time series of one (beam, tap) cell across a stream.
std::vector<Complex> cell_series(const CirStream &frames, int beam, int tap)
{
    std::vector<Complex> out;
    out.reserve(frames.size());
    for (const CirFrame &f : frames)
        out.push_back(f.gains(beam, tap));
    return out;
}

// ---- criterion 1: TO compensation -------------------------------------------------

void criterion_1()
{
    const SceneConfig scene = los_only_scene(1.0, 101); // 2000 frames, TO ~ U[0, 32) taps
    const RunOutput run = synthesize_run(scene);

    const auto t0 = std::chrono::steady_clock::now();
    Synchronizer sync({kSyncKappa, false});
    for (const CirFrame &f : run.streams[0])
        (void)sync.process(f);
    const double seconds = wall_seconds(t0);

    int hits = 0;
    const SyncReport &rep = sync.report();
    for (std::size_t k = 0; k < rep.size(); ++k)
        if (rep[k].los_tap == run.truth.frames[0][k].clock.to_shift_taps)
            ++hits;
    const double rate = double(hits) / double(rep.size());

    report(1, "TO compensation", rate >= 0.999 && seconds < 5.0,
           "post-alignment LOS index correct in " + fmt(100.0 * rate) +
               "% of 2000 frames (need >= 99.9%), sync took " + fmt(seconds) + " s (need < 5 s)");
}

// ---- criterion 2: FO compensation -------------------------------------------------

void criterion_2()
{
    // Static scene, constant FO of 1 kHz, no timing offset so the uncorrected
    // control stays on a fixed tap.
    SceneConfig scene = static_lab_scene(1.0, 102); // 2000 frames
    ClockModel cm;
    cm.fo_mode = FoMode::constant;
    cm.fo_hz = 1000.0;
    scene.clock_models = {cm};
    scene.validate();

    const RunOutput run = synthesize_run(scene);
    auto [synced, sync_rep] = sync_pipeline(run.streams[0], {kSyncKappa, false});

    // Corrected: phase std of the strongest static cell.
    StrongestCellPhaseStd meter;
    for (const CirFrame &f : synced)
        meter.pass1(f);
    meter.begin_pass2();
    for (const CirFrame &f : synced)
        meter.pass2(f);
    const double phase_std = meter.value();

    // Spectrograms of that cell, uncorrected vs corrected.
    StftParams stft;
    const auto raw_spec =
        stft_spectrogram(cell_series(run.streams[0], meter.beam(), meter.tap()),
                         scene.frame_interval_s, stft);
    const auto cor_spec = stft_spectrogram(cell_series(synced, meter.beam(), meter.tap()),
                                           scene.frame_interval_s, stft);
    const double bin = raw_spec.doppler_axis_hz[1] - raw_spec.doppler_axis_hz[0];

    // Uncorrected control: the global peak must sit at 1 kHz within one bin.
    int pr = 0, pc = 0;
    raw_spec.magnitude.maxCoeff(&pr, &pc);
    const double raw_peak_hz = raw_spec.doppler_axis_hz[pc];

    // Corrected: >= 99% of total energy within one bin of 0 Hz.
    double total = 0.0, near_dc = 0.0;
    for (int r = 0; r < cor_spec.time_bins(); ++r)
        for (int c = 0; c < cor_spec.doppler_bins(); ++c) {
            const double e = cor_spec.magnitude(r, c) * cor_spec.magnitude(r, c);
            total += e;
            if (std::abs(cor_spec.doppler_axis_hz[c]) <= bin + 1e-9)
                near_dc += e;
        }
    const double dc_fraction = near_dc / total;

    const bool pass = phase_std < 0.05 && std::abs(raw_peak_hz - 1000.0) <= bin + 1e-9 &&
                      dc_fraction >= 0.99;
    report(2, "FO compensation", pass,
           "corrected static-cell phase std " + fmt(phase_std) +
               " rad (need < 0.05), uncorrected peak at " + fmt(raw_peak_hz) +
               " Hz (need 1000 +- " + fmt(bin) + "), corrected energy near 0 Hz " +
               fmt(100.0 * dc_fraction) + "% (need >= 99%)");
}

// ---- criteria 3 and 9: bistatic Doppler scaling + performance envelope -------------

void criteria_3_and_9()
{
    // Same walk seen from a beta ~ 40 deg and a beta ~ 140 deg receiver;
    // 10 s of 2 kHz 12x128 frames for both receivers, full pipeline.
    const SceneConfig scene = pacing_pair_scene(10.0, 103);
    const fs::path dir = work_dir("pair");

    const auto t0 = std::chrono::steady_clock::now();
    const EvalReport rep = run_preset(scene, dir);
    const double seconds = wall_seconds(t0);

    bool pass3 = false;
    std::string detail3 = "xi ratio unavailable";
    if (rep.xi_ratio && rep.receivers.size() == 2 && rep.receivers[0].mean_abs_peak_doppler_hz &&
        rep.receivers[1].mean_abs_peak_doppler_hz) {
        const XiRatioReport &xr = *rep.xi_ratio;
        // Qualitative ordering: Doppler shrinks as beta grows toward pi.
        const bool ordered = *rep.receivers[0].mean_abs_peak_doppler_hz >
                             *rep.receivers[1].mean_abs_peak_doppler_hz;
        pass3 = xr.relative_error < 0.05 && ordered;
        detail3 = "mean |peak Doppler| ratio " + fmt(xr.observed) + " vs cos(20 deg)/cos(70 deg) = " +
                  fmt(xr.predicted) + ", error " + fmt(100.0 * xr.relative_error) +
                  "% (need < 5%), ordering beta40 > beta140 " + (ordered ? "holds" : "violated");
    }
    report(3, "bistatic Doppler scaling", pass3, detail3);
    report(9, "performance envelope", seconds < 60.0,
           "two-receiver 10 s pipeline took " + fmt(seconds) + " s (need < 60 s)");
}

// ---- criteria 4 and 5: localization + tracking -------------------------------------

void criteria_4_and_5()
{
    // Property part: forward geometry -> quantize -> invert, 1e4 positions.
    const BistaticPair pair{{0.0, 0.0}, {4.0, 0.0}};
    const double quantum = speed_of_light / 1.76e9;
    const double spacing = 7.5 * deg;

    std::mt19937_64 gen(104);
    std::uniform_real_distribution<double> ux(0.2, 5.0);
    std::uniform_real_distribution<double> uy(0.3, 4.5);
    int tested = 0;
    double worst_range = 0.0, worst_angle = 0.0;
    while (tested < 10000) {
        const Vec2 p{ux(gen), uy(gen)};
        const double theta = pair.aod_baseline(p);
        const double excess = pair.excess_range(p);
        if (theta < 0.5 * deg || theta > 82.0 * deg || excess < 0.3)
            continue;
        const double excess_q = quantum * std::lround(excess / quantum);
        const double theta_q = spacing * std::round(theta / spacing);
        const Vec2 hat = localize_bistatic(excess_q, theta_q, pair.tx, pair.rx);
        worst_range = std::max(worst_range, std::abs(pair.excess_range(hat) - excess));
        worst_angle =
            std::max(worst_angle, std::abs(wrap_angle(pair.aod_baseline(hat) - theta)));
        ++tested;
    }
    const bool prop_ok = worst_range <= quantum + 1e-9 && worst_angle <= 0.5 * spacing + 1e-9;

    // End-to-end part: the walker scenario (oval walk at 30 dB SNR).
    const fs::path dir = work_dir("walker");
    const EvalReport rep = run_preset(single_walker_scene(8.0, 105), dir);

    bool pass4 = false, pass5a = false;
    std::string detail4 = "walker report unavailable", detail5 = detail4;
    if (rep.receivers.size() == 1 && rep.receivers[0].localization_median_error_m) {
        const double median = *rep.receivers[0].localization_median_error_m;
        pass4 = prop_ok && median <= 0.5;
        detail4 = "round-trip worst error " + fmt(worst_range) + " m / " +
                  fmt(worst_angle / deg) + " deg over 10^4 positions (need <= " + fmt(quantum) +
                  " m / " + fmt(0.5 * spacing / deg) + " deg), walker median position error " +
                  fmt(median) + " m (need <= 0.5 m)";
    }
    report(4, "bistatic localization", pass4, detail4);

    if (rep.receivers.size() == 1 && rep.receivers[0].track_rmse_m &&
        rep.receivers[0].track_coverage) {
        const double rmse = *rep.receivers[0].track_rmse_m;
        const double coverage = *rep.receivers[0].track_coverage;
        pass5a = rmse < 0.5 && coverage >= 0.95;
        detail5 = "confirmed-track RMSE " + fmt(rmse) + " m (need < 0.5) over coverage " +
                  fmt(100.0 * coverage) + "% (need >= 95%)";
    }

    // Jacobian part of criterion 5.
    std::uniform_real_distribution<double> up(-5.0, 5.0);
    std::uniform_real_distribution<double> uv(-2.0, 2.0);
    int states = 0;
    double worst_jac = 0.0;
    while (states < 100) {
        Eigen::Vector4d x{up(gen), up(gen), uv(gen), uv(gen)};
        if ((Vec2{x[0], x[1]} - pair.tx).norm() < 0.3 || (Vec2{x[0], x[1]} - pair.rx).norm() < 0.3)
            continue;
        const auto H = measurement_jacobian(x, pair);
        const double eps = 1e-6;
        Eigen::Matrix<double, 2, 4> Hfd;
        for (int j = 0; j < 4; ++j) {
            Eigen::Vector4d hi = x, lo = x;
            hi[j] += eps;
            lo[j] -= eps;
            const Eigen::Vector2d zh = measurement_model(hi, pair);
            const Eigen::Vector2d zl = measurement_model(lo, pair);
            Hfd(0, j) = (zh[0] - zl[0]) / (2.0 * eps);
            Hfd(1, j) = wrap_angle(zh[1] - zl[1]) / (2.0 * eps);
        }
        const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
        worst_jac = std::max(worst_jac, (H - Hfd).cwiseAbs().maxCoeff() / scale);
        ++states;
    }
    const bool pass5 = pass5a && worst_jac < 1e-5;
    report(5, "EKF tracking", pass5,
           detail5 + "; Jacobian vs central differences worst relative error " + fmt(worst_jac) +
               " (need < 1e-5)");
}

// ---- criterion 6: detection --------------------------------------------------------

void criterion_6()
{
    const fs::path dir = work_dir("static");
    run_preset(static_lab_scene(1.0, 106), dir); // 2000 static-only frames

    const auto dets = read_detections(detections_path(dir / "out", 0));
    std::vector<bool> dirty(2000, false);
    for (const Detection &d : dets)
        if (d.k < dirty.size())
            dirty[d.k] = true;
    int dirty_frames = 0;
    for (bool b : dirty)
        dirty_frames += b ? 1 : 0;
    const double fa_rate = dirty_frames / 2000.0;

    // Foreground formula, cell by cell on randomized matrices.
    std::mt19937_64 gen(107);
    std::normal_distribution<double> g(0.0, 1.0);
    bool cells_ok = true;
    for (int trial = 0; trial < 50 && cells_ok; ++trial) {
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
        for (int b = 0; b < 6 && cells_ok; ++b)
            for (int l = 0; l < 40; ++l) {
                const double expect =
                    std::max(std::abs(f.gains(b, l)) - bg.mean_magnitude(b, l), 0.0);
                if (std::abs(fg(b, l) - expect) > 1e-15) {
                    cells_ok = false;
                    break;
                }
            }
    }

    report(6, "detection", fa_rate <= 0.01 && cells_ok,
           "static-only false-alarm rate " + fmt(100.0 * fa_rate) +
               "% of 2000 frames (need <= 1%), foreground formula cellwise " +
               (cells_ok ? "exact" : "WRONG"));
}

// ---- criterion 7: spectrogram correctness -------------------------------------------

void criterion_7()
{
    const double T = 5e-4;
    const double bin = 1.0 / (128 * T);

    // Parseval per spectrogram row, both windows.
    std::mt19937_64 gen(108);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Complex> x(600);
    for (auto &v : x)
        v = Complex{g(gen), g(gen)};

    double worst_parseval = 0.0;
    for (const Window w : {Window::rect, Window::hann}) {
        StftParams params;
        params.window = w;
        const auto spec = stft_spectrogram(x, T, params);
        std::vector<double> win(128, 1.0);
        if (w == Window::hann)
            for (int i = 0; i < 128; ++i)
                win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / 128.0);
        for (int r = 0; r < spec.time_bins(); ++r) {
            double expect = 0.0;
            for (int i = 0; i < 128; ++i)
                expect += std::norm(win[i] * x[r * params.hop + i]);
            worst_parseval =
                std::max(worst_parseval,
                         std::abs(spec.magnitude.row(r).squaredNorm() - expect) / expect);
        }
    }

    // Pure-tone localization: on-bin tone exact, mid-bin tone within 0.1 bin.
    auto tone = [&](double f, int n) {
        std::vector<Complex> s(n);
        for (int k = 0; k < n; ++k)
            s[k] = std::polar(1.0, 2.0 * M_PI * f * k * T);
        return s;
    };

    const auto on_spec = stft_spectrogram(tone(250.0, 1000), T, StftParams{});
    bool on_bin_ok = true;
    for (int r = 0; r < on_spec.time_bins(); ++r) {
        int best;
        on_spec.magnitude.row(r).maxCoeff(&best);
        on_bin_ok = on_bin_ok && std::abs(on_spec.doppler_axis_hz[best] - 250.0) <= bin + 1e-9;
    }

    const double f_mid = 250.0 + 0.5 * bin;
    const auto mid_track = peak_doppler_track(stft_spectrogram(tone(f_mid, 1000), T, StftParams{}));
    double worst_refined = 0.0;
    bool all_present = true;
    for (const auto &est : mid_track.doppler_hz) {
        if (!est) {
            all_present = false;
            break;
        }
        worst_refined = std::max(worst_refined, std::abs(*est - f_mid));
    }

    const bool pass = worst_parseval <= 1e-9 && on_bin_ok && all_present &&
                      worst_refined <= 0.1 * bin;
    report(7, "spectrogram correctness", pass,
           "worst Parseval relative error " + fmt(worst_parseval) +
               " (need <= 1e-9), on-bin tone " + (on_bin_ok ? "exact" : "off") +
               ", mid-bin tone refined to " + fmt(worst_refined / bin) +
               " bins (need <= 0.1)");
}

// ---- criterion 8: determinism and formats -------------------------------------------

void criterion_8()
{
    // Byte-identical repeated runs (all stages, walker scene).
    const fs::path dir_a = work_dir("det_a");
    const fs::path dir_b = work_dir("det_b");
    const SceneConfig scene = single_walker_scene(0.6, 109);
    run_preset(scene, dir_a);
    run_preset(scene, dir_b);

    bool identical = true;
    int compared = 0;
    for (const auto &entry : fs::directory_iterator(dir_a / "out")) {
        const std::string name = entry.path().filename().string();
        if (name == "timing.json")
            continue;
        if (!fs::exists(dir_b / "out" / name) ||
            slurp(entry.path()) != slurp(dir_b / "out" / name)) {
            identical = false;
            break;
        }
        ++compared;
    }
    identical = identical && compared >= 8;

    // Codec round-trip identity on 1000 random frame payloads.
    std::mt19937_64 gen(110);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> beams_d(1, 8), taps_d(2, 48);
    const fs::path codec_dir = work_dir("codec");
    int payloads = 0;
    bool codec_ok = true;
    for (int s = 0; s < 20 && codec_ok; ++s) {
        const int beams = beams_d(gen), taps = taps_d(gen);
        CirStream stream;
        for (std::uint32_t k = 0; k < 50; ++k) {
            CirFrame f;
            f.k = k;
            f.gains = GainMatrix::Zero(beams, taps);
            for (int b = 0; b < beams; ++b)
                for (int l = 0; l < taps; ++l)
                    f.gains(b, l) = Complex{g(gen), g(gen)};
            stream.push_back(std::move(f));
        }
        const fs::path path = codec_dir / ("p" + std::to_string(s) + ".cirs");
        write_frames(path, stream, 1e-3, s, false);
        const auto [header, back] = read_frames(path);
        for (std::size_t i = 0; i < stream.size(); ++i, ++payloads)
            if (std::memcmp(back[i].gains.data(), stream[i].gains.data(),
                            sizeof(Complex) * stream[i].gains.size()) != 0)
                codec_ok = false;
    }
    codec_ok = codec_ok && payloads == 1000;

    report(8, "determinism and formats", identical && codec_ok,
           std::string("repeated pipeline runs byte-identical: ") + (identical ? "yes" : "NO") +
               " (" + std::to_string(compared) + " artifacts), codec round-trip on 1000 payloads: " +
               (codec_ok ? "exact" : "FAILED"));
}

} // namespace

int main()
{
    std::cout << "misac acceptance suite" << std::endl;
    criterion_1();
    criterion_2();
    criteria_3_and_9();
    criteria_4_and_5();
    criterion_6();
    criterion_7();
    criterion_8();
    if (failures == 0)
        std::cout << "all criteria passed" << std::endl;
    else
        std::cout << failures << " criteria failed" << std::endl;
    return failures;
}
