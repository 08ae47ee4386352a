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
// Command-line front end. Exit codes: 0 success, 2 configuration or usage
// error, 3 stage failure, 4 file I/O failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "misac/errors.hpp"
#include "misac/io.hpp"
#include "misac/pipeline.hpp"
#include "misac/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Scene from either --scene (file) or --preset (built-in), with optional
/// duration/seed replacements.
misac::SceneConfig resolve_scene(const std::string &scene_path, const std::string &preset,
                                 const std::optional<double> &duration,
                                 const std::optional<std::uint64_t> &seed)
{
    if (scene_path.empty() == preset.empty()) {
        throw misac::config_error("exactly one of --scene and --preset is required");
    }
    misac::SceneConfig scene =
        preset.empty() ? misac::load_scene(scene_path) : misac::scene_preset(preset);
    if (duration) {
        scene.duration_s = *duration;
    }
    if (seed) {
        scene.rng_seed = *seed;
    }
    scene.validate();
    return scene;
}

/// "a,b,c" -> stage switches; unknown names are config errors.
void apply_stage_list(misac::RunManifest &m, const std::string &list)
{
    m.stage_simulate = m.stage_sync = m.stage_detect = m.stage_track = m.stage_mdoppler =
        m.stage_eval = false;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const std::size_t comma = list.find(',', pos);
        const std::string name =
            list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (name == "simulate") {
            m.stage_simulate = true;
        } else if (name == "sync") {
            m.stage_sync = true;
        } else if (name == "detect") {
            m.stage_detect = true;
        } else if (name == "track") {
            m.stage_track = true;
        } else if (name == "mdoppler") {
            m.stage_mdoppler = true;
        } else if (name == "eval") {
            m.stage_eval = true;
        } else {
            throw misac::config_error("--stages: unknown stage '" + name + "'");
        }
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
}

/// "key=value" -> one overrides entry; the value is JSON when it parses as
/// JSON (numbers, booleans), a plain string otherwise.
void apply_set_entries(json &overrides, const std::vector<std::string> &entries)
{
    for (const std::string &entry : entries) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw misac::config_error("--set expects key=value, got '" + entry + "'");
        }
        const std::string key = entry.substr(0, eq);
        const std::string value = entry.substr(eq + 1);
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error &) {
            parsed = value;
        }
        overrides[key] = parsed;
    }
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"misac: multistatic asynchronous ISAC sensing toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "misac 1.0.0");

    // ---- simulate -------------------------------------------------------------
    struct {
        std::string scene;
        std::string preset;
        std::string out_dir;
        std::string emit_scene;
        std::optional<double> duration;
        std::optional<std::uint64_t> seed;
    } sim;
    auto *sim_cmd =
        app.add_subcommand("simulate", "Synthesize per-receiver CIR streams and ground truth");
    sim_cmd->add_option("--scene", sim.scene, "Scene description (JSON)")
        ->check(CLI::ExistingFile);
    sim_cmd->add_option("--preset", sim.preset,
                        "Built-in scene preset (los, lab, walker, pair)");
    sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory for frames and truth");
    sim_cmd->add_option("--emit-scene", sim.emit_scene,
                        "Also write the resolved scene JSON to this path");
    sim_cmd->add_option("--duration", sim.duration, "Run length in seconds");
    sim_cmd->add_option("--seed", sim.seed, "RNG seed");
    sim_cmd->callback([&] {
        const misac::SceneConfig scene =
            resolve_scene(sim.scene, sim.preset, sim.duration, sim.seed);
        if (!sim.emit_scene.empty()) {
            misac::save_scene(sim.emit_scene, scene);
        }
        if (sim.out_dir.empty()) {
            if (sim.emit_scene.empty()) {
                throw misac::config_error("simulate: need --out-dir or --emit-scene");
            }
            return;
        }
        fs::create_directories(sim.out_dir);
        misac::save_scene(misac::scene_echo_path(sim.out_dir), scene);
        misac::RunManifest m;
        m.scene_path = misac::scene_echo_path(sim.out_dir);
        m.out_dir = sim.out_dir;
        m.stage_sync = m.stage_detect = m.stage_track = m.stage_mdoppler = m.stage_eval = false;
        misac::run_pipeline(m);
    });

    // ---- sync -----------------------------------------------------------------
    struct {
        std::string in;
        std::string out;
        std::string report;
        double kappa = misac::SyncPolicy{}.threshold_kappa;
        bool drop = false;
    } syn;
    auto *sync_cmd =
        app.add_subcommand("sync", "Compensate TO/FO on one frame stream using the LOS path");
    sync_cmd->add_option("--in", syn.in, "Raw frame stream (.cirs)")
        ->required()
        ->check(CLI::ExistingFile);
    sync_cmd->add_option("--out", syn.out, "Compensated frame stream (.cirs)")->required();
    sync_cmd->add_option("--report", syn.report, "Per-frame sync report (CSV)")->required();
    sync_cmd->add_option("--kappa", syn.kappa, "LOS threshold: median + kappa * MAD");
    sync_cmd->add_flag("--drop-on-missing", syn.drop,
                       "Zero-fill frames without LOS instead of reusing the previous correction");
    sync_cmd->callback([&] {
        misac::SyncPolicy policy;
        policy.threshold_kappa = syn.kappa;
        policy.drop_on_missing = syn.drop;
        if (policy.threshold_kappa <= 0) {
            throw misac::config_error("--kappa must be positive");
        }
        const std::uint32_t dropped = misac::sync_file(syn.in, syn.out, syn.report, policy);
        if (dropped > 0) {
            misac::log_info("dropped " + std::to_string(dropped) +
                            " frame(s) without LOS (zero-filled in output)");
        }
    });

    // ---- detect ---------------------------------------------------------------
    struct {
        std::string scene;
        std::string preset;
        std::string in;
        std::string out;
        misac::DetectParams params;
    } det;
    auto *det_cmd = app.add_subcommand(
        "detect", "Background-subtract a synced stream and localize dynamic targets");
    det_cmd->add_option("--scene", det.scene, "Scene description (JSON)")
        ->check(CLI::ExistingFile);
    det_cmd->add_option("--preset", det.preset, "Built-in scene preset");
    det_cmd->add_option("--in", det.in, "Synced frame stream (.cirs)")
        ->required()
        ->check(CLI::ExistingFile);
    det_cmd->add_option("--out", det.out, "Detections (CSV)")->required();
    det_cmd->add_option("--prominence-ratio", det.params.prominence_ratio,
                        "Peak prominence as a fraction of the strongest peak");
    det_cmd->add_option("--min-separation", det.params.min_separation_taps,
                        "Minimum tap separation between peaks");
    det_cmd->add_option("--guard", det.params.guard_taps, "LOS guard taps excluded from search");
    det_cmd->add_option("--max-targets", det.params.max_targets, "Detections kept per frame");
    det_cmd->add_option("--noise-gate-kappa", det.params.noise_gate_kappa,
                        "Noise gate: median + kappa * MAD of the statistic");
    det_cmd->callback([&] {
        const misac::SceneConfig scene =
            resolve_scene(det.scene, det.preset, std::nullopt, std::nullopt);
        const std::size_t n = misac::detect_file(det.in, det.out, scene, det.params);
        misac::log_info(std::to_string(n) + " detection(s) written to " + det.out);
    });

    // ---- track ----------------------------------------------------------------
    struct {
        std::string scene;
        std::string preset;
        std::string in;
        std::string out;
        int rx_id = 0;
        std::uint32_t num_frames = 0;
        std::optional<double> q;
        std::optional<double> gate;
        std::optional<int> decimation;
    } trk;
    auto *trk_cmd =
        app.add_subcommand("track", "Run the bistatic EKF tracker over a detection stream");
    trk_cmd->add_option("--scene", trk.scene, "Scene description (JSON)")
        ->check(CLI::ExistingFile);
    trk_cmd->add_option("--preset", trk.preset, "Built-in scene preset");
    trk_cmd->add_option("--in", trk.in, "Detections (CSV)")->required()->check(CLI::ExistingFile);
    trk_cmd->add_option("--out", trk.out, "Track snapshots (CSV)")->required();
    trk_cmd->add_option("--rx-id", trk.rx_id, "Receiver index in the scene")->required();
    trk_cmd->add_option("--num-frames", trk.num_frames,
                        "Frames in the run (default: from the scene duration)");
    trk_cmd->add_option("--q", trk.q, "White-acceleration intensity (m^2/s^3)");
    trk_cmd->add_option("--gate", trk.gate, "Association gate (chi-square, 2 dof)");
    trk_cmd->add_option("--decimation", trk.decimation, "Frames per tracker step");
    trk_cmd->callback([&] {
        const misac::SceneConfig scene =
            resolve_scene(trk.scene, trk.preset, std::nullopt, std::nullopt);
        if (trk.rx_id < 0 || trk.rx_id >= scene.rx_count()) {
            throw misac::config_error("--rx-id out of range for this scene");
        }
        misac::TrackerParams params = misac::TrackerParams::for_scene(scene);
        if (trk.q) {
            params.q = *trk.q;
        }
        if (trk.gate) {
            params.gate_chi2 = *trk.gate;
        }
        if (trk.decimation) {
            params.decimation = *trk.decimation;
        }
        params.validate();
        const std::uint32_t frames =
            trk.num_frames != 0 ? trk.num_frames : scene.frame_count();
        misac::track_file(trk.in, trk.out, scene, trk.rx_id, frames, params);
    });

    // ---- mdoppler ---------------------------------------------------------------
    struct {
        std::string scene;
        std::string preset;
        std::string frames;
        std::string tracks;
        std::string out;
        std::string csv;
        int rx_id = 0;
        int window_length = misac::StftParams{}.window_length;
        int hop = misac::StftParams{}.hop;
        std::string window = "hann";
        int half_width = 2;
    } mdp;
    auto *mdp_cmd = app.add_subcommand(
        "mdoppler", "Extract the tracked target's slow-time signal and spectrogram");
    mdp_cmd->add_option("--scene", mdp.scene, "Scene description (JSON)")
        ->check(CLI::ExistingFile);
    mdp_cmd->add_option("--preset", mdp.preset, "Built-in scene preset");
    mdp_cmd->add_option("--frames", mdp.frames, "Synced frame stream (.cirs)")
        ->required()
        ->check(CLI::ExistingFile);
    mdp_cmd->add_option("--tracks", mdp.tracks, "Track snapshots (CSV)")
        ->required()
        ->check(CLI::ExistingFile);
    mdp_cmd->add_option("--out", mdp.out, "Spectrogram (.spcg + .json sidecar)")->required();
    mdp_cmd->add_option("--csv", mdp.csv, "Also write a plot-ready CSV here");
    mdp_cmd->add_option("--rx-id", mdp.rx_id, "Receiver index in the scene")->required();
    mdp_cmd->add_option("--window-length", mdp.window_length, "STFT window length (frames)");
    mdp_cmd->add_option("--hop", mdp.hop, "STFT hop (frames)");
    mdp_cmd->add_option("--window", mdp.window, "STFT window: hann or rect");
    mdp_cmd->add_option("--half-width", mdp.half_width,
                        "Taps on each side of the predicted tap to sum");
    mdp_cmd->callback([&] {
        const misac::SceneConfig scene =
            resolve_scene(mdp.scene, mdp.preset, std::nullopt, std::nullopt);
        if (mdp.rx_id < 0 || mdp.rx_id >= scene.rx_count()) {
            throw misac::config_error("--rx-id out of range for this scene");
        }
        misac::PipelineParams params = misac::params_for_scene(scene);
        params.stft.window_length = mdp.window_length;
        params.stft.hop = mdp.hop;
        params.stft.window = misac::window_from_string(mdp.window);
        params.stft.validate();
        if (mdp.half_width < 0) {
            throw misac::config_error("--half-width must be >= 0");
        }
        params.mdoppler_half_width = mdp.half_width;
        std::string why;
        const auto spec =
            misac::mdoppler_spectrogram(mdp.frames, mdp.tracks, scene, mdp.rx_id, params, &why);
        if (!spec) {
            throw misac::stage_error("mdoppler: " + why);
        }
        misac::write_spectrogram(mdp.out, *spec);
        if (!mdp.csv.empty()) {
            misac::write_spectrogram_csv(mdp.csv, *spec);
        }
    });

    // ---- eval -----------------------------------------------------------------
    struct {
        std::string scene;
        std::string preset;
        std::string dir;
        std::string report;
        double assoc_gate = misac::EvalParams{}.assoc_gate_m;
        double floor_db = misac::EvalParams{}.mdoppler_floor_db;
        std::optional<int> decimation;
    } evl;
    auto *evl_cmd = app.add_subcommand(
        "eval", "Score pipeline artifacts in a directory against the ground truth");
    evl_cmd->add_option("--scene", evl.scene, "Scene description (JSON)")
        ->check(CLI::ExistingFile);
    evl_cmd->add_option("--preset", evl.preset, "Built-in scene preset");
    evl_cmd->add_option("--dir", evl.dir, "Directory holding the canonical artifacts")
        ->required()
        ->check(CLI::ExistingDirectory);
    evl_cmd->add_option("--report", evl.report, "Report path (default: <dir>/report.json)");
    evl_cmd->add_option("--assoc-gate", evl.assoc_gate,
                        "Detection-to-truth association distance (m)");
    evl_cmd->add_option("--floor-db", evl.floor_db, "Peak-Doppler floor above the bin median");
    evl_cmd->add_option("--decimation", evl.decimation,
                        "Tracker step spacing used when tracking (for coverage)");
    evl_cmd->callback([&] {
        std::string scene_path = evl.scene;
        if (scene_path.empty() && evl.preset.empty() &&
            fs::exists(misac::scene_echo_path(evl.dir))) {
            scene_path = misac::scene_echo_path(evl.dir).string();
        }
        const misac::SceneConfig scene =
            resolve_scene(scene_path, evl.preset, std::nullopt, std::nullopt);
        misac::PipelineParams params = misac::params_for_scene(scene);
        params.eval.assoc_gate_m = evl.assoc_gate;
        params.eval.mdoppler_floor_db = evl.floor_db;
        if (params.eval.assoc_gate_m <= 0) {
            throw misac::config_error("--assoc-gate must be positive");
        }
        if (evl.decimation) {
            params.tracker.decimation = *evl.decimation;
            params.tracker.validate();
        }
        const misac::EvalReport report = misac::eval_directory(scene, evl.dir, params);
        const auto out = evl.report.empty() ? misac::report_path(evl.dir) : fs::path(evl.report);
        const auto j = misac::eval_report_to_json(report);
        misac::save_json(out, j);
        std::cout << j.dump(2) << "\n";
    });

    // ---- run --------------------------------------------------------------------
    struct {
        std::string manifest;
        std::string scene;
        std::string preset;
        std::string out_dir;
        std::string stages;
        std::optional<double> duration;
        std::optional<std::uint64_t> seed;
        std::vector<std::string> sets;
    } run;
    auto *run_cmd =
        app.add_subcommand("run", "Run the whole pipeline from a manifest or from flags");
    run_cmd->add_option("--manifest", run.manifest, "Run manifest (JSON); wins over other flags")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--scene", run.scene, "Scene description (JSON)")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--preset", run.preset, "Built-in scene preset");
    run_cmd->add_option("--out-dir", run.out_dir, "Output directory");
    run_cmd->add_option("--stages", run.stages,
                        "Comma list of stages to run (default: all of "
                        "simulate,sync,detect,track,mdoppler,eval)");
    run_cmd->add_option("--duration", run.duration, "Run length in seconds (with --preset)");
    run_cmd->add_option("--seed", run.seed, "RNG seed override");
    run_cmd->add_option("--set", run.sets,
                        "Stage parameter override, key=value (e.g. --set track.q=0.5)");
    run_cmd->callback([&] {
        misac::RunManifest m;
        if (!run.manifest.empty()) {
            const bool flags_too = !run.scene.empty() || !run.preset.empty() ||
                                   !run.out_dir.empty() || !run.stages.empty() ||
                                   run.duration.has_value() || run.seed.has_value() ||
                                   !run.sets.empty();
            if (flags_too) {
                misac::log_info(
                    "warning: --manifest given, ignoring the other run flags");
            }
            m = misac::load_manifest(run.manifest);
        } else {
            if (run.out_dir.empty()) {
                throw misac::config_error("run: --out-dir is required without --manifest");
            }
            m.out_dir = run.out_dir;
            if (!run.preset.empty()) {
                if (!run.scene.empty()) {
                    throw misac::config_error("run: --scene and --preset are exclusive");
                }
                misac::SceneConfig scene = misac::scene_preset(run.preset);
                if (run.duration) {
                    scene.duration_s = *run.duration;
                    scene.validate();
                }
                fs::create_directories(m.out_dir);
                misac::save_scene(misac::scene_echo_path(m.out_dir), scene);
                m.scene_path = misac::scene_echo_path(m.out_dir);
            } else if (!run.scene.empty()) {
                if (run.duration) {
                    throw misac::config_error("run: --duration only applies with --preset");
                }
                m.scene_path = run.scene;
            } else {
                throw misac::config_error("run: one of --scene and --preset is required");
            }
            if (!run.stages.empty()) {
                apply_stage_list(m, run.stages);
            }
            if (run.seed) {
                m.rng_seed = *run.seed;
            }
            apply_set_entries(m.overrides, run.sets);
        }
        misac::StageTimings timings;
        misac::run_pipeline(m, &timings);
        for (const misac::StageTiming &t : timings) {
            misac::log_info(t.stage + ": " + std::to_string(t.seconds) + " s");
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e); // --help / --version
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    } catch (const misac::config_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const misac::io_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const misac::stage_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
