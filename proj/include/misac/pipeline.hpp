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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "misac/detect.hpp"
#include "misac/io.hpp"
#include "misac/mdoppler.hpp"
#include "misac/scene.hpp"
#include "misac/sync.hpp"
#include "misac/track.hpp"

namespace misac {

// Orchestration: simulate -> sync -> detect -> track -> mdoppler -> eval per
// receiver, with every stage handing the next one a file, so stages are
// independently re-runnable.

// ---- logging -----------------------------------------------------------------

/// 0 = quiet, 1 = info (default), 2 = debug; set via MISAC_LOG (number or
/// quiet/info/debug). Messages go to stderr.
int log_level();
void log_info(const std::string &msg);
void log_debug(const std::string &msg);

// ---- manifest ------------------------------------------------------------------

struct RunManifest {
    int schema_version = 1;
    std::filesystem::path scene_path;
    std::filesystem::path out_dir;
    bool stage_simulate = true;
    bool stage_sync = true;
    bool stage_detect = true;
    bool stage_track = true;
    bool stage_mdoppler = true;
    bool stage_eval = true;
    nlohmann::json overrides = nlohmann::json::object();
    std::optional<std::uint64_t> rng_seed; ///< when set, replaces the scene's seed

    bool any_stage() const
    {
        return stage_simulate || stage_sync || stage_detect || stage_track || stage_mdoppler ||
               stage_eval;
    }
};

/// Strict decode; relative paths are resolved against base_dir.
RunManifest manifest_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir);
nlohmann::ordered_json manifest_to_json(const RunManifest &m);
RunManifest load_manifest(const std::filesystem::path &path);

// ---- stage parameters -------------------------------------------------------------

struct EvalParams {
    double assoc_gate_m = 0.5;      ///< detection-to-truth association distance
    double mdoppler_floor_db = 10.0; ///< peak-track floor passed to peak_doppler_track
};

struct PipelineParams {
    SyncPolicy sync;
    DetectParams detect;
    TrackerParams tracker;
    StftParams stft;
    int mdoppler_half_width = 2;
    EvalParams eval;
};

/// Defaults, with the scene-derived tracker noise/decimation settings.
PipelineParams params_for_scene(const SceneConfig &scene);

/// Applies "<stage>.<param>" overrides. Unknown keys and wrongly typed values
/// are config_errors; nothing is silently ignored.
void apply_overrides(PipelineParams &params, const nlohmann::json &overrides);

// ---- canonical artifact paths ------------------------------------------------------

std::filesystem::path scene_echo_path(const std::filesystem::path &dir);
std::filesystem::path raw_frames_path(const std::filesystem::path &dir, int rx);
std::filesystem::path clock_truth_path(const std::filesystem::path &dir, int rx);
std::filesystem::path parts_truth_path(const std::filesystem::path &dir, int rx);
std::filesystem::path synced_frames_path(const std::filesystem::path &dir, int rx);
std::filesystem::path sync_report_path(const std::filesystem::path &dir, int rx);
std::filesystem::path detections_path(const std::filesystem::path &dir, int rx);
std::filesystem::path tracks_path(const std::filesystem::path &dir, int rx);
std::filesystem::path spectrogram_path(const std::filesystem::path &dir, int rx);
std::filesystem::path report_path(const std::filesystem::path &dir);
std::filesystem::path timing_path(const std::filesystem::path &dir);

// ---- evaluation ----------------------------------------------------------------------

struct ReceiverReport {
    std::uint32_t rx_id = 0;
    std::optional<double> los_detection_rate;          ///< in [0, 1]
    std::optional<double> residual_fo_phase_std_rad;
    std::optional<double> detection_rate;              ///< in [0, 1]
    std::optional<double> false_alarms_per_frame;
    std::optional<double> localization_median_error_m;
    std::optional<double> track_rmse_m;
    std::optional<double> track_coverage;              ///< in [0, 1]
    std::optional<double> mdoppler_peak_mae_hz;
    std::optional<double> mean_abs_peak_doppler_hz;
};

struct XiRatioReport {
    double observed = 0.0;  ///< mean |peak Doppler| of rx0 / rx1
    double predicted = 0.0; ///< bistatic-factor ratio at the mean target position
    double relative_error = 0.0;
};

struct EvalReport {
    std::vector<ReceiverReport> receivers;
    std::optional<XiRatioReport> xi_ratio;
};

nlohmann::ordered_json eval_report_to_json(const EvalReport &report);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};
using StageTimings = std::vector<StageTiming>;

/// RMS of wrapped deviations from the circular mean; ~the usual std for
/// small spreads but immune to 2 pi jumps.
double circular_phase_std(const std::vector<double> &phases_rad);

/// Two-pass streaming metric: pass 1 finds the strongest mean-magnitude cell
/// outside tap 0 (the LOS reference, whose phase is zeroed by construction),
/// pass 2 collects that cell's phase; value() is the circular phase std.
class StrongestCellPhaseStd {
  public:
    void pass1(const CirFrame &frame);
    void begin_pass2(); ///< throws stage_error when pass 1 saw no frames
    void pass2(const CirFrame &frame);
    double value() const; ///< throws stage_error when no phase was collected

    int beam() const { return beam_; }
    int tap() const { return tap_; }

  private:
    Eigen::MatrixXd sum_;
    std::uint64_t count_ = 0;
    int beam_ = -1;
    int tap_ = -1;
    std::vector<double> phases_;
};

/// Everything evaluate_receiver can use; absent pieces null out the
/// corresponding report fields (e.g. no ground truth -> sensing-only report).
struct ReceiverEvalInputs {
    std::uint32_t rx_id = 0;
    std::uint32_t num_frames = 0;
    int tracker_decimation = 1; ///< tracker step spacing in frames (for coverage)
    std::optional<SyncReport> sync_report;
    std::optional<std::vector<ClockTruth>> clock_truth;
    std::optional<std::vector<std::vector<PartTruth>>> parts_truth; ///< [k]
    std::optional<std::vector<Detection>> detections;
    std::optional<std::vector<TrackSnapshot>> tracks;
    std::optional<Spectrogram> spectrogram;
    std::optional<double> residual_fo_phase_std_rad; ///< precomputed (streaming)
};

ReceiverReport evaluate_receiver(const ReceiverEvalInputs &inputs, const SceneConfig &scene,
                                 const EvalParams &params);

/// Per-receiver reports plus the cross-receiver Doppler-scale ratio (emitted
/// when at least two receivers have both a peak-Doppler mean and truth).
EvalReport evaluate(const std::vector<ReceiverEvalInputs> &inputs, const SceneConfig &scene,
                    const EvalParams &params);

/// Builds ReceiverEvalInputs from whatever canonical artifacts exist in dir
/// and runs evaluate().
EvalReport eval_directory(const SceneConfig &scene, const std::filesystem::path &dir,
                          const PipelineParams &params);

// ---- single-stream stage helpers (the CLI stage subcommands) --------------------------

/// Raw frame stream -> TO/FO-compensated stream plus per-frame report.
/// Frames dropped by the policy are written as all-zero placeholders so frame
/// indices stay aligned with the ground truth; the count is returned.
std::uint32_t sync_file(const std::filesystem::path &in, const std::filesystem::path &out,
                        const std::filesystem::path &report, const SyncPolicy &policy);

/// Synced frame stream -> detections file (two passes: background, then
/// per-frame detection). Returns the number of detections written.
std::size_t detect_file(const std::filesystem::path &in, const std::filesystem::path &out,
                        const SceneConfig &scene, const DetectParams &params);

/// Detections file -> track snapshot file for one receiver.
void track_file(const std::filesystem::path &detections, const std::filesystem::path &out,
                const SceneConfig &scene, int rx_id, std::uint32_t num_frames,
                const TrackerParams &params);

/// Synced frames + tracks -> spectrogram of the primary track. Returns
/// nullopt (with the reason in *why) when no track ever confirmed or the
/// slow-time signal is shorter than one STFT window.
std::optional<Spectrogram> mdoppler_spectrogram(const std::filesystem::path &frames,
                                                const std::filesystem::path &tracks,
                                                const SceneConfig &scene, int rx_id,
                                                const PipelineParams &params,
                                                std::string *why = nullptr);

// ---- orchestration ------------------------------------------------------------------

/// Runs the enabled stages in order for every receiver. Artifacts land in
/// manifest.out_dir under the canonical names; the eval report (also written
/// to report.json) is returned. Stage wall-clock goes to timing.json and,
/// when `timings` is non-null, is copied there too. Deterministic given the
/// seed: timing is the only non-reproducible output, which is why it lives
/// in its own file.
EvalReport run_pipeline(const RunManifest &manifest, StageTimings *timings = nullptr);

} // namespace misac
