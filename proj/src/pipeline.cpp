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

#include "misac/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "misac/errors.hpp"
#include "misac/sim.hpp"

namespace misac {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---- logging -----------------------------------------------------------------

int log_level()
{
    static const int level = [] {
        const char *env = std::getenv("MISAC_LOG");
        if (env == nullptr) {
            return 1;
        }
        const std::string v(env);
        if (v == "0" || v == "quiet") {
            return 0;
        }
        if (v == "2" || v == "debug") {
            return 2;
        }
        return 1;
    }();
    return level;
}

void log_info(const std::string &msg)
{
    if (log_level() >= 1) {
        std::cerr << "[misac] " << msg << "\n";
    }
}

void log_debug(const std::string &msg)
{
    if (log_level() >= 2) {
        std::cerr << "[misac] " << msg << "\n";
    }
}

// ---- manifest ------------------------------------------------------------------

namespace {

void require_known_keys(const json &j, const std::vector<std::string> &known,
                        const std::string &where)
{
    for (const auto &item : j.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            throw config_error(where + ": unknown key '" + item.key() + "'");
        }
    }
}

fs::path resolve_path(const std::string &raw, const fs::path &base)
{
    fs::path p(raw);
    if (p.is_relative() && !base.empty()) {
        p = base / p;
    }
    return p;
}

bool bool_at(const json &j, const char *key, bool fallback, const std::string &where)
{
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_boolean()) {
        throw config_error(where + ": '" + std::string(key) + "' expects a boolean");
    }
    return j.at(key).get<bool>();
}

} // namespace

RunManifest manifest_from_json(const json &j, const fs::path &base_dir)
{
    if (!j.is_object()) {
        throw config_error("run manifest: expected a JSON object");
    }
    require_known_keys(
        j, {"schema_version", "scene", "out_dir", "stages", "overrides", "rng_seed"},
        "run manifest");

    RunManifest m;
    if (j.contains("schema_version")) {
        if (!j.at("schema_version").is_number_integer()) {
            throw config_error("run manifest: 'schema_version' expects an integer");
        }
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != 1) {
            throw config_error("run manifest: unsupported schema_version " +
                               std::to_string(m.schema_version));
        }
    }
    if (!j.contains("scene") || !j.at("scene").is_string()) {
        throw config_error("run manifest: 'scene' (string path) is required");
    }
    if (!j.contains("out_dir") || !j.at("out_dir").is_string()) {
        throw config_error("run manifest: 'out_dir' (string path) is required");
    }
    m.scene_path = resolve_path(j.at("scene").get<std::string>(), base_dir);
    m.out_dir = resolve_path(j.at("out_dir").get<std::string>(), base_dir);

    if (j.contains("stages")) {
        const json &s = j.at("stages");
        if (!s.is_object()) {
            throw config_error("run manifest: 'stages' expects an object");
        }
        require_known_keys(s, {"simulate", "sync", "detect", "track", "mdoppler", "eval"},
                           "run manifest stages");
        m.stage_simulate = bool_at(s, "simulate", true, "run manifest stages");
        m.stage_sync = bool_at(s, "sync", true, "run manifest stages");
        m.stage_detect = bool_at(s, "detect", true, "run manifest stages");
        m.stage_track = bool_at(s, "track", true, "run manifest stages");
        m.stage_mdoppler = bool_at(s, "mdoppler", true, "run manifest stages");
        m.stage_eval = bool_at(s, "eval", true, "run manifest stages");
    }
    if (j.contains("overrides")) {
        if (!j.at("overrides").is_object()) {
            throw config_error("run manifest: 'overrides' expects an object");
        }
        m.overrides = j.at("overrides");
    }
    if (j.contains("rng_seed")) {
        // Accept any nonnegative integer: the parser yields unsigned numbers
        // but in-memory construction from an int literal yields signed ones.
        const auto &seed = j.at("rng_seed");
        if (!seed.is_number_unsigned() &&
            !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
            throw config_error("run manifest: 'rng_seed' expects a nonnegative integer");
        }
        m.rng_seed = seed.get<std::uint64_t>();
    }
    return m;
}

ordered_json manifest_to_json(const RunManifest &m)
{
    ordered_json j;
    j["schema_version"] = m.schema_version;
    j["scene"] = m.scene_path.string();
    j["out_dir"] = m.out_dir.string();
    j["stages"] = {{"simulate", m.stage_simulate}, {"sync", m.stage_sync},
                   {"detect", m.stage_detect},     {"track", m.stage_track},
                   {"mdoppler", m.stage_mdoppler}, {"eval", m.stage_eval}};
    j["overrides"] = m.overrides;
    if (m.rng_seed) {
        j["rng_seed"] = *m.rng_seed;
    }
    return j;
}

RunManifest load_manifest(const fs::path &path)
{
    return manifest_from_json(load_json(path), path.parent_path());
}

// ---- stage parameters -------------------------------------------------------------

PipelineParams params_for_scene(const SceneConfig &scene)
{
    PipelineParams p;
    p.tracker = TrackerParams::for_scene(scene);
    return p;
}

namespace {

double override_num(const std::string &key, const json &v)
{
    if (!v.is_number()) {
        throw config_error("overrides: '" + key + "' expects a number");
    }
    return v.get<double>();
}

int override_int(const std::string &key, const json &v)
{
    if (!v.is_number_integer()) {
        throw config_error("overrides: '" + key + "' expects an integer");
    }
    return v.get<int>();
}

bool override_bool(const std::string &key, const json &v)
{
    if (!v.is_boolean()) {
        throw config_error("overrides: '" + key + "' expects a boolean");
    }
    return v.get<bool>();
}

std::string override_str(const std::string &key, const json &v)
{
    if (!v.is_string()) {
        throw config_error("overrides: '" + key + "' expects a string");
    }
    return v.get<std::string>();
}

} // namespace

void apply_overrides(PipelineParams &params, const json &overrides)
{
    if (overrides.is_null()) {
        return;
    }
    if (!overrides.is_object()) {
        throw config_error("overrides: expected a JSON object");
    }
    for (const auto &item : overrides.items()) {
        const std::string &key = item.key();
        const json &v = item.value();
        if (key == "sync.threshold_kappa") {
            params.sync.threshold_kappa = override_num(key, v);
        } else if (key == "sync.drop_on_missing") {
            params.sync.drop_on_missing = override_bool(key, v);
        } else if (key == "detect.prominence_ratio") {
            params.detect.prominence_ratio = override_num(key, v);
        } else if (key == "detect.min_separation_taps") {
            params.detect.min_separation_taps = override_int(key, v);
        } else if (key == "detect.guard_taps") {
            params.detect.guard_taps = override_int(key, v);
        } else if (key == "detect.max_targets") {
            params.detect.max_targets = override_int(key, v);
        } else if (key == "detect.noise_gate_kappa") {
            params.detect.noise_gate_kappa = override_num(key, v);
        } else if (key == "track.q") {
            params.tracker.q = override_num(key, v);
        } else if (key == "track.sigma_range_m") {
            params.tracker.sigma_range_m = override_num(key, v);
        } else if (key == "track.sigma_theta_rad") {
            params.tracker.sigma_theta_rad = override_num(key, v);
        } else if (key == "track.gate_chi2") {
            params.tracker.gate_chi2 = override_num(key, v);
        } else if (key == "track.confirm_m") {
            params.tracker.confirm_m = override_int(key, v);
        } else if (key == "track.confirm_n") {
            params.tracker.confirm_n = override_int(key, v);
        } else if (key == "track.max_coast") {
            params.tracker.max_coast = override_int(key, v);
        } else if (key == "track.decimation") {
            params.tracker.decimation = override_int(key, v);
        } else if (key == "mdoppler.window_length") {
            params.stft.window_length = override_int(key, v);
        } else if (key == "mdoppler.hop") {
            params.stft.hop = override_int(key, v);
        } else if (key == "mdoppler.window") {
            params.stft.window = window_from_string(override_str(key, v));
        } else if (key == "mdoppler.half_width") {
            params.mdoppler_half_width = override_int(key, v);
            if (params.mdoppler_half_width < 0) {
                throw config_error("overrides: 'mdoppler.half_width' must be >= 0");
            }
        } else if (key == "mdoppler.floor_db") {
            params.eval.mdoppler_floor_db = override_num(key, v);
        } else if (key == "eval.assoc_gate_m") {
            params.eval.assoc_gate_m = override_num(key, v);
            if (params.eval.assoc_gate_m <= 0) {
                throw config_error("overrides: 'eval.assoc_gate_m' must be positive");
            }
        } else {
            throw config_error("overrides: unknown parameter '" + key + "'");
        }
    }
    params.tracker.validate();
    params.stft.validate();
    if (params.sync.threshold_kappa <= 0) {
        throw config_error("overrides: 'sync.threshold_kappa' must be positive");
    }
}

// ---- canonical artifact paths ------------------------------------------------------

namespace {

fs::path rx_file(const fs::path &dir, int rx, const char *suffix)
{
    return dir / ("rx" + std::to_string(rx) + suffix);
}

} // namespace

fs::path scene_echo_path(const fs::path &dir) { return dir / "scene.json"; }
fs::path raw_frames_path(const fs::path &dir, int rx) { return rx_file(dir, rx, "_raw.cirs"); }
fs::path clock_truth_path(const fs::path &dir, int rx) { return rx_file(dir, rx, "_clock.csv"); }
fs::path parts_truth_path(const fs::path &dir, int rx) { return rx_file(dir, rx, "_parts.csv"); }
fs::path synced_frames_path(const fs::path &dir, int rx)
{
    return rx_file(dir, rx, "_synced.cirs");
}
fs::path sync_report_path(const fs::path &dir, int rx) { return rx_file(dir, rx, "_sync.csv"); }
fs::path detections_path(const fs::path &dir, int rx)
{
    return rx_file(dir, rx, "_detections.csv");
}
fs::path tracks_path(const fs::path &dir, int rx) { return rx_file(dir, rx, "_tracks.csv"); }
fs::path spectrogram_path(const fs::path &dir, int rx)
{
    return rx_file(dir, rx, "_spectrogram.spcg");
}
fs::path report_path(const fs::path &dir) { return dir / "report.json"; }
fs::path timing_path(const fs::path &dir) { return dir / "timing.json"; }

// ---- evaluation metrics --------------------------------------------------------------

double circular_phase_std(const std::vector<double> &phases_rad)
{
    if (phases_rad.empty()) {
        throw stage_error("circular_phase_std: empty input");
    }
    double c = 0.0;
    double s = 0.0;
    for (const double p : phases_rad) {
        c += std::cos(p);
        s += std::sin(p);
    }
    const double mean = std::atan2(s, c);
    double ss = 0.0;
    for (const double p : phases_rad) {
        const double d = wrap_angle(p - mean);
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(phases_rad.size()));
}

void StrongestCellPhaseStd::pass1(const CirFrame &frame)
{
    if (count_ == 0) {
        sum_ = Eigen::MatrixXd::Zero(frame.beams(), frame.taps());
    }
    if (frame.gains.rows() != sum_.rows() || frame.gains.cols() != sum_.cols()) {
        throw stage_error("phase metric: frame shape changed mid-stream");
    }
    sum_ += frame.gains.cwiseAbs();
    ++count_;
}

void StrongestCellPhaseStd::begin_pass2()
{
    if (count_ == 0) {
        throw stage_error("phase metric: no frames in pass 1");
    }
    if (sum_.cols() < 2) {
        throw stage_error("phase metric: need at least two taps");
    }
    // Tap 0 is the LOS reference whose phase is zeroed by the FO correction
    // itself, so measure on the strongest cell beyond it.
    double best = -1.0;
    for (int b = 0; b < sum_.rows(); ++b) {
        for (int l = 1; l < sum_.cols(); ++l) {
            if (sum_(b, l) > best) {
                best = sum_(b, l);
                beam_ = b;
                tap_ = l;
            }
        }
    }
}

void StrongestCellPhaseStd::pass2(const CirFrame &frame)
{
    if (beam_ < 0) {
        throw stage_error("phase metric: begin_pass2() not called");
    }
    const Complex c = frame.gains(beam_, tap_);
    if (std::abs(c) > 0.0) { // dropped-frame placeholders are all-zero
        phases_.push_back(std::arg(c));
    }
}

double StrongestCellPhaseStd::value() const { return circular_phase_std(phases_); }

namespace {

double median_of(std::vector<double> v)
{
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) {
        return *mid;
    }
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

/// Torso position per frame per target id, from the parts truth.
std::vector<std::map<int, Vec2>> torso_by_frame(const std::vector<std::vector<PartTruth>> &parts)
{
    std::vector<std::map<int, Vec2>> torso(parts.size());
    for (std::size_t k = 0; k < parts.size(); ++k) {
        for (const PartTruth &p : parts[k]) {
            if (p.part == 0) {
                torso[k][p.target] = p.position;
            }
        }
    }
    return torso;
}

} // namespace

ReceiverReport evaluate_receiver(const ReceiverEvalInputs &inputs, const SceneConfig &scene,
                                 const EvalParams &params)
{
    ReceiverReport rep;
    rep.rx_id = inputs.rx_id;
    rep.residual_fo_phase_std_rad = inputs.residual_fo_phase_std_rad;
    const std::uint32_t num_frames =
        inputs.num_frames != 0 ? inputs.num_frames : scene.frame_count();

    // LOS detection rate: detected pre-shift LOS tap vs the realized TO shift.
    if (inputs.sync_report && inputs.clock_truth) {
        const auto &sync = *inputs.sync_report;
        const auto &clock = *inputs.clock_truth;
        const std::size_t n = std::min(sync.size(), clock.size());
        if (n > 0) {
            std::size_t correct = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sync[i].los_tap == clock[i].to_shift_taps) {
                    ++correct;
                }
            }
            rep.los_detection_rate = static_cast<double>(correct) / static_cast<double>(n);
        }
    }

    // Detection metrics against the dynamic-part truth.
    if (inputs.detections && inputs.parts_truth && num_frames > 0) {
        const auto &parts = *inputs.parts_truth;
        std::size_t frames_with_truth = 0;
        for (const auto &frame_parts : parts) {
            if (!frame_parts.empty()) {
                ++frames_with_truth;
            }
        }
        std::set<std::uint32_t> frames_hit;
        std::size_t false_alarms = 0;
        std::vector<double> errors;
        for (const Detection &det : *inputs.detections) {
            const bool has_truth = det.k < parts.size() && !parts[det.k].empty();
            if (!has_truth) {
                ++false_alarms;
                continue;
            }
            double dmin = std::numeric_limits<double>::infinity();
            for (const PartTruth &p : parts[det.k]) {
                dmin = std::min(dmin, (det.position - p.position).norm());
            }
            errors.push_back(dmin);
            if (dmin <= params.assoc_gate_m) {
                frames_hit.insert(det.k);
            } else {
                ++false_alarms;
            }
        }
        if (frames_with_truth > 0) {
            rep.detection_rate =
                static_cast<double>(frames_hit.size()) / static_cast<double>(frames_with_truth);
        }
        rep.false_alarms_per_frame =
            static_cast<double>(false_alarms) / static_cast<double>(num_frames);
        if (!errors.empty()) {
            rep.localization_median_error_m = median_of(std::move(errors));
        }
    }

    // Track accuracy: each track is associated once, to the nearest torso at
    // its confirmation frame, then scored over its confirmed snapshots.
    if (inputs.tracks && inputs.parts_truth) {
        const auto torso = torso_by_frame(*inputs.parts_truth);
        std::map<int, std::vector<const TrackSnapshot *>> by_id;
        for (const TrackSnapshot &snap : *inputs.tracks) {
            by_id[snap.id].push_back(&snap);
        }
        double sum_sq = 0.0;
        std::size_t n_err = 0;
        std::set<std::uint32_t> covered;
        std::optional<std::uint32_t> first_confirm;
        for (const auto &[id, snaps] : by_id) {
            (void)id;
            const TrackSnapshot *confirm = nullptr;
            for (const TrackSnapshot *s : snaps) {
                if (s->status == TrackStatus::confirmed) {
                    confirm = s;
                    break;
                }
            }
            if (confirm == nullptr || confirm->k >= torso.size() ||
                torso[confirm->k].empty()) {
                continue;
            }
            if (!first_confirm || confirm->k < *first_confirm) {
                first_confirm = confirm->k;
            }
            const Vec2 at_confirm(confirm->x, confirm->y);
            int target = -1;
            double best = std::numeric_limits<double>::infinity();
            for (const auto &[tid, pos] : torso[confirm->k]) {
                const double d = (at_confirm - pos).norm();
                if (d < best) {
                    best = d;
                    target = tid;
                }
            }
            for (const TrackSnapshot *s : snaps) {
                if (s->status != TrackStatus::confirmed || s->k < confirm->k ||
                    s->k >= torso.size()) {
                    continue;
                }
                const auto it = torso[s->k].find(target);
                if (it == torso[s->k].end()) {
                    continue;
                }
                const double err = (Vec2(s->x, s->y) - it->second).norm();
                sum_sq += err * err;
                ++n_err;
                covered.insert(s->k);
            }
        }
        if (n_err > 0) {
            rep.track_rmse_m = std::sqrt(sum_sq / static_cast<double>(n_err));
        }
        if (first_confirm && num_frames > 0) {
            const std::uint32_t decim =
                static_cast<std::uint32_t>(std::max(1, inputs.tracker_decimation));
            const std::uint32_t last_step = ((num_frames - 1) / decim) * decim;
            const std::uint32_t first_step = ((*first_confirm + decim - 1) / decim) * decim;
            if (last_step >= first_step) {
                const std::uint32_t total = (last_step - first_step) / decim + 1;
                rep.track_coverage =
                    static_cast<double>(covered.size()) / static_cast<double>(total);
            }
        }
    }

    // Micro-Doppler: peak track vs the analytic torso Doppler.
    if (inputs.spectrogram) {
        const Spectrogram &spec = *inputs.spectrogram;
        const PeakTrack peaks = peak_doppler_track(spec, params.mdoppler_floor_db);
        try {
            rep.mean_abs_peak_doppler_hz = peaks.mean_abs_doppler_hz();
        } catch (const stage_error &) {
            // every time bin below the floor: leave the field empty
        }
        if (inputs.parts_truth && spec.frame_interval_s > 0) {
            const auto &parts = *inputs.parts_truth;
            double sum_abs = 0.0;
            std::size_t n = 0;
            for (int i = 0; i < spec.time_bins(); ++i) {
                if (!peaks.doppler_hz[static_cast<std::size_t>(i)]) {
                    continue;
                }
                const auto k = static_cast<std::size_t>(std::lround(
                    spec.time_axis_s[i] / spec.frame_interval_s));
                if (k >= parts.size()) {
                    continue;
                }
                for (const PartTruth &p : parts[k]) {
                    if (p.target == 0 && p.part == 0) {
                        sum_abs += std::abs(*peaks.doppler_hz[static_cast<std::size_t>(i)] -
                                            p.doppler_hz);
                        ++n;
                        break;
                    }
                }
            }
            if (n > 0) {
                rep.mdoppler_peak_mae_hz = sum_abs / static_cast<double>(n);
            }
        }
    }

    return rep;
}

EvalReport evaluate(const std::vector<ReceiverEvalInputs> &inputs, const SceneConfig &scene,
                    const EvalParams &params)
{
    EvalReport report;
    report.receivers.reserve(inputs.size());
    for (const ReceiverEvalInputs &in : inputs) {
        report.receivers.push_back(evaluate_receiver(in, scene, params));
    }

    // Doppler-scale ratio across the first two receivers: both observe the
    // same motion, so the ratio of their mean |peak Doppler| should match the
    // ratio of their bistatic factors at the (shared) mean target position.
    if (inputs.size() >= 2 && report.receivers[0].mean_abs_peak_doppler_hz &&
        report.receivers[1].mean_abs_peak_doppler_hz && inputs[0].parts_truth) {
        Vec2 mean_pos(0.0, 0.0);
        std::size_t n = 0;
        for (const auto &frame_parts : *inputs[0].parts_truth) {
            for (const PartTruth &p : frame_parts) {
                if (p.target == 0 && p.part == 0) {
                    mean_pos += p.position;
                    ++n;
                    break;
                }
            }
        }
        const double obs1 = *report.receivers[1].mean_abs_peak_doppler_hz;
        if (n > 0 && obs1 > 0 && inputs[0].rx_id < scene.rx_positions.size() &&
            inputs[1].rx_id < scene.rx_positions.size()) {
            mean_pos /= static_cast<double>(n);
            try {
                const double xi0 =
                    bistatic_factor(scene.tx_position,
                                    scene.rx_positions[inputs[0].rx_id], mean_pos)
                        .xi;
                const double xi1 =
                    bistatic_factor(scene.tx_position,
                                    scene.rx_positions[inputs[1].rx_id], mean_pos)
                        .xi;
                if (xi1 > 0 && xi0 > 0) {
                    XiRatioReport xi;
                    xi.observed = *report.receivers[0].mean_abs_peak_doppler_hz / obs1;
                    xi.predicted = xi0 / xi1;
                    xi.relative_error = std::abs(xi.observed - xi.predicted) / xi.predicted;
                    report.xi_ratio = xi;
                }
            } catch (const std::domain_error &) {
                // target coincides with an antenna: no ratio
            }
        }
    }
    return report;
}

namespace {

void set_optional(ordered_json &j, const char *key, const std::optional<double> &v)
{
    if (v) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
    }
}

} // namespace

ordered_json eval_report_to_json(const EvalReport &report)
{
    ordered_json j;
    j["schema_version"] = 1;
    j["receivers"] = ordered_json::array();
    for (const ReceiverReport &r : report.receivers) {
        ordered_json jr;
        jr["rx_id"] = r.rx_id;
        set_optional(jr, "los_detection_rate", r.los_detection_rate);
        set_optional(jr, "residual_fo_phase_std_rad", r.residual_fo_phase_std_rad);
        set_optional(jr, "detection_rate", r.detection_rate);
        set_optional(jr, "false_alarms_per_frame", r.false_alarms_per_frame);
        set_optional(jr, "localization_median_error_m", r.localization_median_error_m);
        set_optional(jr, "track_rmse_m", r.track_rmse_m);
        set_optional(jr, "track_coverage", r.track_coverage);
        set_optional(jr, "mdoppler_peak_mae_hz", r.mdoppler_peak_mae_hz);
        set_optional(jr, "mean_abs_peak_doppler_hz", r.mean_abs_peak_doppler_hz);
        j["receivers"].push_back(std::move(jr));
    }
    if (report.xi_ratio) {
        j["xi_ratio"] = {{"observed", report.xi_ratio->observed},
                         {"predicted", report.xi_ratio->predicted},
                         {"relative_error", report.xi_ratio->relative_error}};
    } else {
        j["xi_ratio"] = nullptr;
    }
    return j;
}

EvalReport eval_directory(const SceneConfig &scene, const fs::path &dir,
                          const PipelineParams &params)
{
    std::vector<ReceiverEvalInputs> inputs;
    for (int rx = 0; rx < scene.rx_count(); ++rx) {
        ReceiverEvalInputs in;
        in.rx_id = static_cast<std::uint32_t>(rx);
        in.tracker_decimation = params.tracker.decimation;

        const fs::path synced = synced_frames_path(dir, rx);
        const fs::path raw = raw_frames_path(dir, rx);
        if (fs::exists(synced)) {
            in.num_frames = FrameReader(synced).header().num_frames;
        } else if (fs::exists(raw)) {
            in.num_frames = FrameReader(raw).header().num_frames;
        } else {
            in.num_frames = scene.frame_count();
        }

        if (fs::exists(sync_report_path(dir, rx))) {
            in.sync_report = read_sync_report(sync_report_path(dir, rx));
        }
        if (fs::exists(clock_truth_path(dir, rx))) {
            in.clock_truth = read_clock_truth(clock_truth_path(dir, rx));
        }
        if (fs::exists(parts_truth_path(dir, rx))) {
            in.parts_truth = read_parts_truth(parts_truth_path(dir, rx), in.num_frames);
        }
        if (fs::exists(detections_path(dir, rx))) {
            in.detections = read_detections(detections_path(dir, rx));
        }
        if (fs::exists(tracks_path(dir, rx))) {
            in.tracks = read_tracks(tracks_path(dir, rx)).second;
        }
        if (fs::exists(spectrogram_path(dir, rx))) {
            in.spectrogram = read_spectrogram(spectrogram_path(dir, rx));
        }
        if (fs::exists(synced)) {
            try {
                StrongestCellPhaseStd metric;
                CirFrame frame;
                FrameReader pass1(synced);
                while (pass1.next(frame)) {
                    metric.pass1(frame);
                }
                metric.begin_pass2();
                FrameReader pass2(synced);
                while (pass2.next(frame)) {
                    metric.pass2(frame);
                }
                in.residual_fo_phase_std_rad = metric.value();
            } catch (const stage_error &) {
                // degenerate stream (empty or all-zero): no phase metric
            }
        }
        inputs.push_back(std::move(in));
    }
    return evaluate(inputs, scene, params.eval);
}

// ---- orchestration ------------------------------------------------------------------

namespace {

template <typename Fn>
void run_stage(const char *name, StageTimings &timings, Fn &&fn)
{
    log_info(std::string("stage ") + name);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fn();
    } catch (const config_error &e) {
        throw config_error(std::string(name) + ": " + e.what());
    } catch (const io_error &e) {
        throw io_error(std::string(name) + ": " + e.what());
    } catch (const stage_error &e) {
        throw stage_error(std::string(name) + ": " + e.what());
    } catch (const std::exception &e) {
        throw stage_error(std::string(name) + ": " + e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    timings.push_back({name, dt.count()});
}

void stage_simulate(const SceneConfig &scene, const fs::path &dir)
{
    int current_rx = -1;
    std::unique_ptr<FrameWriter> writer;
    std::vector<FrameTruth> truths;
    const auto finalize = [&] {
        if (!writer) {
            return;
        }
        writer->close();
        write_clock_truth(clock_truth_path(dir, current_rx), truths);
        write_parts_truth(parts_truth_path(dir, current_rx), truths);
        writer.reset();
        truths.clear();
    };
    synthesize_run(scene, [&](CirFrame &&frame, const FrameTruth &truth) {
        if (static_cast<int>(frame.rx_id) != current_rx) {
            finalize();
            current_rx = static_cast<int>(frame.rx_id);
            FrameStreamHeader header;
            header.num_frames = scene.frame_count();
            header.num_beams = static_cast<std::uint32_t>(scene.num_beams);
            header.num_taps = static_cast<std::uint32_t>(scene.num_taps);
            header.frame_interval_s = scene.frame_interval_s;
            header.rx_id = frame.rx_id;
            writer = std::make_unique<FrameWriter>(raw_frames_path(dir, current_rx), header);
            truths.reserve(scene.frame_count());
        }
        writer->write(frame);
        truths.push_back(truth);
    });
    finalize();
}

} // namespace

// ---- single-stream stage helpers -------------------------------------------------------

std::uint32_t sync_file(const fs::path &in, const fs::path &out, const fs::path &report,
                        const SyncPolicy &policy)
{
    FrameReader reader(in);
    FrameStreamHeader header = reader.header();
    header.flags |= FrameStreamHeader::flag_synced;
    FrameWriter writer(out, header);
    Synchronizer synchronizer(policy);
    CirFrame frame;
    std::uint32_t zero_filled = 0;
    while (reader.next(frame)) {
        if (auto corrected = synchronizer.process(frame)) {
            writer.write(*corrected);
        } else {
            // Dropped frames become all-zero placeholders so the frame index
            // stays aligned with the ground truth downstream.
            CirFrame placeholder;
            placeholder.k = frame.k;
            placeholder.rx_id = frame.rx_id;
            placeholder.gains = GainMatrix::Zero(frame.gains.rows(), frame.gains.cols());
            writer.write(placeholder);
            ++zero_filled;
        }
    }
    writer.close();
    write_sync_report(report, synchronizer.report());
    return zero_filled;
}

std::size_t detect_file(const fs::path &in, const fs::path &out, const SceneConfig &scene,
                        const DetectParams &params)
{
    BackgroundAccumulator acc;
    CirFrame frame;
    std::uint32_t rx_id = 0;
    {
        FrameReader pass1(in);
        rx_id = pass1.header().rx_id;
        while (pass1.next(frame)) {
            acc.add(frame);
        }
    }
    const Background background = acc.finish();
    std::vector<Detection> all;
    int dropped = 0;
    FrameReader pass2(in);
    while (pass2.next(frame)) {
        FrameDetections fd =
            frame_detections(frame, background, scene, static_cast<int>(rx_id), params);
        all.insert(all.end(), fd.detections.begin(), fd.detections.end());
        dropped += fd.dropped;
    }
    write_detections(out, all);
    log_debug("rx" + std::to_string(rx_id) + ": " + std::to_string(all.size()) +
              " detections, " + std::to_string(dropped) + " degenerate localization(s)");
    return all.size();
}

void track_file(const fs::path &detections, const fs::path &out, const SceneConfig &scene,
                int rx_id, std::uint32_t num_frames, const TrackerParams &params)
{
    const std::vector<Detection> dets = read_detections(detections);
    const auto history =
        track_stream(dets, num_frames, scene.pair(rx_id), params, scene.frame_interval_s);
    write_tracks(out, history, static_cast<std::uint32_t>(rx_id));
}

std::optional<Spectrogram> mdoppler_spectrogram(const fs::path &frames, const fs::path &tracks,
                                                const SceneConfig &scene, int rx_id,
                                                const PipelineParams &params, std::string *why)
{
    const auto [file_rx, history] = read_tracks(tracks);
    (void)file_rx;
    int track_id = 0;
    try {
        track_id = primary_track_id(history);
    } catch (const stage_error &) {
        if (why != nullptr) {
            *why = "no confirmed track in " + tracks.string();
        }
        return std::nullopt;
    }
    std::vector<TrackSnapshot> snaps;
    for (const TrackSnapshot &s : history) {
        if (s.id == track_id) {
            snaps.push_back(s);
        }
    }
    SlowTimeBuilder builder(std::move(snaps), scene.pair(rx_id), scene.range_quantum_m(),
                            scene.frame_interval_s, params.mdoppler_half_width,
                            std::max(1, params.tracker.decimation));
    FrameReader reader(frames);
    CirFrame frame;
    while (reader.next(frame)) {
        builder.feed(frame);
    }
    const SlowTime slow = builder.finish();
    if (static_cast<int>(slow.samples.size()) < params.stft.window_length) {
        if (why != nullptr) {
            *why = "slow-time signal (" + std::to_string(slow.samples.size()) +
                   " samples) shorter than one STFT window (" +
                   std::to_string(params.stft.window_length) + ")";
        }
        return std::nullopt;
    }
    return stft_spectrogram(slow, params.stft);
}

namespace {

void stage_sync_all(const SceneConfig &scene, const fs::path &dir, const SyncPolicy &policy)
{
    for (int rx = 0; rx < scene.rx_count(); ++rx) {
        const std::uint32_t zero_filled = sync_file(
            raw_frames_path(dir, rx), synced_frames_path(dir, rx), sync_report_path(dir, rx),
            policy);
        if (zero_filled > 0) {
            log_info("rx" + std::to_string(rx) + ": dropped " + std::to_string(zero_filled) +
                     " frame(s) without LOS (zero-filled in output)");
        }
    }
}

void stage_detect_all(const SceneConfig &scene, const fs::path &dir, const DetectParams &params)
{
    for (int rx = 0; rx < scene.rx_count(); ++rx) {
        detect_file(synced_frames_path(dir, rx), detections_path(dir, rx), scene, params);
    }
}

void stage_track_all(const SceneConfig &scene, const fs::path &dir, const TrackerParams &params)
{
    for (int rx = 0; rx < scene.rx_count(); ++rx) {
        const fs::path synced = synced_frames_path(dir, rx);
        const std::uint32_t num_frames =
            fs::exists(synced) ? FrameReader(synced).header().num_frames : scene.frame_count();
        track_file(detections_path(dir, rx), tracks_path(dir, rx), scene, rx, num_frames,
                   params);
    }
}

void stage_mdoppler_all(const SceneConfig &scene, const fs::path &dir,
                        const PipelineParams &params)
{
    for (int rx = 0; rx < scene.rx_count(); ++rx) {
        std::string why;
        const auto spec = mdoppler_spectrogram(synced_frames_path(dir, rx),
                                               tracks_path(dir, rx), scene, rx, params, &why);
        if (!spec) {
            log_info("rx" + std::to_string(rx) + ": skipping micro-Doppler: " + why);
            continue;
        }
        write_spectrogram(spectrogram_path(dir, rx), *spec);
    }
}

} // namespace

EvalReport run_pipeline(const RunManifest &manifest, StageTimings *timings)
{
    SceneConfig scene = load_scene(manifest.scene_path);
    if (manifest.rng_seed) {
        scene.rng_seed = *manifest.rng_seed;
        scene.validate();
    }
    PipelineParams params = params_for_scene(scene);
    apply_overrides(params, manifest.overrides);

    EvalReport report;
    if (!manifest.any_stage()) {
        log_info("all stages disabled; nothing to do");
        return report;
    }

    fs::create_directories(manifest.out_dir);
    const fs::path &dir = manifest.out_dir;
    save_scene(scene_echo_path(dir), scene);

    StageTimings collected;
    if (manifest.stage_simulate) {
        run_stage("simulate", collected, [&] { stage_simulate(scene, dir); });
    }
    if (manifest.stage_sync) {
        run_stage("sync", collected, [&] { stage_sync_all(scene, dir, params.sync); });
    }
    if (manifest.stage_detect) {
        run_stage("detect", collected, [&] { stage_detect_all(scene, dir, params.detect); });
    }
    if (manifest.stage_track) {
        run_stage("track", collected, [&] { stage_track_all(scene, dir, params.tracker); });
    }
    if (manifest.stage_mdoppler) {
        run_stage("mdoppler", collected, [&] { stage_mdoppler_all(scene, dir, params); });
    }
    if (manifest.stage_eval) {
        run_stage("eval", collected, [&] {
            report = eval_directory(scene, dir, params);
            save_json(report_path(dir), eval_report_to_json(report));
        });
    }

    // Timing is the one product that cannot be byte-identical across reruns,
    // so it gets a file of its own and stays out of report.json.
    ordered_json jt;
    jt["schema_version"] = 1;
    jt["stages"] = ordered_json::array();
    double total = 0.0;
    for (const StageTiming &t : collected) {
        jt["stages"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
        total += t.seconds;
    }
    jt["total_seconds"] = total;
    save_json(timing_path(dir), jt);

    if (timings != nullptr) {
        *timings = std::move(collected);
    }
    return report;
}

} // namespace misac
