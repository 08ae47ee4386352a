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
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "misac/cir.hpp"
#include "misac/detect.hpp"
#include "misac/mdoppler.hpp"
#include "misac/scene.hpp"
#include "misac/sync.hpp"
#include "misac/track.hpp"

namespace misac {

// All binary payloads are little-endian; all text numbers are written with
// std::to_chars (locale-independent, shortest round-trip form). Byte layouts
// are documented in FORMATS.md.

// ---- number formatting ------------------------------------------------------

std::string format_double(double v);
double parse_double(std::string_view s);     // throws io_error on malformed input
long long parse_int(std::string_view s);     // throws io_error on malformed input

// ---- frame stream codec (.cirs) ---------------------------------------------

struct FrameStreamHeader {
    static constexpr std::uint32_t current_version = 1;
    static constexpr std::uint32_t flag_synced = 1u << 0;

    std::uint32_t version = current_version;
    std::uint32_t num_frames = 0;
    std::uint32_t num_beams = 0;
    std::uint32_t num_taps = 0;
    double frame_interval_s = 0.0;
    std::uint32_t rx_id = 0;
    std::uint32_t flags = 0;

    bool synced() const { return (flags & flag_synced) != 0; }
    std::uint64_t frame_bytes() const
    {
        return std::uint64_t{16} * num_beams * num_taps;
    }
};

inline constexpr std::size_t frame_stream_header_bytes = 36;

/// Streams frames to disk. The header (including the frame count) goes first,
/// so the writer must be told the count up front and close() checks it.
class FrameWriter {
  public:
    FrameWriter(const std::filesystem::path &path, FrameStreamHeader header);
    ~FrameWriter();

    FrameWriter(const FrameWriter &) = delete;
    FrameWriter &operator=(const FrameWriter &) = delete;

    void write(const CirFrame &frame);
    /// Flushes and verifies the written count; throws io_error on mismatch.
    void close();

  private:
    std::filesystem::path path_;
    std::ofstream out_;
    FrameStreamHeader header_;
    std::uint32_t written_ = 0;
    bool closed_ = false;
};

/// Streams frames from disk. Magic, version, and total file size are checked
/// on open, so next() can only fail on I/O errors.
class FrameReader {
  public:
    explicit FrameReader(const std::filesystem::path &path);

    const FrameStreamHeader &header() const { return header_; }

    /// Fills the next frame (k assigned sequentially from 0) and returns true,
    /// or returns false after the last frame.
    bool next(CirFrame &frame);

  private:
    std::filesystem::path path_;
    std::ifstream in_;
    FrameStreamHeader header_;
    std::uint32_t index_ = 0;
};

void write_frames(const std::filesystem::path &path, const CirStream &frames,
                  double frame_interval_s, std::uint32_t rx_id, bool synced);
std::pair<FrameStreamHeader, CirStream> read_frames(const std::filesystem::path &path);

// ---- delimited-text codecs ----------------------------------------------------

void write_sync_report(const std::filesystem::path &path, const SyncReport &report);
SyncReport read_sync_report(const std::filesystem::path &path);

void write_detections(const std::filesystem::path &path, const std::vector<Detection> &dets);
std::vector<Detection> read_detections(const std::filesystem::path &path);

void write_tracks(const std::filesystem::path &path, const std::vector<TrackSnapshot> &history,
                  std::uint32_t rx_id);
std::pair<std::uint32_t, std::vector<TrackSnapshot>> read_tracks(const std::filesystem::path &path);

void write_clock_truth(const std::filesystem::path &path, const std::vector<FrameTruth> &frames);
std::vector<ClockTruth> read_clock_truth(const std::filesystem::path &path);

void write_parts_truth(const std::filesystem::path &path, const std::vector<FrameTruth> &frames);
/// Parts grouped per frame index; sized num_frames when nonzero, otherwise by
/// the largest k present.
std::vector<std::vector<PartTruth>> read_parts_truth(const std::filesystem::path &path,
                                                     std::uint32_t num_frames = 0);

// ---- spectrogram codec ---------------------------------------------------------

/// Writes `path` (binary: magic, dims, magnitudes, axes) and `path + ".json"`
/// (STFT parameters sidecar).
void write_spectrogram(const std::filesystem::path &path, const Spectrogram &spec);
Spectrogram read_spectrogram(const std::filesystem::path &path);

/// Plot-ready text export: first row Doppler axis, first column time axis.
void write_spectrogram_csv(const std::filesystem::path &path, const Spectrogram &spec);

// ---- scene codec ---------------------------------------------------------------

/// Strict decode: every object is checked against its known key set and an
/// unknown key raises config_error (no silent ignore). Missing keys fall back
/// to the documented defaults. The decoded scene is validated.
SceneConfig scene_from_json(const nlohmann::json &j);
nlohmann::ordered_json scene_to_json(const SceneConfig &scene);

SceneConfig load_scene(const std::filesystem::path &path);
void save_scene(const std::filesystem::path &path, const SceneConfig &scene);

/// Loads any JSON document, mapping parse failures to io_error.
nlohmann::json load_json(const std::filesystem::path &path);
void save_json(const std::filesystem::path &path, const nlohmann::ordered_json &j);

} // namespace misac
