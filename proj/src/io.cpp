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

#include "misac/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <limits>
#include <sstream>

#include "misac/errors.hpp"

// The binary codecs write host memory directly and document little-endian
// layouts; refuse to build on big-endian hosts rather than corrupt files.
static_assert(std::endian::native == std::endian::little,
              "binary codecs assume a little-endian host");

namespace misac {

namespace {

[[noreturn]] void fail(const std::filesystem::path &path, const std::string &msg)
{
    throw io_error(path.string() + ": " + msg);
}

void write_bytes(std::ofstream &out, const void *data, std::size_t n)
{
    out.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
}

void write_u32(std::ofstream &out, std::uint32_t v) { write_bytes(out, &v, 4); }
void write_f64(std::ofstream &out, double v) { write_bytes(out, &v, 8); }

void read_bytes(std::ifstream &in, const std::filesystem::path &path, void *data, std::size_t n)
{
    in.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
        fail(path, "unexpected end of file");
}

std::uint32_t read_u32(std::ifstream &in, const std::filesystem::path &path)
{
    std::uint32_t v = 0;
    read_bytes(in, path, &v, 4);
    return v;
}

double read_f64(std::ifstream &in, const std::filesystem::path &path)
{
    double v = 0;
    read_bytes(in, path, &v, 8);
    return v;
}

std::vector<std::string> split_csv(const std::string &line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::ofstream open_text_out(const std::filesystem::path &path)
{
    std::ofstream out(path, std::ios::binary); // binary: exact \n on every platform
    if (!out)
        fail(path, "cannot open for writing");
    return out;
}

std::ifstream open_text_in(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(path, "cannot open for reading");
    return in;
}

/// Reads a CSV file: checks the exact header line, then hands each data row
/// (split into fields, expected count checked) to the row callback.
template <typename Row>
void read_csv(const std::filesystem::path &path, const std::string &expected_header,
              std::size_t num_fields, Row &&row)
{
    std::ifstream in = open_text_in(path);
    std::string line;
    if (!std::getline(in, line))
        fail(path, "empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != expected_header)
        fail(path, "unexpected header '" + line + "'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != num_fields)
            fail(path, "line " + std::to_string(lineno) + ": expected " +
                           std::to_string(num_fields) + " fields, got " +
                           std::to_string(fields.size()));
        row(fields);
    }
}

const char *sync_status_name(SyncStatus s)
{
    switch (s) {
    case SyncStatus::ok: return "ok";
    case SyncStatus::los_missing: return "los_missing";
    case SyncStatus::reused_previous: return "reused_previous";
    }
    return "unknown";
}

SyncStatus sync_status_from(const std::string &name, const std::filesystem::path &path)
{
    if (name == "ok")
        return SyncStatus::ok;
    if (name == "los_missing")
        return SyncStatus::los_missing;
    if (name == "reused_previous")
        return SyncStatus::reused_previous;
    fail(path, "unknown sync status '" + name + "'");
}

TrackStatus track_status_from(const std::string &name, const std::filesystem::path &path)
{
    if (name == "tentative")
        return TrackStatus::tentative;
    if (name == "confirmed")
        return TrackStatus::confirmed;
    if (name == "coasting")
        return TrackStatus::coasting;
    if (name == "dead")
        return TrackStatus::dead;
    fail(path, "unknown track status '" + name + "'");
}

} // namespace

// ---- number formatting ------------------------------------------------------

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s)
{
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw io_error("malformed number '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s)
{
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw io_error("malformed integer '" + std::string(s) + "'");
    return v;
}

// ---- frame stream codec -------------------------------------------------------

namespace {

constexpr char frame_magic[4] = {'C', 'I', 'R', 'S'};

void check_header_dims(const FrameStreamHeader &h, const std::filesystem::path &path)
{
    if (h.num_beams == 0 || h.num_taps == 0)
        fail(path, "zero beam or tap dimension");
    const std::uint64_t fb = h.frame_bytes();
    if (fb == 0 || fb / 16 / h.num_beams != h.num_taps)
        fail(path, "dimension overflow");
    if (h.num_frames > (std::numeric_limits<std::uint64_t>::max() - frame_stream_header_bytes) / fb)
        fail(path, "dimension overflow");
}

} // namespace

FrameWriter::FrameWriter(const std::filesystem::path &path, FrameStreamHeader header)
    : path_(path), out_(path, std::ios::binary), header_(header)
{
    if (!out_)
        fail(path_, "cannot open for writing");
    check_header_dims(header_, path_);
    write_bytes(out_, frame_magic, 4);
    write_u32(out_, header_.version);
    write_u32(out_, header_.num_frames);
    write_u32(out_, header_.num_beams);
    write_u32(out_, header_.num_taps);
    write_f64(out_, header_.frame_interval_s);
    write_u32(out_, header_.rx_id);
    write_u32(out_, header_.flags);
}

FrameWriter::~FrameWriter()
{
    if (!closed_)
        out_.flush(); // best effort; close() is the checked path
}

void FrameWriter::write(const CirFrame &frame)
{
    if (closed_)
        fail(path_, "write after close");
    if (frame.beams() != static_cast<int>(header_.num_beams) ||
        frame.taps() != static_cast<int>(header_.num_taps))
        fail(path_, "frame shape does not match the header");
    if (written_ >= header_.num_frames)
        fail(path_, "more frames than the header declares");
    // Complex gains are stored (re, im) pairs, beam-major: exactly the
    // in-memory layout of the row-major gain matrix.
    write_bytes(out_, frame.gains.data(), header_.frame_bytes());
    ++written_;
}

void FrameWriter::close()
{
    if (closed_)
        return;
    out_.flush();
    if (!out_)
        fail(path_, "write failed");
    if (written_ != header_.num_frames)
        fail(path_, "wrote " + std::to_string(written_) + " of " +
                        std::to_string(header_.num_frames) + " declared frames");
    out_.close();
    closed_ = true;
}

FrameReader::FrameReader(const std::filesystem::path &path)
    : path_(path), in_(path, std::ios::binary)
{
    if (!in_)
        fail(path_, "cannot open for reading");

    char magic[4] = {};
    read_bytes(in_, path_, magic, 4);
    if (std::memcmp(magic, frame_magic, 4) != 0)
        fail(path_, "bad magic (not a frame stream)");
    header_.version = read_u32(in_, path_);
    if (header_.version != FrameStreamHeader::current_version)
        fail(path_, "unsupported version " + std::to_string(header_.version));
    header_.num_frames = read_u32(in_, path_);
    header_.num_beams = read_u32(in_, path_);
    header_.num_taps = read_u32(in_, path_);
    header_.frame_interval_s = read_f64(in_, path_);
    header_.rx_id = read_u32(in_, path_);
    header_.flags = read_u32(in_, path_);
    check_header_dims(header_, path_);

    std::error_code ec;
    const std::uintmax_t actual = std::filesystem::file_size(path_, ec);
    const std::uint64_t expected =
        frame_stream_header_bytes + header_.frame_bytes() * header_.num_frames;
    if (ec || actual != expected)
        fail(path_, "file size " + std::to_string(actual) + " does not match the header (" +
                        std::to_string(expected) + " bytes expected)");
}

bool FrameReader::next(CirFrame &frame)
{
    if (index_ >= header_.num_frames)
        return false;
    frame.k = index_;
    frame.rx_id = header_.rx_id;
    frame.gains.resize(header_.num_beams, header_.num_taps);
    read_bytes(in_, path_, frame.gains.data(), header_.frame_bytes());
    ++index_;
    return true;
}

void write_frames(const std::filesystem::path &path, const CirStream &frames,
                  double frame_interval_s, std::uint32_t rx_id, bool synced)
{
    if (frames.empty())
        fail(path, "refusing to write an empty frame stream");
    FrameStreamHeader header;
    header.num_frames = static_cast<std::uint32_t>(frames.size());
    header.num_beams = static_cast<std::uint32_t>(frames.front().beams());
    header.num_taps = static_cast<std::uint32_t>(frames.front().taps());
    header.frame_interval_s = frame_interval_s;
    header.rx_id = rx_id;
    header.flags = synced ? FrameStreamHeader::flag_synced : 0;
    FrameWriter writer(path, header);
    for (const CirFrame &f : frames)
        writer.write(f);
    writer.close();
}

std::pair<FrameStreamHeader, CirStream> read_frames(const std::filesystem::path &path)
{
    FrameReader reader(path);
    CirStream frames;
    frames.reserve(reader.header().num_frames);
    CirFrame frame;
    while (reader.next(frame))
        frames.push_back(frame);
    return {reader.header(), std::move(frames)};
}

// ---- delimited-text codecs -----------------------------------------------------

void write_sync_report(const std::filesystem::path &path, const SyncReport &report)
{
    std::ofstream out = open_text_out(path);
    out << "k,los_tap,shift_taps,fo_phase_rad,los_magnitude,threshold,status\n";
    for (const SyncRecord &r : report)
        out << r.k << ',' << r.los_tap << ',' << r.shift_taps << ','
            << format_double(r.fo_phase_rad) << ',' << format_double(r.los_magnitude) << ','
            << format_double(r.threshold) << ',' << sync_status_name(r.status) << '\n';
    if (!out)
        fail(path, "write failed");
}

SyncReport read_sync_report(const std::filesystem::path &path)
{
    SyncReport report;
    read_csv(path, "k,los_tap,shift_taps,fo_phase_rad,los_magnitude,threshold,status", 7,
             [&](const std::vector<std::string> &f) {
                 SyncRecord r;
                 r.k = static_cast<std::uint32_t>(parse_int(f[0]));
                 r.los_tap = static_cast<int>(parse_int(f[1]));
                 r.shift_taps = static_cast<int>(parse_int(f[2]));
                 r.fo_phase_rad = parse_double(f[3]);
                 r.los_magnitude = parse_double(f[4]);
                 r.threshold = parse_double(f[5]);
                 r.status = sync_status_from(f[6], path);
                 report.push_back(r);
             });
    return report;
}

void write_detections(const std::filesystem::path &path, const std::vector<Detection> &dets)
{
    std::ofstream out = open_text_out(path);
    out << "k,rx_id,tap,beam,power,excess_bistatic_range_m,aod_world_rad,x,y\n";
    for (const Detection &d : dets)
        out << d.k << ',' << d.rx_id << ',' << d.tap << ',' << d.beam << ','
            << format_double(d.power) << ',' << format_double(d.excess_bistatic_range_m) << ','
            << format_double(d.aod_world_rad) << ',' << format_double(d.position.x()) << ','
            << format_double(d.position.y()) << '\n';
    if (!out)
        fail(path, "write failed");
}

std::vector<Detection> read_detections(const std::filesystem::path &path)
{
    std::vector<Detection> dets;
    read_csv(path, "k,rx_id,tap,beam,power,excess_bistatic_range_m,aod_world_rad,x,y", 9,
             [&](const std::vector<std::string> &f) {
                 Detection d;
                 d.k = static_cast<std::uint32_t>(parse_int(f[0]));
                 d.rx_id = static_cast<std::uint32_t>(parse_int(f[1]));
                 d.tap = static_cast<int>(parse_int(f[2]));
                 d.beam = static_cast<int>(parse_int(f[3]));
                 d.power = parse_double(f[4]);
                 d.excess_bistatic_range_m = parse_double(f[5]);
                 d.aod_world_rad = parse_double(f[6]);
                 d.position = {parse_double(f[7]), parse_double(f[8])};
                 dets.push_back(d);
             });
    return dets;
}

void write_tracks(const std::filesystem::path &path, const std::vector<TrackSnapshot> &history,
                  std::uint32_t rx_id)
{
    std::ofstream out = open_text_out(path);
    out << "k,rx_id,track_id,x,y,vx,vy,status\n";
    for (const TrackSnapshot &s : history)
        out << s.k << ',' << rx_id << ',' << s.id << ',' << format_double(s.x) << ','
            << format_double(s.y) << ',' << format_double(s.vx) << ',' << format_double(s.vy)
            << ',' << to_string(s.status) << '\n';
    if (!out)
        fail(path, "write failed");
}

std::pair<std::uint32_t, std::vector<TrackSnapshot>> read_tracks(const std::filesystem::path &path)
{
    std::uint32_t rx_id = 0;
    std::vector<TrackSnapshot> history;
    read_csv(path, "k,rx_id,track_id,x,y,vx,vy,status", 8,
             [&](const std::vector<std::string> &f) {
                 TrackSnapshot s;
                 s.k = static_cast<std::uint32_t>(parse_int(f[0]));
                 rx_id = static_cast<std::uint32_t>(parse_int(f[1]));
                 s.id = static_cast<int>(parse_int(f[2]));
                 s.x = parse_double(f[3]);
                 s.y = parse_double(f[4]);
                 s.vx = parse_double(f[5]);
                 s.vy = parse_double(f[6]);
                 s.status = track_status_from(f[7], path);
                 history.push_back(s);
             });
    return {rx_id, std::move(history)};
}

void write_clock_truth(const std::filesystem::path &path, const std::vector<FrameTruth> &frames)
{
    std::ofstream out = open_text_out(path);
    out << "k,to_seconds,to_shift_taps,fo_hz,fo_phase_rad\n";
    for (const FrameTruth &f : frames)
        out << f.k << ',' << format_double(f.clock.to_seconds) << ',' << f.clock.to_shift_taps
            << ',' << format_double(f.clock.fo_hz) << ',' << format_double(f.clock.fo_phase_rad)
            << '\n';
    if (!out)
        fail(path, "write failed");
}

std::vector<ClockTruth> read_clock_truth(const std::filesystem::path &path)
{
    std::vector<ClockTruth> truth;
    read_csv(path, "k,to_seconds,to_shift_taps,fo_hz,fo_phase_rad", 5,
             [&](const std::vector<std::string> &f) {
                 if (parse_int(f[0]) != static_cast<long long>(truth.size()))
                     fail(path, "clock truth rows must cover k = 0.. consecutively");
                 ClockTruth c;
                 c.to_seconds = parse_double(f[1]);
                 c.to_shift_taps = static_cast<int>(parse_int(f[2]));
                 c.fo_hz = parse_double(f[3]);
                 c.fo_phase_rad = parse_double(f[4]);
                 truth.push_back(c);
             });
    return truth;
}

void write_parts_truth(const std::filesystem::path &path, const std::vector<FrameTruth> &frames)
{
    std::ofstream out = open_text_out(path);
    out << "k,target,part,x,y,doppler_hz,path_length_m,aod_world_rad\n";
    for (const FrameTruth &f : frames)
        for (const PartTruth &p : f.parts)
            out << f.k << ',' << p.target << ',' << p.part << ',' << format_double(p.position.x())
                << ',' << format_double(p.position.y()) << ',' << format_double(p.doppler_hz)
                << ',' << format_double(p.path_length_m) << ','
                << format_double(p.aod_world_rad) << '\n';
    if (!out)
        fail(path, "write failed");
}

std::vector<std::vector<PartTruth>> read_parts_truth(const std::filesystem::path &path,
                                                     std::uint32_t num_frames)
{
    std::vector<std::vector<PartTruth>> parts(num_frames);
    read_csv(path, "k,target,part,x,y,doppler_hz,path_length_m,aod_world_rad", 8,
             [&](const std::vector<std::string> &f) {
                 const auto k = static_cast<std::size_t>(parse_int(f[0]));
                 if (k >= parts.size()) {
                     if (num_frames != 0)
                         fail(path, "part row beyond the declared frame count");
                     parts.resize(k + 1);
                 }
                 PartTruth p;
                 p.target = static_cast<int>(parse_int(f[1]));
                 p.part = static_cast<int>(parse_int(f[2]));
                 p.position = {parse_double(f[3]), parse_double(f[4])};
                 p.doppler_hz = parse_double(f[5]);
                 p.path_length_m = parse_double(f[6]);
                 p.aod_world_rad = parse_double(f[7]);
                 parts[k].push_back(p);
             });
    return parts;
}

// ---- spectrogram codec -----------------------------------------------------------

namespace {
constexpr char spec_magic[4] = {'S', 'P', 'C', 'G'};
}

void write_spectrogram(const std::filesystem::path &path, const Spectrogram &spec)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(path, "cannot open for writing");
    const auto rows = static_cast<std::uint32_t>(spec.magnitude.rows());
    const auto cols = static_cast<std::uint32_t>(spec.magnitude.cols());
    write_bytes(out, spec_magic, 4);
    write_u32(out, 1);
    write_u32(out, rows);
    write_u32(out, cols);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = spec.magnitude;
    write_bytes(out, rm.data(), std::size_t{8} * rows * cols);
    write_bytes(out, spec.time_axis_s.data(), 8 * rows);
    write_bytes(out, spec.doppler_axis_hz.data(), 8 * cols);
    out.flush();
    if (!out)
        fail(path, "write failed");

    nlohmann::ordered_json sidecar;
    sidecar["schema_version"] = 1;
    sidecar["rx_id"] = spec.rx_id;
    sidecar["frame_interval_s"] = spec.frame_interval_s;
    sidecar["window_length"] = spec.params.window_length;
    sidecar["hop"] = spec.params.hop;
    sidecar["window"] = to_string(spec.params.window);
    save_json(path.string() + ".json", sidecar);
}

Spectrogram read_spectrogram(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(path, "cannot open for reading");
    char magic[4] = {};
    read_bytes(in, path, magic, 4);
    if (std::memcmp(magic, spec_magic, 4) != 0)
        fail(path, "bad magic (not a spectrogram)");
    const std::uint32_t version = read_u32(in, path);
    if (version != 1)
        fail(path, "unsupported version " + std::to_string(version));
    const std::uint32_t rows = read_u32(in, path);
    const std::uint32_t cols = read_u32(in, path);
    if (rows == 0 || cols == 0 || std::uint64_t{rows} * cols > (1ull << 32))
        fail(path, "dimension overflow");

    Spectrogram spec;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    read_bytes(in, path, rm.data(), std::size_t{8} * rows * cols);
    spec.magnitude = rm;
    spec.time_axis_s.resize(rows);
    read_bytes(in, path, spec.time_axis_s.data(), std::size_t{8} * rows);
    spec.doppler_axis_hz.resize(cols);
    read_bytes(in, path, spec.doppler_axis_hz.data(), std::size_t{8} * cols);

    const nlohmann::json sidecar = load_json(path.string() + ".json");
    spec.rx_id = sidecar.at("rx_id").get<std::uint32_t>();
    spec.frame_interval_s = sidecar.at("frame_interval_s").get<double>();
    spec.params.window_length = sidecar.at("window_length").get<int>();
    spec.params.hop = sidecar.at("hop").get<int>();
    spec.params.window = window_from_string(sidecar.at("window").get<std::string>());
    return spec;
}

void write_spectrogram_csv(const std::filesystem::path &path, const Spectrogram &spec)
{
    std::ofstream out = open_text_out(path);
    out << "time_s";
    for (int c = 0; c < spec.doppler_bins(); ++c)
        out << ',' << format_double(spec.doppler_axis_hz[c]);
    out << '\n';
    for (int r = 0; r < spec.time_bins(); ++r) {
        out << format_double(spec.time_axis_s[r]);
        for (int c = 0; c < spec.doppler_bins(); ++c)
            out << ',' << format_double(spec.magnitude(r, c));
        out << '\n';
    }
    if (!out)
        fail(path, "write failed");
}

// ---- scene codec -------------------------------------------------------------------

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void require_keys(const json &obj, const std::string &what, std::initializer_list<const char *> allowed)
{
    if (!obj.is_object())
        throw config_error(what + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char *key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw config_error(what + ": unknown key '" + it.key() + "'");
    }
}

double num_at(const json &obj, const char *key, double fallback, const std::string &what)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_number())
        throw config_error(what + "." + key + ": expected a number");
    return obj[key].get<double>();
}

int int_at(const json &obj, const char *key, int fallback, const std::string &what)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_number_integer())
        throw config_error(what + "." + key + ": expected an integer");
    return obj[key].get<int>();
}

std::string str_at(const json &obj, const char *key, const std::string &fallback,
                   const std::string &what)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_string())
        throw config_error(what + "." + key + ": expected a string");
    return obj[key].get<std::string>();
}

Vec2 vec2_from(const json &j, const std::string &what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw config_error(what + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Vec2 vec2_at(const json &obj, const char *key, const Vec2 &fallback, const std::string &what)
{
    if (!obj.contains(key))
        return fallback;
    return vec2_from(obj[key], what + "." + key);
}

std::complex<double> complex_from(const json &j, const std::string &what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw config_error(what + ": expected [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::complex<double> complex_at(const json &obj, const char *key,
                                const std::complex<double> &fallback, const std::string &what)
{
    if (!obj.contains(key))
        return fallback;
    return complex_from(obj[key], what + "." + key);
}

json vec2_to(const Vec2 &v) { return json::array({v.x(), v.y()}); }
json complex_to(const std::complex<double> &c) { return json::array({c.real(), c.imag()}); }

ToMode to_mode_from(const std::string &name, const std::string &what)
{
    if (name == "zero")
        return ToMode::zero;
    if (name == "uniform")
        return ToMode::uniform_per_frame;
    if (name == "drift")
        return ToMode::drift;
    throw config_error(what + ": unknown to_mode '" + name + "' (zero, uniform, drift)");
}

const char *to_mode_name(ToMode m)
{
    switch (m) {
    case ToMode::zero: return "zero";
    case ToMode::uniform_per_frame: return "uniform";
    case ToMode::drift: return "drift";
    }
    return "zero";
}

FoMode fo_mode_from(const std::string &name, const std::string &what)
{
    if (name == "zero")
        return FoMode::zero;
    if (name == "constant")
        return FoMode::constant;
    if (name == "walk")
        return FoMode::random_walk;
    throw config_error(what + ": unknown fo_mode '" + name + "' (zero, constant, walk)");
}

const char *fo_mode_name(FoMode m)
{
    switch (m) {
    case FoMode::zero: return "zero";
    case FoMode::constant: return "constant";
    case FoMode::random_walk: return "walk";
    }
    return "zero";
}

TrajectorySpec trajectory_from_json(const json &j, const std::string &what)
{
    TrajectorySpec t;
    const std::string kind = str_at(j, "kind", "", what);
    if (kind == "waypoints") {
        require_keys(j, what, {"kind", "times", "points"});
        t.kind = TrajectorySpec::Kind::waypoints;
        if (!j.contains("times") || !j.contains("points") || !j["times"].is_array() ||
            !j["points"].is_array() || j["times"].size() != j["points"].size())
            throw config_error(what + ": waypoints need matching 'times' and 'points' arrays");
        for (const auto &v : j["times"]) {
            if (!v.is_number())
                throw config_error(what + ".times: expected numbers");
            t.times.push_back(v.get<double>());
        }
        for (const auto &v : j["points"])
            t.points.push_back(vec2_from(v, what + ".points"));
    } else if (kind == "oval") {
        require_keys(j, what, {"kind", "center", "semi_axis_a", "semi_axis_b", "period_s", "phase_rad"});
        t.kind = TrajectorySpec::Kind::oval;
        t.center = vec2_at(j, "center", t.center, what);
        t.semi_axis_a = num_at(j, "semi_axis_a", 0.0, what);
        t.semi_axis_b = num_at(j, "semi_axis_b", 0.0, what);
        t.period_s = num_at(j, "period_s", 0.0, what);
        t.phase_rad = num_at(j, "phase_rad", 0.0, what);
    } else if (kind == "pacing") {
        require_keys(j, what, {"kind", "origin", "direction_rad", "amplitude_m", "speed_mps"});
        t.kind = TrajectorySpec::Kind::pacing;
        t.origin = vec2_at(j, "origin", t.origin, what);
        t.direction_rad = num_at(j, "direction_rad", 0.0, what);
        t.amplitude_m = num_at(j, "amplitude_m", 0.0, what);
        t.speed_mps = num_at(j, "speed_mps", 0.0, what);
    } else {
        throw config_error(what + ".kind: expected waypoints, oval, or pacing");
    }
    return t;
}

ordered_json trajectory_to_json(const TrajectorySpec &t)
{
    ordered_json j;
    switch (t.kind) {
    case TrajectorySpec::Kind::waypoints: {
        j["kind"] = "waypoints";
        j["times"] = t.times;
        json points = json::array();
        for (const Vec2 &p : t.points)
            points.push_back(vec2_to(p));
        j["points"] = points;
        break;
    }
    case TrajectorySpec::Kind::oval:
        j["kind"] = "oval";
        j["center"] = vec2_to(t.center);
        j["semi_axis_a"] = t.semi_axis_a;
        j["semi_axis_b"] = t.semi_axis_b;
        j["period_s"] = t.period_s;
        j["phase_rad"] = t.phase_rad;
        break;
    case TrajectorySpec::Kind::pacing:
        j["kind"] = "pacing";
        j["origin"] = vec2_to(t.origin);
        j["direction_rad"] = t.direction_rad;
        j["amplitude_m"] = t.amplitude_m;
        j["speed_mps"] = t.speed_mps;
        break;
    }
    return j;
}

} // namespace

SceneConfig scene_from_json(const json &j)
{
    const std::string what = "scene";
    require_keys(j, what,
                 {"schema_version", "tx_position", "rx_positions", "carrier_frequency_hz",
                  "bandwidth_hz", "frame_interval_s", "num_taps", "num_beams", "beam_centers_rad",
                  "beam_width_3db_rad", "duration_s", "los_amplitude", "static_scatterers",
                  "targets", "clock_models", "noise_floor", "v_max_mps", "rng_seed"});

    SceneConfig s;
    s.schema_version = int_at(j, "schema_version", 1, what);
    if (s.schema_version != 1)
        throw config_error("scene.schema_version: unsupported version " +
                           std::to_string(s.schema_version));
    s.tx_position = vec2_at(j, "tx_position", s.tx_position, what);
    if (j.contains("rx_positions")) {
        if (!j["rx_positions"].is_array())
            throw config_error("scene.rx_positions: expected an array of [x, y]");
        for (const auto &v : j["rx_positions"])
            s.rx_positions.push_back(vec2_from(v, "scene.rx_positions"));
    }
    s.carrier_frequency_hz = num_at(j, "carrier_frequency_hz", s.carrier_frequency_hz, what);
    s.bandwidth_hz = num_at(j, "bandwidth_hz", s.bandwidth_hz, what);
    s.frame_interval_s = num_at(j, "frame_interval_s", s.frame_interval_s, what);
    s.num_taps = int_at(j, "num_taps", s.num_taps, what);
    s.num_beams = int_at(j, "num_beams", s.num_beams, what);
    if (j.contains("beam_centers_rad")) {
        if (!j["beam_centers_rad"].is_array())
            throw config_error("scene.beam_centers_rad: expected an array of numbers");
        for (const auto &v : j["beam_centers_rad"]) {
            if (!v.is_number())
                throw config_error("scene.beam_centers_rad: expected numbers");
            s.beam_centers_rad.push_back(v.get<double>());
        }
    }
    s.beam_width_3db_rad = num_at(j, "beam_width_3db_rad", s.beam_width_3db_rad, what);
    s.duration_s = num_at(j, "duration_s", s.duration_s, what);
    s.los_amplitude = complex_at(j, "los_amplitude", s.los_amplitude, what);
    s.noise_floor = num_at(j, "noise_floor", s.noise_floor, what);
    s.v_max_mps = num_at(j, "v_max_mps", s.v_max_mps, what);
    if (j.contains("rng_seed")) {
        if (!j["rng_seed"].is_number_unsigned() && !j["rng_seed"].is_number_integer())
            throw config_error("scene.rng_seed: expected an unsigned integer");
        s.rng_seed = j["rng_seed"].get<std::uint64_t>();
    }

    if (j.contains("static_scatterers")) {
        if (!j["static_scatterers"].is_array())
            throw config_error("scene.static_scatterers: expected an array");
        int i = 0;
        for (const auto &v : j["static_scatterers"]) {
            const std::string w = "scene.static_scatterers[" + std::to_string(i++) + "]";
            require_keys(v, w, {"position", "amplitude", "label"});
            Scatterer sc;
            sc.position = vec2_at(v, "position", sc.position, w);
            sc.amplitude = complex_at(v, "amplitude", sc.amplitude, w);
            sc.label = str_at(v, "label", "", w);
            s.static_scatterers.push_back(std::move(sc));
        }
    }

    if (j.contains("targets")) {
        if (!j["targets"].is_array())
            throw config_error("scene.targets: expected an array");
        int i = 0;
        for (const auto &v : j["targets"]) {
            const std::string w = "scene.targets[" + std::to_string(i++) + "]";
            require_keys(v, w, {"label", "torso", "torso_gain", "limbs"});
            ArticulatedTarget t;
            t.label = str_at(v, "label", "", w);
            if (!v.contains("torso"))
                throw config_error(w + ": missing 'torso'");
            t.torso = trajectory_from_json(v["torso"], w + ".torso");
            t.torso_gain = complex_at(v, "torso_gain", t.torso_gain, w);
            if (v.contains("limbs")) {
                if (!v["limbs"].is_array())
                    throw config_error(w + ".limbs: expected an array");
                int li = 0;
                for (const auto &lv : v["limbs"]) {
                    const std::string lw = w + ".limbs[" + std::to_string(li++) + "]";
                    require_keys(lv, lw,
                                 {"attachment_offset", "amplitude_m", "frequency_hz", "phase_rad",
                                  "direction_rad", "gain", "label"});
                    LimbOscillator limb;
                    limb.attachment_offset = vec2_at(lv, "attachment_offset", limb.attachment_offset, lw);
                    limb.amplitude_m = num_at(lv, "amplitude_m", 0.0, lw);
                    limb.frequency_hz = num_at(lv, "frequency_hz", 0.0, lw);
                    limb.phase_rad = num_at(lv, "phase_rad", 0.0, lw);
                    limb.direction_rad = num_at(lv, "direction_rad", 0.0, lw);
                    limb.gain = complex_at(lv, "gain", limb.gain, lw);
                    limb.label = str_at(lv, "label", "", lw);
                    t.limbs.push_back(std::move(limb));
                }
            }
            s.targets.push_back(std::move(t));
        }
    }

    if (j.contains("clock_models")) {
        if (!j["clock_models"].is_array())
            throw config_error("scene.clock_models: expected an array");
        int i = 0;
        for (const auto &v : j["clock_models"]) {
            const std::string w = "scene.clock_models[" + std::to_string(i++) + "]";
            require_keys(v, w,
                         {"to_mode", "to_uniform_max_s", "to_initial_s", "to_drift_rate",
                          "fo_mode", "fo_hz", "fo_walk_std_hz_sqrt_s"});
            ClockModel c;
            c.to_mode = to_mode_from(str_at(v, "to_mode", "zero", w), w);
            c.to_uniform_max_s = num_at(v, "to_uniform_max_s", 0.0, w);
            c.to_initial_s = num_at(v, "to_initial_s", 0.0, w);
            c.to_drift_rate = num_at(v, "to_drift_rate", 0.0, w);
            c.fo_mode = fo_mode_from(str_at(v, "fo_mode", "zero", w), w);
            c.fo_hz = num_at(v, "fo_hz", 0.0, w);
            c.fo_walk_std_hz_sqrt_s = num_at(v, "fo_walk_std_hz_sqrt_s", 0.0, w);
            s.clock_models.push_back(c);
        }
    }

    return s;
}

nlohmann::ordered_json scene_to_json(const SceneConfig &s)
{
    ordered_json j;
    j["schema_version"] = s.schema_version;
    j["tx_position"] = vec2_to(s.tx_position);
    json rxs = json::array();
    for (const Vec2 &rx : s.rx_positions)
        rxs.push_back(vec2_to(rx));
    j["rx_positions"] = rxs;
    j["carrier_frequency_hz"] = s.carrier_frequency_hz;
    j["bandwidth_hz"] = s.bandwidth_hz;
    j["frame_interval_s"] = s.frame_interval_s;
    j["num_taps"] = s.num_taps;
    j["num_beams"] = s.num_beams;
    j["beam_centers_rad"] = s.beam_centers_rad;
    j["beam_width_3db_rad"] = s.beam_width_3db_rad;
    j["duration_s"] = s.duration_s;
    j["los_amplitude"] = complex_to(s.los_amplitude);
    j["noise_floor"] = s.noise_floor;
    j["v_max_mps"] = s.v_max_mps;
    j["rng_seed"] = s.rng_seed;

    ordered_json statics = ordered_json::array();
    for (const Scatterer &sc : s.static_scatterers) {
        ordered_json o;
        o["position"] = vec2_to(sc.position);
        o["amplitude"] = complex_to(sc.amplitude);
        o["label"] = sc.label;
        statics.push_back(o);
    }
    j["static_scatterers"] = statics;

    ordered_json targets = ordered_json::array();
    for (const ArticulatedTarget &t : s.targets) {
        ordered_json o;
        o["label"] = t.label;
        o["torso"] = trajectory_to_json(t.torso);
        o["torso_gain"] = complex_to(t.torso_gain);
        ordered_json limbs = ordered_json::array();
        for (const LimbOscillator &l : t.limbs) {
            ordered_json lo;
            lo["attachment_offset"] = vec2_to(l.attachment_offset);
            lo["amplitude_m"] = l.amplitude_m;
            lo["frequency_hz"] = l.frequency_hz;
            lo["phase_rad"] = l.phase_rad;
            lo["direction_rad"] = l.direction_rad;
            lo["gain"] = complex_to(l.gain);
            lo["label"] = l.label;
            limbs.push_back(lo);
        }
        o["limbs"] = limbs;
        targets.push_back(o);
    }
    j["targets"] = targets;

    ordered_json clocks = ordered_json::array();
    for (const ClockModel &c : s.clock_models) {
        ordered_json o;
        o["to_mode"] = to_mode_name(c.to_mode);
        o["to_uniform_max_s"] = c.to_uniform_max_s;
        o["to_initial_s"] = c.to_initial_s;
        o["to_drift_rate"] = c.to_drift_rate;
        o["fo_mode"] = fo_mode_name(c.fo_mode);
        o["fo_hz"] = c.fo_hz;
        o["fo_walk_std_hz_sqrt_s"] = c.fo_walk_std_hz_sqrt_s;
        clocks.push_back(o);
    }
    j["clock_models"] = clocks;

    return j;
}

SceneConfig load_scene(const std::filesystem::path &path)
{
    SceneConfig scene = scene_from_json(load_json(path));
    scene.validate();
    return scene;
}

void save_scene(const std::filesystem::path &path, const SceneConfig &scene)
{
    save_json(path, scene_to_json(scene));
}

nlohmann::json load_json(const std::filesystem::path &path)
{
    std::ifstream in = open_text_in(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        fail(path, std::string("JSON parse error: ") + e.what());
    }
}

void save_json(const std::filesystem::path &path, const nlohmann::ordered_json &j)
{
    std::ofstream out = open_text_out(path);
    out << j.dump(2) << '\n';
    if (!out)
        fail(path, "write failed");
}

} // namespace misac
