#pragma once

// Artifact plumbing: little-endian float32 binary payloads with JSON sidecar
// manifests, CSV emission with full double round-trip precision, and
// atomic (write-temp-then-rename) file creation so interrupted runs never
// leave half-written artifacts behind.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ssp/field.hpp"
#include "ssp/sim_ks.hpp"
#include "ssp/sim_waves.hpp"

namespace ssp {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are not supported");

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr int kGeneratorVersion = 1;

namespace io {

inline void write_bytes_atomic(const std::filesystem::path& path, const void* data,
                               std::size_t len) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_bytes_atomic(path, text.data(), text.size());
}

inline void write_f32(const std::filesystem::path& path, const std::vector<float>& v) {
    write_bytes_atomic(path, v.data(), v.size() * sizeof(float));
}

inline std::vector<float> read_f32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % sizeof(float) != 0)
        throw std::runtime_error("payload size not a multiple of 4 bytes: " + path.string());
    std::vector<float> v(bytes / sizeof(float));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("short read: " + path.string());
    return v;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

inline void check_version(const json& manifest, const std::filesystem::path& path) {
    const int v = manifest.value("format_version", -1);
    if (v != kFormatVersion)
        throw std::runtime_error(path.string() + ": unsupported format_version " +
                                 std::to_string(v) + " (this build reads version " +
                                 std::to_string(kFormatVersion) + ")");
}

/// Shortest exact decimal for a double ("%.17g" round-trips bit-exactly).
inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Minimal CSV writer: header once, then rows; written atomically on close.
class CsvWriter {
  public:
    CsvWriter(std::filesystem::path path, const std::vector<std::string>& header)
        : path_(std::move(path)) {
        append_row(header);
    }
    void append_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) buf_ += ',';
            buf_ += cells[i];
        }
        buf_ += '\n';
    }
    void close() {
        if (!closed_) {
            write_text_atomic(path_, buf_);
            closed_ = true;
        }
    }
    ~CsvWriter() {
        try {
            close();
        } catch (...) {
        }
    }

  private:
    std::filesystem::path path_;
    std::string buf_;
    bool closed_ = false;
};

}  // namespace io

// ---------------------------------------------------------------------------
// Trajectory persistence: <base>.f32 holds all frames concatenated
// (frame-major, row-major within a frame, little-endian float32); <base>.json
// is the manifest recording the geometry and the generator settings.

inline std::vector<float> narrow_frames(const Trajectory& t) {
    std::vector<float> out;
    out.reserve(t.frames.size() * (t.frames.empty() ? 0 : t.frames[0].size()));
    for (const Field& f : t.frames)
        for (double v : f.values) out.push_back(static_cast<float>(v));
    return out;
}

inline void save_trajectory(const Trajectory& t, const KsConfig& cfg,
                            const std::filesystem::path& base) {
    json m{{"format_version", kFormatVersion},
           {"kind", "trajectory"},
           {"case", cfg.dims == 2 ? "ks2d" : "ks1d"},
           {"generator_version", kGeneratorVersion},
           {"dims", cfg.dims},
           {"n", cfg.n},
           {"L", cfg.L},
           {"nu", cfg.nu},
           {"dt", t.dt},
           {"frames", t.frames.size()},
           {"seed", cfg.seed},
           {"keep_fraction", cfg.keep_fraction}};
    io::write_f32(std::filesystem::path(base) += ".f32", narrow_frames(t));
    io::write_json(std::filesystem::path(base) += ".json", m);
}

inline void save_trajectory(const Trajectory& t, const WaveConfig& cfg,
                            const std::filesystem::path& base) {
    json m{{"format_version", kFormatVersion},
           {"kind", "trajectory"},
           {"case", "waves"},
           {"generator_version", kGeneratorVersion},
           {"dims", 1},
           {"n", cfg.n},
           {"length", cfg.length},
           {"pad_points", wave_pad(cfg)},
           {"n_components", cfg.n_components},
           {"omega_min", cfg.omega_min},
           {"omega_max", cfg.omega_max},
           {"d", cfg.depth},
           {"g", cfg.gravity},
           {"a0", cfg.a0},
           {"dt", t.dt},
           {"frames", t.frames.size()},
           {"seed", cfg.seed}};
    io::write_f32(std::filesystem::path(base) += ".f32", narrow_frames(t));
    io::write_json(std::filesystem::path(base) += ".json", m);
}

// Loaded trajectories come back as float32-backed frames (the on-disk
// precision is the dataset's precision by design).
struct LoadedTrajectory {
    json manifest;
    int nx = 0, ny = 1;
    double extent_x = 0.0, extent_y = 0.0;
    double dt = 0.0;
    std::vector<float> payload;  // frames * ny * nx

    std::size_t frame_count() const {
        return payload.size() / (static_cast<std::size_t>(nx) * ny);
    }
    const float* frame(std::size_t i) const {
        return payload.data() + i * static_cast<std::size_t>(nx) * ny;
    }
};

inline LoadedTrajectory load_trajectory(const std::filesystem::path& base) {
    LoadedTrajectory lt;
    lt.manifest = io::read_json(std::filesystem::path(base) += ".json");
    io::check_version(lt.manifest, base);
    if (lt.manifest.value("kind", "") != "trajectory")
        throw std::runtime_error(base.string() + ": manifest kind is not 'trajectory'");

    const std::string cs = lt.manifest.value("case", "");
    const int n = lt.manifest.at("n").get<int>();
    if (cs == "ks2d") {
        lt.nx = lt.ny = n;
        lt.extent_x = lt.extent_y = lt.manifest.at("L").get<double>();
    } else if (cs == "ks1d") {
        lt.nx = n;
        lt.extent_x = lt.manifest.at("L").get<double>();
    } else if (cs == "waves") {
        const int total = n + lt.manifest.at("pad_points").get<int>();
        lt.nx = total;
        lt.extent_x = lt.manifest.at("length").get<double>() / n * total;
    } else {
        throw std::runtime_error(base.string() + ": unknown case '" + cs + "'");
    }
    lt.dt = lt.manifest.at("dt").get<double>();

    lt.payload = io::read_f32(std::filesystem::path(base) += ".f32");
    const auto expect = lt.manifest.at("frames").get<std::size_t>() *
                        static_cast<std::size_t>(lt.nx) * lt.ny;
    if (lt.payload.size() != expect)
        throw std::runtime_error(base.string() + ": payload length " +
                                 std::to_string(lt.payload.size()) + " != manifest expectation " +
                                 std::to_string(expect));
    return lt;
}

}  // namespace ssp
