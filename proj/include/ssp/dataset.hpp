#pragma once

// Sliding-window dataset: trajectories become supervised pairs (8 history
// frames -> 1 target frame, all spaced `shift` frames apart, windows
// advancing by 1). Frames are stored once as float32 (the on-disk precision)
// and pairs are materialized lazily through index arithmetic, so an n-frame
// simulation costs n frames of memory, not 9x that.

#include <array>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/field.hpp"
#include "ssp/io.hpp"
#include "ssp/rng.hpp"

namespace ssp {

inline constexpr int kHistory = 8;

// Pairs available in one trajectory: inputs at i, i+shift, ..., i+7*shift,
// target at i+8*shift, windows advancing by 1. At the published full scale
// this gives 2001 frames -> 1993 pairs (shift 1) and 1921 pairs (shift 10).
inline std::size_t window_count(std::size_t frames, int shift) {
    if (shift < 1) throw std::invalid_argument("window: shift must be >= 1");
    const std::size_t span = static_cast<std::size_t>(kHistory) * shift + 1;
    if (frames < span)
        throw std::invalid_argument("window: trajectory too short: need at least " +
                                    std::to_string(span) + " frames for shift " +
                                    std::to_string(shift) + ", got " + std::to_string(frames));
    return frames - static_cast<std::size_t>(kHistory) * shift;
}

struct SamplePair {
    std::vector<Field> inputs;  // kHistory frames, oldest first
    Field target;
};

/// Materialized windowing of a single in-memory trajectory (test/tool path;
/// training uses the Dataset's index-based access instead).
inline std::vector<SamplePair> window(const Trajectory& t, int shift) {
    const std::size_t count = window_count(t.frames.size(), shift);
    std::vector<SamplePair> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SamplePair p;
        for (int j = 0; j < kHistory; ++j)
            p.inputs.push_back(t.frames[i + static_cast<std::size_t>(j) * shift]);
        p.target = t.frames[i + static_cast<std::size_t>(kHistory) * shift];
        out.push_back(std::move(p));
    }
    return out;
}

struct Dataset {
    int nx = 0, ny = 1;
    double extent_x = 0.0, extent_y = 0.0;
    double dt = 0.0;  // seconds between consecutive stored frames
    int shift = 1;
    std::vector<float> frames;             // all frames, all sims, concatenated
    std::vector<std::size_t> sim_begin;    // frame offsets per sim + total sentinel
    std::vector<std::string> sources;      // manifest paths of the source trajectories
    bool standardized = false;
    double standardize_mean = 0.0, standardize_std = 1.0;

    std::size_t frame_points() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t frame_count() const { return sim_begin.empty() ? 0 : sim_begin.back(); }
    std::size_t sim_count() const { return sim_begin.empty() ? 0 : sim_begin.size() - 1; }

    const float* frame(std::size_t i) const { return frames.data() + i * frame_points(); }

    std::size_t sim_pair_count(std::size_t s) const {
        return window_count(sim_begin[s + 1] - sim_begin[s], shift);
    }
    std::size_t pair_count() const {
        std::size_t n = 0;
        for (std::size_t s = 0; s < sim_count(); ++s) n += sim_pair_count(s);
        return n;
    }

    // Flat pair index -> the 8 input frame indices and the target index.
    struct PairIndex {
        std::array<std::size_t, kHistory> inputs;
        std::size_t target;
    };
    PairIndex pair(std::size_t idx) const {
        for (std::size_t s = 0; s < sim_count(); ++s) {
            const std::size_t c = sim_pair_count(s);
            if (idx < c) {
                PairIndex p{};
                const std::size_t base = sim_begin[s] + idx;
                for (int j = 0; j < kHistory; ++j)
                    p.inputs[j] = base + static_cast<std::size_t>(j) * shift;
                p.target = base + static_cast<std::size_t>(kHistory) * shift;
                return p;
            }
            idx -= c;
        }
        throw std::out_of_range("Dataset::pair: index past pair_count");
    }

    Field frame_as_field(std::size_t i) const {
        Field f;
        f.nx = nx;
        f.ny = ny;
        f.extent_x = extent_x;
        f.extent_y = extent_y;
        f.values.assign(frame(i), frame(i) + frame_points());
        return f;
    }
};

/// Pool in-memory trajectories (narrowed to float32) into one dataset.
inline Dataset build_dataset(const std::vector<Trajectory>& trajs, int shift) {
    if (trajs.empty()) throw std::invalid_argument("build_dataset: no trajectories");
    Dataset ds;
    ds.shift = shift;
    const Field& f0 = trajs[0].frames.at(0);
    ds.nx = f0.nx;
    ds.ny = f0.ny;
    ds.extent_x = f0.extent_x;
    ds.extent_y = f0.extent_y;
    ds.dt = trajs[0].dt;
    ds.sim_begin.push_back(0);
    for (const Trajectory& t : trajs) {
        window_count(t.frames.size(), shift);  // reject too-short inputs early
        if (t.dt != ds.dt)
            throw std::invalid_argument("build_dataset: trajectories disagree on dt");
        for (const Field& f : t.frames) {
            require_same_shape(f, f0, "build_dataset");
            for (double v : f.values) ds.frames.push_back(static_cast<float>(v));
        }
        ds.sim_begin.push_back(ds.sim_begin.back() + t.frames.size());
    }
    return ds;
}

/// Pool trajectories loaded from disk (already float32, copied verbatim).
inline Dataset build_dataset(const std::vector<LoadedTrajectory>& trajs, int shift) {
    if (trajs.empty()) throw std::invalid_argument("build_dataset: no trajectories");
    Dataset ds;
    ds.shift = shift;
    ds.nx = trajs[0].nx;
    ds.ny = trajs[0].ny;
    ds.extent_x = trajs[0].extent_x;
    ds.extent_y = trajs[0].extent_y;
    ds.dt = trajs[0].dt;
    ds.sim_begin.push_back(0);
    for (const LoadedTrajectory& t : trajs) {
        window_count(t.frame_count(), shift);
        if (t.nx != ds.nx || t.ny != ds.ny || t.dt != ds.dt)
            throw std::invalid_argument("build_dataset: trajectories disagree on geometry/dt");
        ds.frames.insert(ds.frames.end(), t.payload.begin(), t.payload.end());
        ds.sim_begin.push_back(ds.sim_begin.back() + t.frame_count());
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Random splits. One plan is generated per (seed, split_id) and served to
// every loss function in a comparison group, so all losses see identical
// train/validation indices.

struct SplitParams {
    std::uint64_t seed = 0;
    int split_id = 0;
    double train_fraction = 0.8;
};

struct SplitPlan {
    int split_id = 0;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
    std::vector<std::uint32_t> train, val;
};

inline SplitPlan split(std::size_t population, const SplitParams& p) {
    if (population < 2) throw std::invalid_argument("split: population must be >= 2");
    if (!(p.train_fraction > 0.0) || !(p.train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must be in (0, 1)");
    std::vector<std::uint32_t> idx(population);
    std::iota(idx.begin(), idx.end(), 0u);
    Xoshiro256 rng = substream(p.seed, "split", static_cast<std::uint64_t>(p.split_id));
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(std::lround(p.train_fraction * population));
    if (n_train == 0 || n_train == population)
        throw std::invalid_argument("split: degenerate fraction leaves one side empty");
    SplitPlan plan;
    plan.split_id = p.split_id;
    plan.seed = p.seed;
    plan.train_fraction = p.train_fraction;
    plan.train.assign(idx.begin(), idx.begin() + n_train);
    plan.val.assign(idx.begin() + n_train, idx.end());
    return plan;
}

/// Order-sensitive digest; equal plans <=> equal hashes for our sizes.
inline std::uint64_t plan_hash(const SplitPlan& p) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(p.train.size());
    for (auto i : p.train) mix(i);
    mix(0xffffffffffffffffull);
    for (auto i : p.val) mix(i);
    return h;
}

// ---------------------------------------------------------------------------
// Persistence: <base>.f32 (all frames) + <base>.json manifest.

inline void save_dataset(const Dataset& ds, const std::filesystem::path& base) {
    json m{{"format_version", kFormatVersion},
           {"kind", "dataset"},
           {"dims", ds.ny > 1 ? 2 : 1},
           {"nx", ds.nx},
           {"ny", ds.ny},
           {"extent_x", ds.extent_x},
           {"extent_y", ds.extent_y},
           {"dt", ds.dt},
           {"shift", ds.shift},
           {"n_history", kHistory},
           {"pair_count", ds.pair_count()},
           {"sim_frames", json::array()},
           {"source_manifests", ds.sources},
           {"standardized", ds.standardized},
           {"standardize_mean", ds.standardize_mean},
           {"standardize_std", ds.standardize_std}};
    for (std::size_t s = 0; s < ds.sim_count(); ++s)
        m["sim_frames"].push_back(ds.sim_begin[s + 1] - ds.sim_begin[s]);
    io::write_f32(std::filesystem::path(base) += ".f32", ds.frames);
    io::write_json(std::filesystem::path(base) += ".json", m);
}

inline Dataset load_dataset(const std::filesystem::path& base) {
    const json m = io::read_json(std::filesystem::path(base) += ".json");
    io::check_version(m, base);
    if (m.value("kind", "") != "dataset")
        throw std::runtime_error(base.string() + ": manifest kind is not 'dataset'");
    if (m.at("n_history").get<int>() != kHistory)
        throw std::runtime_error(base.string() + ": unsupported n_history");
    Dataset ds;
    ds.nx = m.at("nx").get<int>();
    ds.ny = m.at("ny").get<int>();
    ds.extent_x = m.at("extent_x").get<double>();
    ds.extent_y = m.at("extent_y").get<double>();
    ds.dt = m.at("dt").get<double>();
    ds.shift = m.at("shift").get<int>();
    ds.sources = m.at("source_manifests").get<std::vector<std::string>>();
    ds.standardized = m.value("standardized", false);
    ds.standardize_mean = m.value("standardize_mean", 0.0);
    ds.standardize_std = m.value("standardize_std", 1.0);
    ds.sim_begin.push_back(0);
    for (const auto& c : m.at("sim_frames"))
        ds.sim_begin.push_back(ds.sim_begin.back() + c.get<std::size_t>());
    ds.frames = io::read_f32(std::filesystem::path(base) += ".f32");
    if (ds.frames.size() != ds.frame_count() * ds.frame_points())
        throw std::runtime_error(base.string() + ": payload length " +
                                 std::to_string(ds.frames.size()) +
                                 " != manifest expectation " +
                                 std::to_string(ds.frame_count() * ds.frame_points()));
    if (ds.pair_count() != m.at("pair_count").get<std::size_t>())
        throw std::runtime_error(base.string() + ": pair_count mismatch with manifest");
    return ds;
}

/// Optional in-place standardization (off for all shipped configs).
inline void standardize(Dataset& ds) {
    if (ds.standardized) return;
    double mean = 0.0;
    for (float v : ds.frames) mean += v;
    mean /= static_cast<double>(ds.frames.size());
    double var = 0.0;
    for (float v : ds.frames) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(ds.frames.size()));
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
    for (float& v : ds.frames) v = static_cast<float>((v - mean) * scale);
    ds.standardized = true;
    ds.standardize_mean = mean;
    ds.standardize_std = sd > 0.0 ? sd : 1.0;
}

}  // namespace ssp
