#pragma once

// The experiment commands behind the CLI: data generation, loss-comparison
// groups, the metric sweep, loss hyperplanes, summary statistics and the
// per-update spectral probe. Each command takes a JSON config plus a few
// command-line overrides, writes artifacts under an output directory, and
// returns a process exit code (0 ok, 2 config error, 3 run divergence).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ssp/dataset.hpp"
#include "ssp/io.hpp"
#include "ssp/metrics.hpp"
#include "ssp/sim_ks.hpp"
#include "ssp/sim_waves.hpp"
#include "ssp/stats.hpp"
#include "ssp/trainer.hpp"

namespace ssp {

/// Anything wrong with a config file or its field values (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliOpts {
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;  // overrides the config's seed
    int jobs = 1;
    std::string case_name;  // overrides the config's "case"
};

namespace detail {

// JSON field access with dotted-path error messages.
inline const json* jfind(const json& j, const std::string& dotted) {
    const json* cur = &j;
    std::size_t pos = 0;
    while (pos <= dotted.size()) {
        const std::size_t dot = dotted.find('.', pos);
        const std::string key = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
        if (dot == std::string::npos) return cur;
        pos = dot + 1;
    }
    return nullptr;
}

template <typename T>
T jget(const json& j, const std::string& dotted, const T& fallback) {
    const json* v = jfind(j, dotted);
    if (!v) return fallback;
    try {
        return v->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config field '" + dotted + "': " + e.what());
    }
}

template <typename T>
T jreq(const json& j, const std::string& dotted) {
    const json* v = jfind(j, dotted);
    if (!v) throw ConfigError("config field '" + dotted + "' is required");
    try {
        return v->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config field '" + dotted + "': " + e.what());
    }
}

inline json load_config(const CliOpts& opts) {
    if (opts.config.empty()) throw ConfigError("--config is required for this command");
    try {
        return io::read_json(opts.config);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

inline std::string resolved_case(const json& cfg, const CliOpts& opts) {
    const std::string c = !opts.case_name.empty() ? opts.case_name : jget<std::string>(cfg, "case", "");
    if (c != "ks1d" && c != "ks2d" && c != "waves")
        throw ConfigError("config field 'case' must be ks1d, ks2d or waves, got '" + c + "'");
    return c;
}

inline std::uint64_t resolved_seed(const json& cfg, const CliOpts& opts) {
    return opts.seed ? *opts.seed : jget<std::uint64_t>(cfg, "seed", 0);
}

/// Paths inside configs resolve relative to the config file's directory.
inline std::filesystem::path resolve_path(const CliOpts& opts, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative()) path = opts.config.parent_path() / path;
    return path;
}

inline void require_out(const CliOpts& opts) {
    if (opts.out.empty()) throw ConfigError("--out is required for this command");
    std::filesystem::create_directories(opts.out);
}

/// Run fn(0..n-1) on up to `jobs` worker threads; rethrows the first error.
inline void run_indexed(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline std::string sim_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sim_%03zu", i);
    return buf;
}

inline KsConfig parse_ks(const json& cfg, int dims) {
    KsConfig k = ks_defaults(dims);
    k.nu = jget(cfg, "generate.nu", k.nu);
    k.L = jget(cfg, "generate.L", k.L);
    k.n = jget(cfg, "generate.n", k.n);
    k.dt_sim = jget(cfg, "generate.dt_sim", k.dt_sim);
    k.save_every = jget(cfg, "generate.save_every", k.save_every);
    k.duration = jget(cfg, "generate.duration", k.duration);
    k.keep_fraction = jget(cfg, "generate.keep_fraction", k.keep_fraction);
    try {
        validate(k);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("generate: ") + e.what());
    }
    return k;
}

inline WaveConfig parse_waves(const json& cfg) {
    WaveConfig w;
    w.n_components = jget(cfg, "generate.n_components", w.n_components);
    w.omega_min = jget(cfg, "generate.omega_min", w.omega_min);
    w.omega_max = jget(cfg, "generate.omega_max", w.omega_max);
    w.depth = jget(cfg, "generate.depth", w.depth);
    w.gravity = jget(cfg, "generate.gravity", w.gravity);
    w.n = jget(cfg, "generate.n", w.n);
    w.length = jget(cfg, "generate.length", w.length);
    w.pad_points = jget(cfg, "generate.pad_points", w.pad_points);
    w.duration = jget(cfg, "generate.duration", w.duration);
    w.dt = jget(cfg, "generate.dt", w.dt);
    w.a0 = jget(cfg, "generate.a0", w.a0);
    try {
        validate(w);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("generate: ") + e.what());
    }
    return w;
}

// Shared training-section parse for compare/probe.
struct TrainPlan {
    std::vector<Metric> losses;
    int epochs = 100;
    int batch = 32;
    int splits = 5;
    double train_fraction = 0.8;
    double threshold = 0.05;  // on validation SSP
    int tail = 0;             // 0 -> max(5, epochs/10)
    OptimizerSpec opt;
    int base_filters = 8;
    int kernel = 5;
    Pad pad = Pad::Circular;
    HuberConfig huber;
    int probe_epochs = 2;
    std::size_t probe_sample = 0;
};

inline TrainPlan parse_train(const json& cfg) {
    TrainPlan t;
    const auto names = jget<std::vector<std::string>>(cfg, "train.losses",
                                                      {"ssp", "mse", "mae", "rmse", "huber"});
    if (names.empty()) throw ConfigError("config field 'train.losses' must not be empty");
    for (const auto& n : names) {
        try {
            t.losses.push_back(metric_from_name(n));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("train.losses: ") + e.what());
        }
    }
    t.epochs = jget(cfg, "train.epochs", t.epochs);
    t.batch = jget(cfg, "train.batch", t.batch);
    t.splits = jget(cfg, "train.splits", t.splits);
    t.train_fraction = jget(cfg, "train.train_fraction", t.train_fraction);
    t.threshold = jget(cfg, "train.threshold", t.threshold);
    t.tail = jget(cfg, "train.tail", 0);
    // Default: "max(5, one tenth of the run)", clamped so very short runs
    // still validate; an explicit tail larger than the run stays an error.
    if (t.tail == 0 && t.epochs > 0) t.tail = std::min(t.epochs, std::max(5, t.epochs / 10));
    const std::string opt_name = jget<std::string>(cfg, "train.optimizer.kind", "adam");
    try {
        t.opt.kind = opt_kind_from_name(opt_name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("train.optimizer.kind: ") + e.what());
    }
    t.opt.lr = jget(cfg, "train.optimizer.lr", t.opt.lr);
    t.opt.momentum = jget(cfg, "train.optimizer.momentum", t.opt.momentum);
    t.base_filters = jget(cfg, "train.model.base_filters", t.base_filters);
    t.kernel = jget(cfg, "train.model.kernel", t.kernel);
    const std::string pad = jget<std::string>(cfg, "train.model.pad", "circular");
    try {
        t.pad = pad_from_name(pad);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("train.model.pad: ") + e.what());
    }
    t.huber.delta = jget(cfg, "train.huber_delta", t.huber.delta);
    t.probe_epochs = jget(cfg, "train.probe.epochs", t.probe_epochs);
    t.probe_sample = jget(cfg, "train.probe.sample", t.probe_sample);
    if (t.epochs < 0 || t.batch < 1 || t.splits < 1)
        throw ConfigError("train: epochs must be >= 0, batch and splits >= 1");
    if (t.tail > t.epochs && t.epochs > 0)
        throw ConfigError("train.tail: larger than train.epochs");
    return t;
}

inline Dataset load_dataset_from_config(const json& cfg, const CliOpts& opts) {
    const std::string ref = jreq<std::string>(cfg, "dataset");
    try {
        return load_dataset(resolve_path(opts, ref));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("dataset: ") + e.what());
    }
}

/// Init/shuffle seed for split i — shared across losses so that runs within
/// a comparison group differ only through the loss gradient.
inline std::uint64_t run_seed(std::uint64_t master, int split_id) {
    return derive_seed(master, "run", static_cast<std::uint64_t>(split_id));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// generate: simulate, window, persist.

inline int cmd_generate(const CliOpts& opts) {
    const json cfg = detail::load_config(opts);
    const std::string case_name = detail::resolved_case(cfg, opts);
    const std::uint64_t master = detail::resolved_seed(cfg, opts);
    detail::require_out(opts);

    const int sims = detail::jget(cfg, "generate.sims", 1);
    const int shift = detail::jget(cfg, "generate.shift", 1);
    if (sims < 1) throw ConfigError("generate.sims must be >= 1");
    if (shift < 1) throw ConfigError("generate.shift must be >= 1");

    json echo{{"case", case_name}, {"seed", master}, {"sims", sims}, {"shift", shift}};

    if (case_name == "waves") {
        WaveConfig base = detail::parse_waves(cfg);
        detail::run_indexed(opts.jobs, static_cast<std::size_t>(sims), [&](std::size_t i) {
            WaveConfig wc = base;
            wc.seed = derive_seed(master, "sim", i);
            save_trajectory(wave_simulate(wc), wc, opts.out / detail::sim_name(i));
        });
    } else {
        KsConfig base = detail::parse_ks(cfg, case_name == "ks2d" ? 2 : 1);
        detail::run_indexed(opts.jobs, static_cast<std::size_t>(sims), [&](std::size_t i) {
            KsConfig kc = base;
            kc.seed = derive_seed(master, "sim", i);
            save_trajectory(ks_simulate(kc), kc, opts.out / detail::sim_name(i));
        });
    }

    // Window the *saved* float32 frames so in-memory and reloaded datasets
    // are bit-identical.
    std::vector<LoadedTrajectory> trajs;
    for (int i = 0; i < sims; ++i)
        trajs.push_back(load_trajectory(opts.out / detail::sim_name(i)));
    Dataset ds;
    try {
        ds = build_dataset(trajs, shift);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("generate: ") + e.what());
    }
    for (int i = 0; i < sims; ++i) ds.sources.push_back(detail::sim_name(i) + ".json");
    save_dataset(ds, opts.out / "dataset");

    echo["pair_count"] = ds.pair_count();
    echo["frames_per_sim"] = trajs[0].frame_count();
    io::write_json(opts.out / "generate_manifest.json", echo);
    return 0;
}

// ---------------------------------------------------------------------------
// compare: the full loss-comparison protocol.

struct LossSummary {
    Metric loss = Metric::SSP;
    int runs = 0;
    int diverged = 0;
    std::vector<double> final_ssp, final_mse;  // non-divergent runs only
    std::vector<double> epochs_to_thresh;      // "never" counted as epochs+1
};

struct ComparisonSummary {
    std::vector<LossSummary> per_loss;
    double threshold = 0.0;
    int tail = 0;
    int epochs = 0;
};

inline json summary_to_json(const ComparisonSummary& s) {
    json out{{"threshold", s.threshold}, {"tail", s.tail}, {"epochs", s.epochs}};
    json losses = json::object();
    for (const auto& ls : s.per_loss) {
        json e{{"runs", ls.runs}, {"diverged", ls.diverged}};
        auto stat_block = [](const std::vector<double>& v) {
            if (v.empty()) return json{{"count", 0}};
            const BoxStats b = box_stats(v);
            return json{{"count", v.size()}, {"mean", mean(v)},     {"std", sample_std(v)},
                        {"q1", b.q1},        {"median", b.median},  {"q3", b.q3},
                        {"iqr", b.iqr},      {"min", b.min},        {"max", b.max}};
        };
        e["final_ssp"] = stat_block(ls.final_ssp);
        e["final_mse"] = stat_block(ls.final_mse);
        e["epochs_to_threshold"] = stat_block(ls.epochs_to_thresh);
        losses[metric_name(ls.loss)] = e;
    }
    out["losses"] = losses;
    return out;
}

inline void write_summary_csv(const ComparisonSummary& s, const std::filesystem::path& path) {
    io::CsvWriter w(path, {"loss", "ssp_mean", "ssp_std", "mse_mean", "mse_std",
                           "epochs_to_threshold_median", "runs", "diverged"});
    for (const auto& ls : s.per_loss) {
        const bool any = !ls.final_ssp.empty();
        w.append_row({metric_name(ls.loss),
                      any ? io::g17(mean(ls.final_ssp)) : "nan",
                      any ? io::g17(sample_std(ls.final_ssp)) : "nan",
                      any ? io::g17(mean(ls.final_mse)) : "nan",
                      any ? io::g17(sample_std(ls.final_mse)) : "nan",
                      any ? io::g17(quantile(ls.epochs_to_thresh, 0.5)) : "nan",
                      std::to_string(ls.runs), std::to_string(ls.diverged)});
    }
    w.close();
}

inline std::string run_tag(Metric loss, int split_id) {
    return std::string(metric_name(loss)) + "_split" + std::to_string(split_id);
}

inline int cmd_compare(const CliOpts& opts) {
    const json cfg = detail::load_config(opts);
    const std::uint64_t master = detail::resolved_seed(cfg, opts);
    detail::require_out(opts);
    const Dataset ds = detail::load_dataset_from_config(cfg, opts);
    const detail::TrainPlan tp = detail::parse_train(cfg);

    std::filesystem::create_directories(opts.out / "runs");
    std::filesystem::create_directories(opts.out / "checkpoints");

    // One plan per split, shared verbatim across losses.
    std::vector<std::uint64_t> plan_hashes(tp.splits);
    for (int i = 0; i < tp.splits; ++i)
        plan_hashes[i] = plan_hash(split(ds.pair_count(), {master, i, tp.train_fraction}));

    const std::size_t n_runs = tp.losses.size() * static_cast<std::size_t>(tp.splits);
    std::vector<TrainRecord> records(n_runs);

    detail::run_indexed(opts.jobs, n_runs, [&](std::size_t r) {
        const Metric loss = tp.losses[r / tp.splits];
        const int split_id = static_cast<int>(r % tp.splits);
        const SplitPlan plan = split(ds.pair_count(), {master, split_id, tp.train_fraction});
        if (plan_hash(plan) != plan_hashes[split_id])
            throw std::logic_error("compare: split plan not reproducible — comparison is void");

        RunSpec rs;
        rs.loss = loss;
        rs.opt = tp.opt;
        rs.epochs = tp.epochs;
        rs.batch = tp.batch;
        rs.split_id = split_id;
        rs.seed = detail::run_seed(master, split_id);
        rs.huber = tp.huber;
        rs.base_filters = tp.base_filters;
        rs.kernel = tp.kernel;
        rs.pad = tp.pad;

        TrainOutcome res = train(ds, plan, rs);
        const std::string tag = run_tag(loss, split_id);
        save_train_record(res.record, opts.out / "runs" / (tag + ".csv"));
        // No wall-clock in the artifacts: identical config + seed must give
        // byte-identical outputs, so timing goes to the console only.
        json rm{{"loss", metric_name(loss)},
                {"split_id", split_id},
                {"seed", rs.seed},
                {"epochs", rs.epochs},
                {"batch", rs.batch},
                {"optimizer", rs.opt.kind == OptKind::Adam ? "adam" : "sgd"},
                {"lr", rs.opt.lr},
                {"split_hash", plan_hash(plan)},
                {"diverged", res.record.diverged},
                {"diverged_epoch", res.record.diverged_epoch}};
        io::write_json(opts.out / "runs" / (tag + ".json"), rm);
        save_checkpoint(res.model, opts.out / "checkpoints" / tag);
        std::printf("  run %-12s %3d epochs in %.1f s%s\n", tag.c_str(), rs.epochs,
                    res.record.wall_seconds, res.record.diverged ? "  [diverged]" : "");
        std::fflush(stdout);
        records[r] = std::move(res.record);
    });

    ComparisonSummary summary;
    summary.threshold = tp.threshold;
    summary.tail = tp.tail;
    summary.epochs = tp.epochs;
    bool any_diverged = false;
    for (std::size_t li = 0; li < tp.losses.size(); ++li) {
        LossSummary ls;
        ls.loss = tp.losses[li];
        for (int si = 0; si < tp.splits; ++si) {
            const TrainRecord& rec = records[li * tp.splits + si];
            ++ls.runs;
            if (rec.diverged) {
                ++ls.diverged;
                any_diverged = true;
                continue;
            }
            if (tp.epochs > 0) {
                ls.final_ssp.push_back(final_score(rec.val_ssp, tp.tail));
                ls.final_mse.push_back(final_score(rec.val_mse, tp.tail));
                const auto e = epochs_to_threshold(rec.val_ssp, tp.threshold);
                ls.epochs_to_thresh.push_back(e ? *e : tp.epochs + 1);
            }
        }
        summary.per_loss.push_back(std::move(ls));
    }
    io::write_json(opts.out / "summary.json", summary_to_json(summary));
    write_summary_csv(summary, opts.out / "summary.csv");
    return any_diverged ? 3 : 0;
}

// ---------------------------------------------------------------------------
// metric-sweep: the three metrics under amplitude/phase/frequency variation.

// Test signal x(t) = A*0.5*sin(0.5t + phi) * (0.5*cos((2+3t)*t) + 0.5*cos(w*t))
// on t in [0, 20] at 512 samples; baseline A=1, phi=pi, w=15. (The printed
// source formula has unbalanced parentheses; this is the documented reading.)
inline Field sweep_signal(double A, double phi, double w) {
    constexpr int kN = 512;
    Field f = make_field_1d(kN, 20.0);
    for (int i = 0; i < kN; ++i) {
        const double t = 20.0 * i / (kN - 1);
        f.values[i] = A * 0.5 * std::sin(0.5 * t + phi) *
                      (0.5 * std::cos((2.0 + 3.0 * t) * t) + 0.5 * std::cos(w * t));
    }
    return f;
}

inline int cmd_metric_sweep(const CliOpts& opts) {
    detail::require_out(opts);
    const Field base = sweep_signal(1.0, std::numbers::pi, 15.0);

    auto emit = [&](const std::string& name, const std::string& param,
                    const std::vector<double>& values,
                    const std::function<Field(double)>& make) {
        io::CsvWriter w(opts.out / name, {param, "mse", "mae", "ssp"});
        for (double v : values) {
            const Field var = make(v);
            w.append_row({io::g17(v), io::g17(mse(var, base).value), io::g17(mae(var, base).value),
                          io::g17(ssp(var, base).value)});
        }
        w.close();
    };

    auto linspace = [](double lo, double hi, int n) {
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
        return v;
    };

    emit("sweep_amplitude.csv", "A", linspace(-2.0, 2.0, 401),
         [](double a) { return sweep_signal(a, std::numbers::pi, 15.0); });
    emit("sweep_phase.csv", "phi", linspace(0.0, 2.0 * std::numbers::pi, 401),
         [](double p) { return sweep_signal(1.0, p, 15.0); });
    emit("sweep_frequency.csv", "omega", linspace(5.0, 25.0, 401),
         [](double w) { return sweep_signal(1.0, std::numbers::pi, w); });

    io::write_json(opts.out / "sweep_manifest.json",
                   json{{"signal",
                         "x(t) = A*0.5*sin(0.5t+phi)*(0.5*cos((2+3t)t) + 0.5*cos(omega*t))"},
                        {"t", "512 samples on [0, 20] s"},
                        {"baseline", {{"A", 1.0}, {"phi", std::numbers::pi}, {"omega", 15.0}}},
                        {"ranges",
                         {{"A", {-2.0, 2.0}}, {"phi", {0.0, 2.0 * std::numbers::pi}},
                          {"omega", {5.0, 25.0}}}}});
    return 0;
}

// ---------------------------------------------------------------------------
// hyperplane: loss surface over two final-layer weights.

inline int cmd_hyperplane(const CliOpts& opts) {
    const json cfg = detail::load_config(opts);
    detail::require_out(opts);
    const Dataset ds = detail::load_dataset_from_config(cfg, opts);

    Model<float> model = [&] {
        try {
            return load_checkpoint(
                detail::resolve_path(opts, detail::jreq<std::string>(cfg, "checkpoint")));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("checkpoint: ") + e.what());
        }
    }();
    Conv<float>& head = model.convs.back();

    const auto i1 = detail::jget<std::size_t>(cfg, "hyperplane.index1", 0);
    const auto i2 = detail::jget<std::size_t>(cfg, "hyperplane.index2", 1);
    if (i1 >= head.w.size() || i2 >= head.w.size() || i1 == i2)
        throw ConfigError("hyperplane: weight indices must be distinct and inside the final "
                          "layer (size " + std::to_string(head.w.size()) + ")");
    const auto sample_id = detail::jget<std::size_t>(cfg, "hyperplane.sample", 0);
    if (sample_id >= ds.pair_count()) throw ConfigError("hyperplane.sample: out of range");
    const int steps = detail::jget(cfg, "hyperplane.steps", 41);
    if (steps < 1) throw ConfigError("hyperplane.steps must be >= 1");
    const double span = detail::jget(cfg, "hyperplane.span", 2.0);

    const double t1_star = head.w[i1], t2_star = head.w[i2];
    const double lo1 = detail::jget(cfg, "hyperplane.min1", t1_star - span);
    const double hi1 = detail::jget(cfg, "hyperplane.max1", t1_star + span);
    const double lo2 = detail::jget(cfg, "hyperplane.min2", t2_star - span);
    const double hi2 = detail::jget(cfg, "hyperplane.max2", t2_star + span);

    Tensor<float> x;
    std::vector<Field> targets;
    const std::uint32_t pid = static_cast<std::uint32_t>(sample_id);
    detail::gather_batch(ds, std::span(&pid, 1), x, targets);

    auto grid_value = [steps](double lo, double hi, int i) {
        return steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
    };

    std::vector<std::string> header{"theta1"};
    for (int j = 0; j < steps; ++j) header.push_back(io::g17(grid_value(lo2, hi2, j)));
    io::CsvWriter wssp(opts.out / "hyperplane_ssp.csv", header);
    io::CsvWriter wmse(opts.out / "hyperplane_mse.csv", header);
    io::CsvWriter wmae(opts.out / "hyperplane_mae.csv", header);

    typename Model<float>::Cache cache;
    for (int i = 0; i < steps; ++i) {
        const double t1 = grid_value(lo1, hi1, i);
        std::vector<std::string> rs{io::g17(t1)}, rm{io::g17(t1)}, ra{io::g17(t1)};
        for (int j = 0; j < steps; ++j) {
            const double t2 = grid_value(lo2, hi2, j);
            head.w[i1] = static_cast<float>(t1);
            head.w[i2] = static_cast<float>(t2);
            const Tensor<float>& y = model.forward(x, cache);
            const Field pred = detail::tensor_to_fields(y, ds)[0];
            rs.push_back(io::g17(ssp(pred, targets[0]).value));
            rm.push_back(io::g17(mse(pred, targets[0]).value));
            ra.push_back(io::g17(mae(pred, targets[0]).value));
        }
        wssp.append_row(rs);
        wmse.append_row(rm);
        wmae.append_row(ra);
    }
    wssp.close();
    wmse.close();
    wmae.close();

    io::write_json(opts.out / "hyperplane.json",
                   json{{"theta1_star", t1_star},
                        {"theta2_star", t2_star},
                        {"index1", i1},
                        {"index2", i2},
                        {"sample", sample_id},
                        {"range1", {lo1, hi1}},
                        {"range2", {lo2, hi2}},
                        {"steps", steps}});
    return 0;
}

// ---------------------------------------------------------------------------
// stats: recompute a ComparisonSummary from per-run CSV/JSON records.

inline int cmd_stats(const CliOpts& opts) {
    const json cfg = detail::load_config(opts);
    detail::require_out(opts);
    const std::filesystem::path runs_dir =
        detail::resolve_path(opts, detail::jreq<std::string>(cfg, "runs"));
    const double threshold = detail::jget(cfg, "threshold", 0.05);

    // Collect run manifests, grouped by loss, ordered by (loss, split).
    std::vector<std::filesystem::path> manifests;
    if (!std::filesystem::is_directory(runs_dir))
        throw ConfigError("runs: not a directory: " + runs_dir.string());
    for (const auto& e : std::filesystem::directory_iterator(runs_dir))
        if (e.path().extension() == ".json") manifests.push_back(e.path());
    std::sort(manifests.begin(), manifests.end());
    if (manifests.empty()) throw ConfigError("runs: no run manifests found in " + runs_dir.string());

    std::map<std::string, LossSummary> groups;
    int epochs = 0;
    for (const auto& mpath : manifests) {
        const json m = io::read_json(mpath);
        const std::string loss = m.value("loss", "");
        LossSummary& ls = groups.try_emplace(loss).first->second;
        try {
            ls.loss = metric_from_name(loss);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("runs: " + mpath.string() + ": " + e.what());
        }
        ++ls.runs;
        if (m.value("diverged", false)) {
            ++ls.diverged;
            continue;
        }
        // Parse the curve back from the CSV.
        std::filesystem::path csv = mpath;
        csv.replace_extension(".csv");
        std::ifstream in(csv);
        if (!in) throw ConfigError("runs: missing record " + csv.string());
        std::string line;
        std::getline(in, line);  // header
        std::vector<double> val_ssp, val_mse;
        while (std::getline(in, line)) {
            const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
            const auto c3 = line.find(',', c2 + 1);
            val_ssp.push_back(std::stod(line.substr(c2 + 1, c3 - c2 - 1)));
            val_mse.push_back(std::stod(line.substr(c3 + 1)));
        }
        if (val_ssp.empty()) throw ConfigError("runs: empty record " + csv.string());
        epochs = std::max(epochs, static_cast<int>(val_ssp.size()));
        const int tail = std::max(5, static_cast<int>(val_ssp.size()) / 10);
        ls.final_ssp.push_back(final_score(val_ssp, std::min<int>(tail, val_ssp.size())));
        ls.final_mse.push_back(final_score(val_mse, std::min<int>(tail, val_mse.size())));
        const auto e = epochs_to_threshold(val_ssp, threshold);
        ls.epochs_to_thresh.push_back(e ? *e : static_cast<int>(val_ssp.size()) + 1);
    }

    ComparisonSummary summary;
    summary.threshold = threshold;
    summary.tail = std::max(5, epochs / 10);
    summary.epochs = epochs;
    for (auto& [name, ls] : groups) summary.per_loss.push_back(std::move(ls));
    io::write_json(opts.out / "stats.json", summary_to_json(summary));
    write_summary_csv(summary, opts.out / "stats.csv");
    return 0;
}

// ---------------------------------------------------------------------------
// probe: per-update spectral-integral trajectories for each loss.

inline int cmd_probe(const CliOpts& opts) {
    const json cfg = detail::load_config(opts);
    const std::uint64_t master = detail::resolved_seed(cfg, opts);
    detail::require_out(opts);
    const Dataset ds = detail::load_dataset_from_config(cfg, opts);
    const detail::TrainPlan tp = detail::parse_train(cfg);

    const SplitPlan plan = split(ds.pair_count(), {master, 0, tp.train_fraction});
    json manifest{{"updates_per_epoch", 0},
                  {"probe_epochs", tp.probe_epochs},
                  {"losses", json::array()}};

    std::vector<TrainRecord> records(tp.losses.size());
    detail::run_indexed(opts.jobs, tp.losses.size(), [&](std::size_t li) {
        RunSpec rs;
        rs.loss = tp.losses[li];
        rs.opt = tp.opt;
        rs.epochs = tp.probe_epochs;  // probing stops there anyway
        rs.batch = tp.batch;
        rs.split_id = 0;
        rs.seed = detail::run_seed(master, 0);
        rs.huber = tp.huber;
        rs.base_filters = tp.base_filters;
        rs.kernel = tp.kernel;
        rs.pad = tp.pad;
        rs.probe_enabled = true;
        rs.probe_epochs = tp.probe_epochs;
        rs.probe_sample = tp.probe_sample;
        records[li] = train(ds, plan, rs).record;
    });

    bool any_diverged = false;
    for (std::size_t li = 0; li < tp.losses.size(); ++li) {
        const TrainRecord& rec = records[li];
        const std::string name = metric_name(tp.losses[li]);
        any_diverged |= rec.diverged;
        const ProbeData& pd = *rec.probe;
        io::CsvWriter w(opts.out / ("probe_" + name + ".csv"),
                        {"update_index", "spectral_integral"});
        for (std::size_t u = 0; u < pd.integral.size(); ++u)
            w.append_row({std::to_string(u + 1), io::g17(pd.integral[u])});
        w.close();
        std::vector<float> flat;
        for (const auto& s : pd.spectra) flat.insert(flat.end(), s.begin(), s.end());
        io::write_f32(opts.out / ("probe_" + name + "_spectra.f32"), flat);
        manifest["losses"].push_back(json{{"loss", name},
                                          {"truth_integral", pd.truth_integral},
                                          {"updates", pd.integral.size()},
                                          {"diverged", rec.diverged}});
        manifest["updates_per_epoch"] = pd.updates_per_epoch;
    }
    io::write_json(opts.out / "probe.json", manifest);
    return any_diverged ? 3 : 0;
}

}  // namespace ssp
