#pragma once

// Training orchestration: one run = (loss, split, seed) trained for a fixed
// number of epochs, with validation SSP *and* MSE recorded every epoch
// regardless of the training loss, plus the optional per-update spectral
// probe. Everything is deterministic per RunSpec; comparison fairness comes
// from serving the same SplitPlan and the same init seed to every loss.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/dataset.hpp"
#include "ssp/io.hpp"
#include "ssp/metrics.hpp"
#include "ssp/model.hpp"
#include "ssp/optim.hpp"
#include "ssp/spectral.hpp"

namespace ssp {

struct RunSpec {
    Metric loss = Metric::SSP;
    OptimizerSpec opt;
    int epochs = 100;
    int batch = 32;
    int split_id = 0;
    std::uint64_t seed = 0;  // weight init + epoch shuffles
    HuberConfig huber;
    // model shape knobs (grid geometry comes from the dataset)
    int base_filters = 8;
    int kernel = 5;
    Pad pad = Pad::Circular;
    // per-update probe (Fig-5-style spectral diagnostics)
    bool probe_enabled = false;
    int probe_epochs = 2;
    std::size_t probe_sample = 0;  // index into the validation index list
};

struct ProbeData {
    double truth_integral = 0.0;
    int updates_per_epoch = 0;
    std::vector<double> integral;            // one entry per weight update
    std::vector<std::vector<float>> spectra; // |F| per update, fftfreq order
};

struct TrainRecord {
    std::vector<double> train_loss, val_ssp, val_mse;  // one entry per epoch
    bool diverged = false;
    int diverged_epoch = -1;  // 1-based epoch at which training went non-finite
    double wall_seconds = 0.0;
    std::optional<ProbeData> probe;
};

/// Integral of the magnitude spectrum, sum |F| * dk (* dk_y in 2D).
inline double spectral_integral(const Field& f) {
    Spectrum s = forward(f);
    double acc = 0.0;
    for (const auto& c : s.coeffs) acc += std::abs(c);
    return acc * (s.ny > 1 ? s.dk_x() * s.dk_y() : s.dk_x());
}

namespace detail {

inline void gather_batch(const Dataset& ds, std::span<const std::uint32_t> ids,
                         Tensor<float>& x, std::vector<Field>& targets) {
    const int B = static_cast<int>(ids.size());
    if (x.b != B || x.c != kHistory || x.h != ds.ny || x.w != ds.nx)
        x = Tensor<float>(B, kHistory, ds.ny, ds.nx);
    targets.resize(ids.size());
    const std::size_t pts = ds.frame_points();
    for (int bi = 0; bi < B; ++bi) {
        const Dataset::PairIndex p = ds.pair(ids[bi]);
        for (int j = 0; j < kHistory; ++j)
            std::copy_n(ds.frame(p.inputs[j]), pts, x.row(bi, j, 0));
        targets[bi] = ds.frame_as_field(p.target);
    }
}

inline std::vector<Field> tensor_to_fields(const Tensor<float>& out, const Dataset& ds) {
    std::vector<Field> preds(out.b);
    const std::size_t pts = ds.frame_points();
    for (int bi = 0; bi < out.b; ++bi) {
        Field& f = preds[bi];
        f.nx = ds.nx;
        f.ny = ds.ny;
        f.extent_x = ds.extent_x;
        f.extent_y = ds.extent_y;
        f.values.assign(out.row(bi, 0, 0), out.row(bi, 0, 0) + pts);
    }
    return preds;
}

}  // namespace detail

struct TrainOutcome {
    TrainRecord record;
    Model<float> model;
};

inline TrainOutcome train(const Dataset& ds, const SplitPlan& plan, const RunSpec& spec) {
    if (spec.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (spec.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    if (plan.train.empty() || plan.val.empty())
        throw std::invalid_argument("train: split has an empty side");

    ModelConfig mc;
    mc.dims = ds.ny > 1 ? 2 : 1;
    mc.nx = ds.nx;
    mc.ny = ds.ny;
    mc.n_history = kHistory;
    mc.base_filters = spec.base_filters;
    mc.kernel = spec.kernel;
    mc.pad = spec.pad;
    mc.seed = spec.seed;

    TrainOutcome out{TrainRecord{}, Model<float>(mc)};
    Model<float>& model = out.model;
    TrainRecord& rec = out.record;
    Optimizer<float> opt(spec.opt);
    auto params = model.params();

    const auto t0 = std::chrono::steady_clock::now();

    const std::size_t n_train = plan.train.size();
    const std::size_t batch = std::min<std::size_t>(spec.batch, n_train);
    const std::size_t n_batches = n_train / batch;  // drop the ragged tail

    // Probe setup: one fixed validation sample, truth integral stored once.
    Field probe_target;
    Tensor<float> probe_x;
    if (spec.probe_enabled) {
        if (spec.probe_sample >= plan.val.size())
            throw std::invalid_argument("train: probe_sample outside the validation set");
        rec.probe.emplace();
        std::vector<Field> tgt;
        const std::uint32_t pid = plan.val[spec.probe_sample];
        detail::gather_batch(ds, std::span(&pid, 1), probe_x, tgt);
        probe_target = tgt[0];
        rec.probe->truth_integral = spectral_integral(probe_target);
        rec.probe->updates_per_epoch = static_cast<int>(n_batches);
    }

    typename Model<float>::Cache cache, probe_cache;
    Tensor<float> x, gy;
    std::vector<Field> targets;
    std::vector<std::uint32_t> order(plan.train.begin(), plan.train.end());

    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        Xoshiro256 shuffle_rng = substream(spec.seed, "epoch.shuffle", epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            detail::gather_batch(ds, std::span(order).subspan(b * batch, batch), x, targets);
            const Tensor<float>& y = model.forward(x, cache);
            std::vector<Field> preds = detail::tensor_to_fields(y, ds);
            LossEval ev = batch_loss(spec.loss, preds, targets, spec.huber);
            if (!std::isfinite(ev.value)) {
                rec.diverged = true;
                rec.diverged_epoch = epoch;
                break;
            }
            loss_sum += ev.value;

            if (gy.b != y.b || gy.c != 1 || gy.h != y.h || gy.w != y.w)
                gy = Tensor<float>(y.b, 1, y.h, y.w);
            for (std::size_t i = 0; i < ev.grad.size(); ++i)
                gy.v[i] = static_cast<float>(ev.grad[i]);
            model.zero_grad();
            model.backward(cache, gy);
            opt.step(params);

            if (rec.probe && epoch <= spec.probe_epochs) {
                const Tensor<float>& py = model.forward(probe_x, probe_cache);
                Field pf = detail::tensor_to_fields(py, ds)[0];
                Spectrum s = forward(pf);
                double acc = 0.0;
                std::vector<float> mag(s.coeffs.size());
                for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
                    const double a = std::abs(s.coeffs[i]);
                    acc += a;
                    mag[i] = static_cast<float>(a);
                }
                rec.probe->integral.push_back(acc * (s.ny > 1 ? s.dk_x() * s.dk_y() : s.dk_x()));
                rec.probe->spectra.push_back(std::move(mag));
            }
        }
        if (rec.diverged) break;
        rec.train_loss.push_back(loss_sum / static_cast<double>(n_batches));

        // Full validation pass in both report metrics, every epoch.
        double ssp_sum = 0.0, mse_sum = 0.0;
        for (std::size_t from = 0; from < plan.val.size(); from += batch) {
            const std::size_t take = std::min(batch, plan.val.size() - from);
            detail::gather_batch(ds, std::span(plan.val).subspan(from, take), x, targets);
            const Tensor<float>& y = model.forward(x, cache);
            std::vector<Field> preds = detail::tensor_to_fields(y, ds);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                ssp_sum += ssp(preds[i], targets[i]).value;
                mse_sum += mse(preds[i], targets[i]).value;
            }
        }
        const double inv = 1.0 / static_cast<double>(plan.val.size());
        rec.val_ssp.push_back(ssp_sum * inv);
        rec.val_mse.push_back(mse_sum * inv);
        if (!std::isfinite(rec.val_ssp.back()) || !std::isfinite(rec.val_mse.back())) {
            rec.diverged = true;
            rec.diverged_epoch = epoch;
            break;
        }
    }

    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

/// First 1-based epoch with curve value strictly below the threshold.
inline std::optional<int> epochs_to_threshold(const std::vector<double>& curve,
                                              double threshold) {
    for (std::size_t i = 0; i < curve.size(); ++i)
        if (curve[i] < threshold) return static_cast<int>(i) + 1;
    return std::nullopt;
}

/// Minimum of the last `tail` epochs of a metric curve.
inline double final_score(const std::vector<double>& curve, int tail) {
    if (tail < 1 || static_cast<std::size_t>(tail) > curve.size())
        throw std::invalid_argument("final_score: tail must be in [1, epochs], got " +
                                    std::to_string(tail) + " for " +
                                    std::to_string(curve.size()) + " epochs");
    double m = curve[curve.size() - tail];
    for (std::size_t i = curve.size() - tail; i < curve.size(); ++i) m = std::min(m, curve[i]);
    return m;
}

// ---------------------------------------------------------------------------
// Train-record and checkpoint persistence.

inline void save_train_record(const TrainRecord& rec, const std::filesystem::path& csv_path) {
    io::CsvWriter w(csv_path, {"epoch", "train_loss", "val_ssp", "val_mse"});
    for (std::size_t i = 0; i < rec.train_loss.size(); ++i) {
        const bool has_val = i < rec.val_ssp.size();
        w.append_row({std::to_string(i + 1), io::g17(rec.train_loss[i]),
                      has_val ? io::g17(rec.val_ssp[i]) : "nan",
                      has_val ? io::g17(rec.val_mse[i]) : "nan"});
    }
    w.close();
}

inline const char* pad_name(Pad p) { return p == Pad::Circular ? "circular" : "zero"; }
inline Pad pad_from_name(const std::string& s) {
    if (s == "circular") return Pad::Circular;
    if (s == "zero") return Pad::Zero;
    throw std::invalid_argument("unknown padding mode '" + s + "' (want circular or zero)");
}

inline void save_checkpoint(const Model<float>& model, const std::filesystem::path& base) {
    const ModelConfig& mc = model.cfg;
    json layers = json::array();
    std::vector<float> payload;
    for (const auto& c : model.convs) {
        layers.push_back({{"name", c.name + ".w"},
                          {"shape", {c.cout, c.cin, c.kh, c.kw}},
                          {"offset", payload.size()}});
        payload.insert(payload.end(), c.w.begin(), c.w.end());
        layers.push_back(
            {{"name", c.name + ".b"}, {"shape", {c.cout}}, {"offset", payload.size()}});
        payload.insert(payload.end(), c.b.begin(), c.b.end());
    }
    json m{{"format_version", kFormatVersion},
           {"kind", "checkpoint"},
           {"model",
            {{"dims", mc.dims},
             {"nx", mc.nx},
             {"ny", mc.ny},
             {"n_history", mc.n_history},
             {"base_filters", mc.base_filters},
             {"depth", mc.depth},
             {"kernel", mc.kernel},
             {"pad", pad_name(mc.pad)},
             {"seed", mc.seed}}},
           {"layers", layers},
           {"param_count", payload.size()}};
    io::write_f32(std::filesystem::path(base) += ".f32", payload);
    io::write_json(std::filesystem::path(base) += ".json", m);
}

inline Model<float> load_checkpoint(const std::filesystem::path& base) {
    const json m = io::read_json(std::filesystem::path(base) += ".json");
    io::check_version(m, base);
    if (m.value("kind", "") != "checkpoint")
        throw std::runtime_error(base.string() + ": manifest kind is not 'checkpoint'");
    const json& jm = m.at("model");
    ModelConfig mc;
    mc.dims = jm.at("dims").get<int>();
    mc.nx = jm.at("nx").get<int>();
    mc.ny = jm.at("ny").get<int>();
    mc.n_history = jm.at("n_history").get<int>();
    mc.base_filters = jm.at("base_filters").get<int>();
    mc.depth = jm.at("depth").get<int>();
    mc.kernel = jm.at("kernel").get<int>();
    mc.pad = pad_from_name(jm.at("pad").get<std::string>());
    mc.seed = jm.at("seed").get<std::uint64_t>();
    Model<float> model(mc);

    const std::vector<float> payload = io::read_f32(std::filesystem::path(base) += ".f32");
    if (payload.size() != model.param_count())
        throw std::runtime_error(base.string() + ": checkpoint parameter count " +
                                 std::to_string(payload.size()) + " != model expectation " +
                                 std::to_string(model.param_count()));
    std::size_t off = 0;
    for (auto& c : model.convs) {
        std::copy_n(payload.begin() + off, c.w.size(), c.w.begin());
        off += c.w.size();
        std::copy_n(payload.begin() + off, c.b.size(), c.b.begin());
        off += c.b.size();
    }
    return model;
}

}  // namespace ssp
