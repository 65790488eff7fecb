#pragma once

// The five training losses (SSP, MSE, MAE, RMSE, Huber) as value-plus-
// gradient evaluations over prediction/target field pairs. All arithmetic
// in double precision.
//
// The SSP,
//
//     J(p, t) = ||F_p - F_t|| / (||F_p|| + ||F_t||)  in [0, 1],
//
// is a ratio of Sobolev norms and therefore invariant to the DFT convention
// and to the constant quadrature weight. By Parseval it reduces exactly to
// the space-domain ratio ||p - t||_2 / (||p||_2 + ||t||_2), which is what
// the hot path evaluates; ssp_fourier() keeps the transform-based route for
// cross-checking.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "ssp/field.hpp"
#include "ssp/spectral.hpp"

namespace ssp {

struct LossEval {
    double value = 0.0;
    std::vector<double> grad;  // d value / d prediction, shaped like pred
};

struct HuberConfig {
    double delta = 1.0;
};

enum class Metric { SSP, MSE, MAE, RMSE, Huber };

inline const char* metric_name(Metric m) {
    switch (m) {
        case Metric::SSP: return "ssp";
        case Metric::MSE: return "mse";
        case Metric::MAE: return "mae";
        case Metric::RMSE: return "rmse";
        case Metric::Huber: return "huber";
    }
    return "?";
}

inline Metric metric_from_name(const std::string& s) {
    if (s == "ssp") return Metric::SSP;
    if (s == "mse") return Metric::MSE;
    if (s == "mae") return Metric::MAE;
    if (s == "rmse") return Metric::RMSE;
    if (s == "huber") return Metric::Huber;
    throw std::invalid_argument("unknown metric '" + s + "'");
}

namespace detail {
// Denominator floor used in gradient formulas only, never in values.
inline constexpr double kGradEps = 1e-12;
}  // namespace detail

/// Surface similarity parameter with analytic gradient. Degenerate cases:
/// both signals zero -> 0 (agreement convention); anti-parallel signals
/// saturate at exactly 1; gradient at pred == target is 0.
inline LossEval ssp(const Field& pred, const Field& target) {
    require_same_shape(pred, target, "ssp");
    const std::size_t n_pts = pred.size();

    double aa = 0.0, bb = 0.0, dot = 0.0, dd = 0.0;
    for (std::size_t i = 0; i < n_pts; ++i) {
        const double p = pred.values[i];
        const double t = target.values[i];
        aa += p * p;
        bb += t * t;
        dot += p * t;
        const double d = p - t;
        dd += d * d;
    }
    const double a = std::sqrt(aa);
    const double b = std::sqrt(bb);
    const double n = std::sqrt(dd);

    LossEval out;
    out.grad.assign(n_pts, 0.0);
    if (a + b == 0.0) return out;  // both identically zero -> perfect agreement

    // Anti-parallel signals sit on the flat saturation plateau; pin the
    // value at exactly 1 (the Cauchy-Schwarz bound dot >= -a*b is tight
    // there, so this triggers only within ~1e-13 of the plateau).
    const double value_raw = n / (a + b);
    const bool saturated = dot <= -a * b * (1.0 - 1e-13);
    out.value = saturated ? 1.0 : std::clamp(value_raw, 0.0, 1.0);

    const double nf = std::max(n, detail::kGradEps);
    const double af = std::max(a, detail::kGradEps);
    const double sf = std::max(a + b, detail::kGradEps);
    const double c1 = 1.0 / (nf * sf);
    const double c2 = n / (sf * sf * af);
    for (std::size_t i = 0; i < n_pts; ++i)
        out.grad[i] = (pred.values[i] - target.values[i]) * c1 - pred.values[i] * c2;
    return out;
}

/// SSP evaluated the definitional way, via forward transforms and Sobolev
/// norms. Equal to ssp().value up to roundoff; kept as the cross-check route.
inline double ssp_fourier(const Field& pred, const Field& target) {
    require_same_shape(pred, target, "ssp_fourier");
    Field diff = pred;
    for (std::size_t i = 0; i < diff.size(); ++i) diff.values[i] -= target.values[i];
    const double n = sobolev_norm(forward(diff));
    const double a = sobolev_norm(forward(pred));
    const double b = sobolev_norm(forward(target));
    if (a + b == 0.0) return 0.0;
    return n / (a + b);
}

inline LossEval mse(const Field& pred, const Field& target) {
    require_same_shape(pred, target, "mse");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    LossEval out;
    out.grad.resize(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values[i] - target.values[i];
        acc += d * d;
        out.grad[i] = 2.0 * d * inv_n;
    }
    out.value = acc * inv_n;
    return out;
}

inline LossEval mae(const Field& pred, const Field& target) {
    require_same_shape(pred, target, "mae");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    LossEval out;
    out.grad.resize(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values[i] - target.values[i];
        acc += std::abs(d);
        out.grad[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;  // sign(0) = 0
    }
    out.value = acc * inv_n;
    return out;
}

/// sqrt(mean of squared errors). Zero-gradient convention at rmse = 0.
inline LossEval rmse(const Field& pred, const Field& target) {
    LossEval out = mse(pred, target);
    const double r = std::sqrt(out.value);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    const double scale = 1.0 / std::max(r, detail::kGradEps) * inv_n;
    for (std::size_t i = 0; i < pred.size(); ++i)
        out.grad[i] = (pred.values[i] - target.values[i]) * scale;
    out.value = r;
    return out;
}

/// Mean Huber loss: quadratic within delta, linear outside, gradient
/// continuous at |residual| = delta.
inline LossEval huber(const Field& pred, const Field& target, const HuberConfig& cfg = {}) {
    require_same_shape(pred, target, "huber");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("huber: delta must be positive");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    const double delta = cfg.delta;
    LossEval out;
    out.grad.resize(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values[i] - target.values[i];
        const double ad = std::abs(d);
        if (ad <= delta) {
            acc += 0.5 * d * d;
            out.grad[i] = d * inv_n;
        } else {
            acc += delta * (ad - 0.5 * delta);
            out.grad[i] = (d > 0.0 ? delta : -delta) * inv_n;
        }
    }
    out.value = acc * inv_n;
    return out;
}

inline LossEval evaluate(Metric m, const Field& pred, const Field& target,
                         const HuberConfig& cfg = {}) {
    switch (m) {
        case Metric::SSP: return ssp(pred, target);
        case Metric::MSE: return mse(pred, target);
        case Metric::MAE: return mae(pred, target);
        case Metric::RMSE: return rmse(pred, target);
        case Metric::Huber: return huber(pred, target, cfg);
    }
    throw std::logic_error("evaluate: bad metric");
}

/// Mean of per-sample losses; gradient is the concatenation of per-sample
/// gradients scaled by 1/batch. Reduction is sequential, so results are
/// bit-stable.
inline LossEval batch_loss(Metric m, std::span<const Field> preds, std::span<const Field> targets,
                           const HuberConfig& cfg = {}) {
    if (preds.size() != targets.size())
        throw std::invalid_argument("batch_loss: batch size mismatch");
    if (preds.empty()) throw std::invalid_argument("batch_loss: empty batch");
    const double inv_b = 1.0 / static_cast<double>(preds.size());
    LossEval out;
    out.grad.reserve(preds.size() * preds[0].size());
    for (std::size_t s = 0; s < preds.size(); ++s) {
        LossEval e = evaluate(m, preds[s], targets[s], cfg);
        out.value += e.value;
        for (double g : e.grad) out.grad.push_back(g * inv_b);
    }
    out.value *= inv_b;
    return out;
}

}  // namespace ssp
