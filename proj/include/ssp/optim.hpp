#pragma once

// Adam and SGD(+momentum), operating on the model's parameter views.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/model.hpp"

namespace ssp {

enum class OptKind { Adam, Sgd };

struct OptimizerSpec {
    OptKind kind = OptKind::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;    // Adam
    double beta2 = 0.999;  // Adam
    double eps = 1e-8;     // Adam
    double momentum = 0.0; // SGD
};

inline OptKind opt_kind_from_name(const std::string& s) {
    if (s == "adam") return OptKind::Adam;
    if (s == "sgd") return OptKind::Sgd;
    throw std::invalid_argument("unknown optimizer '" + s + "' (want adam or sgd)");
}

template <typename T>
class Optimizer {
  public:
    explicit Optimizer(OptimizerSpec spec) : spec_(spec) {
        if (!(spec.lr > 0.0)) throw std::invalid_argument("optimizer: lr must be > 0");
    }

    long steps_taken() const { return step_; }

    void step(std::vector<typename Model<T>::ParamView>& params) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.n, T(0));
                v_.emplace_back(p.n, T(0));
            }
        }
        if (m_.size() != params.size())
            throw std::invalid_argument("optimizer: parameter layout changed between steps");
        for (std::size_t i = 0; i < params.size(); ++i)
            if (m_[i].size() != params[i].n)
                throw std::invalid_argument("optimizer: parameter layout changed between steps");
        ++step_;
        if (spec_.kind == OptKind::Adam) {
            const T b1 = static_cast<T>(spec_.beta1), b2 = static_cast<T>(spec_.beta2);
            const T corr1 = static_cast<T>(1.0 - std::pow(spec_.beta1, step_));
            const T corr2 = static_cast<T>(1.0 - std::pow(spec_.beta2, step_));
            const T lr = static_cast<T>(spec_.lr), eps = static_cast<T>(spec_.eps);
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto& p = params[i];
                T* m = m_[i].data();
                T* v = v_[i].data();
                for (std::size_t j = 0; j < p.n; ++j) {
                    const T g = p.grad[j];
                    m[j] = b1 * m[j] + (T(1) - b1) * g;
                    v[j] = b2 * v[j] + (T(1) - b2) * g * g;
                    const T mhat = m[j] / corr1;
                    const T vhat = v[j] / corr2;
                    p.value[j] -= lr * mhat / (std::sqrt(vhat) + eps);
                }
            }
        } else {
            const T lr = static_cast<T>(spec_.lr), mu = static_cast<T>(spec_.momentum);
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto& p = params[i];
                T* buf = m_[i].data();
                for (std::size_t j = 0; j < p.n; ++j) {
                    const T g = p.grad[j];
                    if (mu != T(0)) {
                        buf[j] = mu * buf[j] + g;
                        p.value[j] -= lr * buf[j];
                    } else {
                        p.value[j] -= lr * g;
                    }
                }
            }
        }
    }

  private:
    OptimizerSpec spec_;
    long step_ = 0;
    std::vector<std::vector<T>> m_, v_;  // Adam moments / SGD momentum buffer
};

}  // namespace ssp
