#pragma once

// Minimal dense (batch, channel, height, width) tensor. 1D signals use
// height 1 so the convolution code has a single path.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssp {

template <typename T>
struct Tensor {
    int b = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int b_, int c_, int h_, int w_)
        : b(b_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(b_) * c_ * h_ * w_, T(0)) {}

    std::size_t size() const { return v.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

    T* row(int bi, int ci, int y) {
        return v.data() + ((static_cast<std::size_t>(bi) * c + ci) * h + y) * w;
    }
    const T* row(int bi, int ci, int y) const {
        return v.data() + ((static_cast<std::size_t>(bi) * c + ci) * h + y) * w;
    }
    T& at(int bi, int ci, int y, int x) { return row(bi, ci, y)[x]; }
    T at(int bi, int ci, int y, int x) const { return row(bi, ci, y)[x]; }

    void zero() { std::fill(v.begin(), v.end(), T(0)); }

    bool same_shape(const Tensor& o) const {
        return b == o.b && c == o.c && h == o.h && w == o.w;
    }
};

template <typename T>
inline void require_shape(const Tensor<T>& t, int b, int c, int h, int w, const char* who) {
    if (t.b != b || t.c != c || t.h != h || t.w != w)
        throw std::invalid_argument(std::string(who) + ": expected tensor " + std::to_string(b) +
                                    "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
                                    std::to_string(w) + ", got " + std::to_string(t.b) + "x" +
                                    std::to_string(t.c) + "x" + std::to_string(t.h) + "x" +
                                    std::to_string(t.w));
}

}  // namespace ssp
