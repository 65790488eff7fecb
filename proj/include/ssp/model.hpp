#pragma once

// Convolutional encoder-decoder flow map. Eight history frames enter as
// channels, one future frame comes out. The network is fully convolutional
// with three encoder blocks (stride-1 conv + ReLU, then a learned stride-2
// down-sampler with linear activation) and three decoder blocks
// (nearest-neighbour 2x upsample + stride-1 conv + ReLU), closed by a 1x1
// linear head. 1D signals run through the same code with height 1.
//
// Reverse-mode gradients are written out by hand; everything is templated
// on the scalar type so gradient checks can run in double while training
// runs in float.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/rng.hpp"
#include "ssp/tensor.hpp"

namespace ssp {

enum class Pad { Circular, Zero };

struct ModelConfig {
    int dims = 1;         // 1 or 2
    int nx = 128;         // grid width
    int ny = 1;           // grid height, 1 for dims == 1
    int n_history = 8;    // input channels
    int base_filters = 8; // channel width of the first encoder conv
    int depth = 3;        // encoder/decoder blocks (spatial reduction 2^depth)
    int kernel = 5;       // odd kernel size of the stride-1 convs
    Pad pad = Pad::Circular;
    std::uint64_t seed = 0;
};

inline void validate(const ModelConfig& c) {
    if (c.dims != 1 && c.dims != 2)
        throw std::invalid_argument("model: dims must be 1 or 2");
    if (c.dims == 1 && c.ny != 1)
        throw std::invalid_argument("model: 1D model requires ny == 1");
    if (c.dims == 2 && c.ny < 2)
        throw std::invalid_argument("model: 2D model requires ny >= 2");
    if (c.n_history < 1) throw std::invalid_argument("model: n_history must be >= 1");
    if (c.base_filters < 1) throw std::invalid_argument("model: base_filters must be >= 1");
    if (c.depth < 1) throw std::invalid_argument("model: depth must be >= 1");
    if (c.kernel < 1 || c.kernel % 2 == 0)
        throw std::invalid_argument("model: kernel must be odd and >= 1");
    const int red = 1 << c.depth;
    if (c.nx % red != 0 || c.nx < red)
        throw std::invalid_argument("model: nx must be a positive multiple of 2^depth, got nx=" +
                                    std::to_string(c.nx));
    if (c.dims == 2 && (c.ny % red != 0 || c.ny < red))
        throw std::invalid_argument("model: ny must be a positive multiple of 2^depth, got ny=" +
                                    std::to_string(c.ny));
}

namespace detail {

// Reusable workspaces so the hot path never allocates.
template <typename T>
struct ConvScratch {
    std::vector<T> pad;    // padded input block (cin, h+kh-1, w+kw-1)
    std::vector<T> gpad;   // gradient wrt the padded block
    std::vector<T> gmask;  // ReLU-masked copy of the upstream gradient
};

}  // namespace detail

// One convolution layer. Two flavours are supported:
//   * stride 1, odd kernel, 'same' output size via circular or zero padding;
//   * kernel == stride (2x down-sampler), no padding.
template <typename T>
struct Conv {
    int cin = 0, cout = 0;
    int kh = 1, kw = 1;
    int sh = 1, sw = 1;
    bool relu = false;
    Pad pad = Pad::Circular;
    std::string name;

    std::vector<T> w, gw;  // (cout, cin, kh, kw), row-major
    std::vector<T> b, gb;  // (cout)

    Conv() = default;
    Conv(std::string name_, int cin_, int cout_, int kh_, int kw_, int sh_, int sw_, bool relu_,
         Pad pad_)
        : cin(cin_), cout(cout_), kh(kh_), kw(kw_), sh(sh_), sw(sw_), relu(relu_), pad(pad_),
          name(std::move(name_)) {
        const bool plain = sh == 1 && sw == 1 && kh % 2 == 1 && kw % 2 == 1;
        const bool down = kh == sh && kw == sw && (sh > 1 || sw > 1);
        if (!plain && !down)
            throw std::invalid_argument("conv " + name + ": unsupported kernel/stride combination");
        w.assign(static_cast<std::size_t>(cout) * cin * kh * kw, T(0));
        gw.assign(w.size(), T(0));
        b.assign(static_cast<std::size_t>(cout), T(0));
        gb.assign(b.size(), T(0));
    }

    bool strided() const { return sh > 1 || sw > 1; }

    T* wat(int co, int ci, int dy) {
        return w.data() + ((static_cast<std::size_t>(co) * cin + ci) * kh + dy) * kw;
    }
    const T* wat(int co, int ci, int dy) const {
        return w.data() + ((static_cast<std::size_t>(co) * cin + ci) * kh + dy) * kw;
    }
    T* gwat(int co, int ci, int dy) {
        return gw.data() + ((static_cast<std::size_t>(co) * cin + ci) * kh + dy) * kw;
    }

    void init(Xoshiro256& rng) {
        // Uniform with variance 1/fan_in, zero biases.
        const double fan_in = static_cast<double>(cin) * kh * kw;
        const double bound = std::sqrt(3.0 / fan_in);
        for (auto& x : w) x = static_cast<T>(rng.uniform(-bound, bound));
        std::fill(b.begin(), b.end(), T(0));
    }

    void out_shape(int h, int w_, int& oh, int& ow) const {
        if (strided()) {
            if (h % sh != 0 || w_ % sw != 0)
                throw std::invalid_argument("conv " + name + ": input not divisible by stride");
            oh = h / sh;
            ow = w_ / sw;
        } else {
            oh = h;
            ow = w_;
        }
    }

    // Builds the padded copy of one batch element into s.pad.
    void fill_pad(const Tensor<T>& in, int bi, detail::ConvScratch<T>& s) const {
        const int ph = in.h + kh - 1, pw = in.w + kw - 1;
        const int oh = (kh - 1) / 2, ow = (kw - 1) / 2;
        s.pad.assign(static_cast<std::size_t>(cin) * ph * pw, T(0));
        for (int ci = 0; ci < cin; ++ci) {
            for (int py = 0; py < ph; ++py) {
                T* dst = s.pad.data() + (static_cast<std::size_t>(ci) * ph + py) * pw;
                int sy = py - oh;
                if (pad == Pad::Circular) {
                    sy = ((sy % in.h) + in.h) % in.h;
                } else if (sy < 0 || sy >= in.h) {
                    continue;  // stays zero
                }
                const T* src = in.row(bi, ci, sy);
                for (int px = 0; px < pw; ++px) {
                    int sx = px - ow;
                    if (pad == Pad::Circular)
                        sx = ((sx % in.w) + in.w) % in.w;
                    else if (sx < 0 || sx >= in.w)
                        continue;
                    dst[px] = src[sx];
                }
            }
        }
    }

    void forward(const Tensor<T>& in, Tensor<T>& out, detail::ConvScratch<T>& s) const {
        if (in.c != cin)
            throw std::invalid_argument("conv " + name + ": expected " + std::to_string(cin) +
                                        " input channels, got " + std::to_string(in.c));
        int oh = 0, ow = 0;
        out_shape(in.h, in.w, oh, ow);
        if (out.b != in.b || out.c != cout || out.h != oh || out.w != ow)
            out = Tensor<T>(in.b, cout, oh, ow);

        if (!strided()) {
            const int pw = in.w + kw - 1;
            for (int bi = 0; bi < in.b; ++bi) {
                fill_pad(in, bi, s);
                for (int co = 0; co < cout; ++co) {
                    for (int y = 0; y < oh; ++y) {
                        T* orow = out.row(bi, co, y);
                        std::fill(orow, orow + ow, b[co]);
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int dy = 0; dy < kh; ++dy) {
                                const T* prow =
                                    s.pad.data() +
                                    (static_cast<std::size_t>(ci) * (in.h + kh - 1) + y + dy) * pw;
                                const T* wrow = wat(co, ci, dy);
                                for (int dx = 0; dx < kw; ++dx) {
                                    const T coeff = wrow[dx];
                                    const T* src = prow + dx;
                                    for (int x = 0; x < ow; ++x) orow[x] += coeff * src[x];
                                }
                            }
                        }
                        if (relu)
                            for (int x = 0; x < ow; ++x) orow[x] = orow[x] > T(0) ? orow[x] : T(0);
                    }
                }
            }
        } else {
            for (int bi = 0; bi < in.b; ++bi) {
                for (int co = 0; co < cout; ++co) {
                    for (int y = 0; y < oh; ++y) {
                        T* orow = out.row(bi, co, y);
                        std::fill(orow, orow + ow, b[co]);
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int dy = 0; dy < kh; ++dy) {
                                const T* irow = in.row(bi, ci, y * sh + dy);
                                const T* wrow = wat(co, ci, dy);
                                for (int dx = 0; dx < kw; ++dx) {
                                    const T coeff = wrow[dx];
                                    for (int x = 0; x < ow; ++x)
                                        orow[x] += coeff * irow[x * sw + dx];
                                }
                            }
                        }
                        if (relu)
                            for (int x = 0; x < ow; ++x) orow[x] = orow[x] > T(0) ? orow[x] : T(0);
                    }
                }
            }
        }
    }

    // Accumulates gw/gb and writes the input gradient. `out` is the cached
    // forward output (post-ReLU), used only for the activation mask.
    void backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& gout,
                  Tensor<T>& gin, detail::ConvScratch<T>& s) {
        if (!gin.same_shape(in)) gin = Tensor<T>(in.b, in.c, in.h, in.w);
        gin.zero();

        const Tensor<T>* g = &gout;
        Tensor<T> masked;
        if (relu) {
            masked = gout;
            for (std::size_t i = 0; i < masked.v.size(); ++i)
                if (!(out.v[i] > T(0))) masked.v[i] = T(0);
            g = &masked;
        }

        const int oh = out.h, ow = out.w;
        if (!strided()) {
            const int ph = in.h + kh - 1, pw = in.w + kw - 1;
            const int ctr_y = (kh - 1) / 2, ctr_x = (kw - 1) / 2;
            for (int bi = 0; bi < in.b; ++bi) {
                fill_pad(in, bi, s);
                s.gpad.assign(static_cast<std::size_t>(cin) * ph * pw, T(0));
                for (int co = 0; co < cout; ++co) {
                    T gbias = T(0);
                    for (int y = 0; y < oh; ++y) {
                        const T* grow = g->row(bi, co, y);
                        for (int x = 0; x < ow; ++x) gbias += grow[x];
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int dy = 0; dy < kh; ++dy) {
                                const T* prow =
                                    s.pad.data() + (static_cast<std::size_t>(ci) * ph + y + dy) * pw;
                                T* gprow =
                                    s.gpad.data() + (static_cast<std::size_t>(ci) * ph + y + dy) * pw;
                                T* gwrow = gwat(co, ci, dy);
                                const T* wrow = wat(co, ci, dy);
                                for (int dx = 0; dx < kw; ++dx) {
                                    T acc = T(0);
                                    const T coeff = wrow[dx];
                                    const T* src = prow + dx;
                                    T* gdst = gprow + dx;
                                    for (int x = 0; x < ow; ++x) {
                                        acc += grow[x] * src[x];
                                        gdst[x] += coeff * grow[x];
                                    }
                                    gwrow[dx] += acc;
                                }
                            }
                        }
                    }
                    gb[co] += gbias;
                }
                // Fold the padded gradient back onto the torus (or drop the
                // halo for zero padding).
                for (int ci = 0; ci < cin; ++ci) {
                    for (int py = 0; py < ph; ++py) {
                        int sy = py - ctr_y;
                        if (pad == Pad::Circular)
                            sy = ((sy % in.h) + in.h) % in.h;
                        else if (sy < 0 || sy >= in.h)
                            continue;
                        const T* gprow = s.gpad.data() + (static_cast<std::size_t>(ci) * ph + py) * pw;
                        T* grow = gin.row(bi, ci, sy);
                        for (int px = 0; px < pw; ++px) {
                            int sx = px - ctr_x;
                            if (pad == Pad::Circular)
                                sx = ((sx % in.w) + in.w) % in.w;
                            else if (sx < 0 || sx >= in.w)
                                continue;
                            grow[sx] += gprow[px];
                        }
                    }
                }
            }
        } else {
            // kernel == stride: every input cell feeds exactly one output.
            for (int bi = 0; bi < in.b; ++bi) {
                for (int co = 0; co < cout; ++co) {
                    T gbias = T(0);
                    for (int y = 0; y < oh; ++y) {
                        const T* grow = g->row(bi, co, y);
                        for (int x = 0; x < ow; ++x) gbias += grow[x];
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int dy = 0; dy < kh; ++dy) {
                                const T* irow = in.row(bi, ci, y * sh + dy);
                                T* girow = gin.row(bi, ci, y * sh + dy);
                                T* gwrow = gwat(co, ci, dy);
                                const T* wrow = wat(co, ci, dy);
                                for (int dx = 0; dx < kw; ++dx) {
                                    T acc = T(0);
                                    const T coeff = wrow[dx];
                                    for (int x = 0; x < ow; ++x) {
                                        acc += grow[x] * irow[x * sw + dx];
                                        girow[x * sw + dx] += coeff * grow[x];
                                    }
                                    gwrow[dx] += acc;
                                }
                            }
                        }
                    }
                    gb[co] += gbias;
                }
            }
        }
    }
};

// Nearest-neighbour integer upsampling.
template <typename T>
inline void upsample_forward(const Tensor<T>& in, int fy, int fx, Tensor<T>& out) {
    if (out.b != in.b || out.c != in.c || out.h != in.h * fy || out.w != in.w * fx)
        out = Tensor<T>(in.b, in.c, in.h * fy, in.w * fx);
    for (int bi = 0; bi < in.b; ++bi)
        for (int ci = 0; ci < in.c; ++ci)
            for (int y = 0; y < out.h; ++y) {
                const T* src = in.row(bi, ci, y / fy);
                T* dst = out.row(bi, ci, y);
                for (int x = 0; x < out.w; ++x) dst[x] = src[x / fx];
            }
}

template <typename T>
inline void upsample_backward(const Tensor<T>& gout, int fy, int fx, Tensor<T>& gin) {
    if (gin.b != gout.b || gin.c != gout.c || gin.h != gout.h / fy || gin.w != gout.w / fx)
        gin = Tensor<T>(gout.b, gout.c, gout.h / fy, gout.w / fx);
    gin.zero();
    for (int bi = 0; bi < gout.b; ++bi)
        for (int ci = 0; ci < gout.c; ++ci)
            for (int y = 0; y < gout.h; ++y) {
                const T* src = gout.row(bi, ci, y);
                T* dst = gin.row(bi, ci, y / fy);
                for (int x = 0; x < gout.w; ++x) dst[x / fx] += src[x];
            }
}

template <typename T>
struct Model {
    ModelConfig cfg;
    std::vector<Conv<T>> convs;  // all conv layers in forward order

    struct Step {
        enum Kind { ConvStep, UpStep } kind;
        int conv = -1;  // index into convs
        int fy = 1, fx = 1;
    };
    std::vector<Step> steps;

    mutable detail::ConvScratch<T> scratch;

    explicit Model(const ModelConfig& c) : cfg(c) {
        validate(c);
        const int k = c.kernel;
        const int dy = c.dims == 2 ? 2 : 1;  // vertical stride/upsample factor
        int ch = c.n_history;
        // Encoder: conv+ReLU then learned 2x downsample (linear).
        for (int i = 0; i < c.depth; ++i) {
            const int out_ch = c.base_filters << i;
            add_conv("enc" + std::to_string(i), ch, out_ch, dy == 2 ? k : 1, k, 1, 1, true, c.pad);
            add_conv("down" + std::to_string(i), out_ch, out_ch, dy, 2, dy, 2, false, c.pad);
            ch = out_ch;
        }
        // Decoder: upsample then conv+ReLU, channels shrink back to base.
        for (int i = 0; i < c.depth; ++i) {
            const int out_ch = std::max(c.base_filters, c.base_filters << (c.depth - 2 - i >= 0
                                                                               ? c.depth - 2 - i
                                                                               : 0));
            steps.push_back({Step::UpStep, -1, dy, 2});
            add_conv("dec" + std::to_string(i), ch, out_ch, dy == 2 ? k : 1, k, 1, 1, true, c.pad);
            ch = out_ch;
        }
        add_conv("head", ch, 1, 1, 1, 1, 1, false, c.pad);
        init_weights();
    }

    void add_conv(const std::string& name, int cin, int cout, int kh, int kw, int sh, int sw,
                  bool relu, Pad pad) {
        convs.emplace_back(name, cin, cout, kh, kw, sh, sw, relu, pad);
        steps.push_back({Step::ConvStep, static_cast<int>(convs.size()) - 1, 1, 1});
    }

    void init_weights() {
        for (std::size_t i = 0; i < convs.size(); ++i) {
            Xoshiro256 rng = substream(cfg.seed, "model.init", i);
            convs[i].init(rng);
        }
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& c : convs) n += c.w.size() + c.b.size();
        return n;
    }

    struct ParamView {
        std::string name;
        T* value;
        T* grad;
        std::size_t n;
    };
    std::vector<ParamView> params() {
        std::vector<ParamView> out;
        for (auto& c : convs) {
            out.push_back({c.name + ".w", c.w.data(), c.gw.data(), c.w.size()});
            out.push_back({c.name + ".b", c.b.data(), c.gb.data(), c.b.size()});
        }
        return out;
    }

    void zero_grad() {
        for (auto& c : convs) {
            std::fill(c.gw.begin(), c.gw.end(), T(0));
            std::fill(c.gb.begin(), c.gb.end(), T(0));
        }
    }

    // Activations kept alive for the backward pass. a[0] is the input,
    // a[i+1] the output of step i.
    struct Cache {
        std::vector<Tensor<T>> a;
    };

    const Tensor<T>& forward(const Tensor<T>& x, Cache& cache) const {
        require_shape(x, x.b, cfg.n_history, cfg.ny, cfg.nx, "model.forward");
        if (cache.a.size() != steps.size() + 1) cache.a.resize(steps.size() + 1);
        cache.a[0] = x;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const Step& s = steps[i];
            if (s.kind == Step::ConvStep)
                convs[s.conv].forward(cache.a[i], cache.a[i + 1], scratch);
            else
                upsample_forward(cache.a[i], s.fy, s.fx, cache.a[i + 1]);
        }
        return cache.a.back();
    }

    // Accumulates parameter gradients; returns the input gradient if asked.
    void backward(Cache& cache, const Tensor<T>& gy, Tensor<T>* ginput = nullptr) {
        Tensor<T> g = gy, gin;
        for (std::size_t i = steps.size(); i-- > 0;) {
            const Step& s = steps[i];
            if (s.kind == Step::ConvStep)
                convs[s.conv].backward(cache.a[i], cache.a[i + 1], g, gin, scratch);
            else
                upsample_backward(g, s.fy, s.fx, gin);
            std::swap(g, gin);
        }
        if (ginput) *ginput = std::move(g);
    }
};

}  // namespace ssp
