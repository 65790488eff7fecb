#pragma once

// Kuramoto-Sivashinsky integrator:  u_t = -Lap(u) - nu*Lap^2(u) - |grad u|^2/2
// on a periodic domain, 4th-order central differences in space, Heun
// (explicit trapezoid) in time, with a spectral low-pass after every step to
// keep the explicit scheme stable. Works in 1D and 2D; the viscosity nu
// controls how chaotic the dynamics are.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/field.hpp"
#include "ssp/rng.hpp"
#include "ssp/spectral.hpp"

namespace ssp {

struct KsConfig {
    int dims = 1;
    double nu = 1.0;            // viscosity; the study sweeps [0.25, 1]
    double L = 128.0;           // domain length per axis, meters
    int n = 1024;               // grid points per axis (power of two)
    double dt_sim = 0.01;       // integration step, seconds
    int save_every = 10;        // keep every k-th state -> data dt = k*dt_sim
    double duration = 200.0;    // simulated seconds
    double keep_fraction = 80.0 / 1024.0;  // low-pass cutoff as fraction of n
    std::uint64_t seed = 0;
};

inline KsConfig ks_defaults(int dims) {
    KsConfig c;
    c.dims = dims;
    c.keep_fraction = (dims == 2 ? 60.0 : 80.0) / 1024.0;
    return c;
}

inline void validate(const KsConfig& c) {
    if (c.dims != 1 && c.dims != 2) throw std::invalid_argument("ks: dims must be 1 or 2");
    if (!(c.nu > 0.0)) throw std::invalid_argument("ks: nu must be > 0");
    if (!(c.L > 0.0)) throw std::invalid_argument("ks: L must be > 0");
    if (c.n < 4 || (c.n & (c.n - 1)) != 0)
        throw std::invalid_argument("ks: n must be a power of two >= 4");
    if (!(c.dt_sim > 0.0)) throw std::invalid_argument("ks: dt_sim must be > 0");
    if (c.save_every < 1) throw std::invalid_argument("ks: save_every must be >= 1");
    if (!(c.keep_fraction > 0.0) || c.keep_fraction > 0.5)
        throw std::invalid_argument("ks: keep_fraction must be in (0, 0.5]");
    if (c.duration < 0.0) throw std::invalid_argument("ks: duration must be >= 0");
}

inline int ks_keep_modes(const KsConfig& c) {
    const int keep = static_cast<int>(std::lround(c.keep_fraction * c.n));
    return std::max(1, keep);
}

// Initial condition: superposition of the 10 longest waves with random
// amplitudes/phases (and, in 2D, random propagation directions). Exposed as
// explicit components so tests can force amplitudes.
struct KsInitComponents {
    std::vector<double> amp;    // A_i ~ U[-1, 1]
    std::vector<double> phase;  // phi_i ~ U[0, 2pi)
    std::vector<double> angle;  // direction psi_i ~ U[-pi/2, pi/2], 2D only
};

inline KsInitComponents ks_initial_components(const KsConfig& cfg) {
    Xoshiro256 rng = substream(cfg.seed, "ks.init", 0);
    KsInitComponents c;
    for (int i = 0; i < 10; ++i) {
        c.amp.push_back(rng.uniform(-1.0, 1.0));
        c.phase.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
        if (cfg.dims == 2)
            c.angle.push_back(rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2));
    }
    return c;
}

inline Field ks_initial_from_components(const KsConfig& cfg, const KsInitComponents& c) {
    validate(cfg);
    if (c.amp.size() != c.phase.size() || (cfg.dims == 2 && c.angle.size() != c.amp.size()))
        throw std::invalid_argument("ks_initial: component arrays must have equal length");
    const double tau = 2.0 * std::numbers::pi;
    if (cfg.dims == 1) {
        Field u = make_field_1d(cfg.n, cfg.L);
        for (int j = 0; j < cfg.n; ++j) {
            const double x = cfg.L * j / cfg.n;
            double s = 0.0;
            for (std::size_t i = 0; i < c.amp.size(); ++i)
                s += c.amp[i] * std::sin(tau * static_cast<double>(i + 1) / cfg.L * x + c.phase[i]);
            u.values[j] = s;
        }
        u.time = 0.0;
        return u;
    }
    Field u = make_field_2d(cfg.n, cfg.n, cfg.L, cfg.L);
    for (int jy = 0; jy < cfg.n; ++jy) {
        const double y = cfg.L * jy / cfg.n;
        for (int jx = 0; jx < cfg.n; ++jx) {
            const double x = cfg.L * jx / cfg.n;
            double s = 0.0;
            for (std::size_t i = 0; i < c.amp.size(); ++i) {
                const double proj = x * std::cos(c.angle[i]) + y * std::sin(c.angle[i]);
                s += c.amp[i] * std::sin(tau * static_cast<double>(i + 1) / cfg.L * proj +
                                         c.phase[i]);
            }
            u.values[static_cast<std::size_t>(jy) * cfg.n + jx] = s;
        }
    }
    u.time = 0.0;
    return u;
}

inline Field ks_initial(const KsConfig& cfg) {
    return ks_initial_from_components(cfg, ks_initial_components(cfg));
}

namespace detail {

// 4th-order central stencils with periodic wraparound, applied along x or y.
// d1: (-u[+2] + 8u[+1] - 8u[-1] + u[-2]) / (12h)
// d2: (-u[+2] + 16u[+1] - 30u[0] + 16u[-1] - u[-2]) / (12h^2)
inline void stencil_axis(const std::vector<double>& u, int nx, int ny, bool along_x, double h,
                         bool second, std::vector<double>& out) {
    out.resize(u.size());
    const double c1 = 1.0 / (12.0 * h);
    const double c2 = 1.0 / (12.0 * h * h);
    const int n = along_x ? nx : ny;
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            const int i = along_x ? x : y;
            const int im2 = (i - 2 + n) % n, im1 = (i - 1 + n) % n;
            const int ip1 = (i + 1) % n, ip2 = (i + 2) % n;
            auto idx = [&](int j) {
                return along_x ? static_cast<std::size_t>(y) * nx + j
                               : static_cast<std::size_t>(j) * nx + x;
            };
            const double um2 = u[idx(im2)], um1 = u[idx(im1)];
            const double u0 = u[idx(i)];
            const double up1 = u[idx(ip1)], up2 = u[idx(ip2)];
            out[static_cast<std::size_t>(y) * nx + x] =
                second ? (-up2 + 16.0 * up1 - 30.0 * u0 + 16.0 * um1 - um2) * c2
                       : (-up2 + 8.0 * up1 - 8.0 * um1 + um2) * c1;
        }
    }
}

}  // namespace detail

inline Field ks_rhs(const Field& u, const KsConfig& cfg) {
    const int nx = u.nx, ny = u.ny;
    const double hx = u.extent_x / nx;
    std::vector<double> lap(u.values.size()), tmp(u.values.size());
    detail::stencil_axis(u.values, nx, ny, true, hx, true, lap);
    if (u.is_2d()) {
        const double hy = u.extent_y / ny;
        detail::stencil_axis(u.values, nx, ny, false, hy, true, tmp);
        for (std::size_t i = 0; i < lap.size(); ++i) lap[i] += tmp[i];
    }

    std::vector<double> bih(u.values.size());
    detail::stencil_axis(lap, nx, ny, true, hx, true, bih);
    if (u.is_2d()) {
        const double hy = u.extent_y / ny;
        detail::stencil_axis(lap, nx, ny, false, hy, true, tmp);
        for (std::size_t i = 0; i < bih.size(); ++i) bih[i] += tmp[i];
    }

    std::vector<double> grad2(u.values.size());
    detail::stencil_axis(u.values, nx, ny, true, hx, false, tmp);
    for (std::size_t i = 0; i < grad2.size(); ++i) grad2[i] = tmp[i] * tmp[i];
    if (u.is_2d()) {
        const double hy = u.extent_y / ny;
        detail::stencil_axis(u.values, nx, ny, false, hy, false, tmp);
        for (std::size_t i = 0; i < grad2.size(); ++i) grad2[i] += tmp[i] * tmp[i];
    }

    Field out = u;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = -lap[i] - cfg.nu * bih[i] - 0.5 * grad2[i];
    out.time.reset();
    return out;
}

// One Heun step followed by the stabilizing low-pass. step_index is only
// used to name the failing step in the blow-up error.
inline Field ks_step(const Field& u, const KsConfig& cfg, long step_index = -1) {
    const double dt = cfg.dt_sim;
    Field k1 = ks_rhs(u, cfg);
    Field pred = u;
    for (std::size_t i = 0; i < pred.values.size(); ++i) pred.values[i] += dt * k1.values[i];
    Field k2 = ks_rhs(pred, cfg);
    Field next = u;
    for (std::size_t i = 0; i < next.values.size(); ++i)
        next.values[i] += 0.5 * dt * (k1.values[i] + k2.values[i]);

    if (first_nonfinite(next) >= 0)
        throw std::runtime_error("ks_step: solution blew up (non-finite value) at step " +
                                 (step_index >= 0 ? std::to_string(step_index) : "<unknown>"));

    const int keep = ks_keep_modes(cfg);
    const Spectrum s = lowpass(forward(next), keep, u.is_2d() ? keep : -1);
    Field filtered = inverse(s);
    filtered.time = u.time ? std::optional<double>(*u.time + dt) : std::nullopt;
    return filtered;
}

// Full trajectory: the initial state plus every save_every-th step. The
// low-pass is also applied to the initial condition so every saved frame
// satisfies the spectral cutoff.
inline Trajectory ks_simulate(const KsConfig& cfg) {
    validate(cfg);
    const long steps = sim_steps(cfg.duration, cfg.dt_sim);
    const int keep = ks_keep_modes(cfg);

    Field u = ks_initial(cfg);
    {
        const Spectrum s = lowpass(forward(u), keep, cfg.dims == 2 ? keep : -1);
        u = inverse(s);
        u.time = 0.0;
    }

    Trajectory traj;
    traj.dt = cfg.dt_sim * cfg.save_every;
    traj.frames.push_back(u);
    for (long step = 1; step <= steps; ++step) {
        try {
            u = ks_step(u, cfg, step);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(e.what()) + " (t = " +
                                     std::to_string(step * cfg.dt_sim) + " s)");
        }
        u.time = step * cfg.dt_sim;
        if (step % cfg.save_every == 0) traj.frames.push_back(u);
    }
    return traj;
}

}  // namespace ssp
