#pragma once

// Discrete Fourier transforms on 1D/2D real fields plus the spectral
// utilities shared by the metrics and the simulators: wavenumber grids,
// Sobolev-norm quadrature and low-pass filtering.
//
// Convention: unnormalized forward DFT, 1/N inverse. The transforms are
// backed by FFTW (complex-to-complex, FFTW_ESTIMATE plans, so planning is
// deterministic). Plans are cached per shape behind a mutex; execution is
// lock-free and thread-safe.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "ssp/field.hpp"

namespace ssp {

struct Spectrum {
    std::vector<std::complex<double>> coeffs;  // row-major, full spectrum, size ny*nx
    int nx = 0;
    int ny = 1;
    double extent_x = 0.0;
    double extent_y = 0.0;

    bool is_2d() const { return ny > 1; }
    std::size_t size() const { return coeffs.size(); }

    /// k_j = 2*pi*j/extent in the standard DFT index order (fftfreq); for
    /// even n the Nyquist bin n/2 counts as negative.
    double wavenumber_x(int j) const {
        int s = 2 * j < nx ? j : j - nx;
        return 2.0 * M_PI * s / extent_x;
    }
    double wavenumber_y(int j) const {
        int s = 2 * j < ny ? j : j - ny;
        return 2.0 * M_PI * s / extent_y;
    }
    /// Per-axis wavenumber spacing; the quadrature weight is their product.
    double dk_x() const { return 2.0 * M_PI / extent_x; }
    double dk_y() const { return ny > 1 ? 2.0 * M_PI / extent_y : 1.0; }
};

namespace detail {

// FFTW planning is not thread-safe; execution on distinct buffers is.
// Plans are created with FFTW_UNALIGNED so they can run on any caller
// buffer via fftw_execute_dft.
class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    void execute(const std::complex<double>* in, std::complex<double>* out, int nx, int ny,
                 int sign) {
        fftw_plan plan = get_plan(nx, ny, sign);
        // const_cast: FFTW's API is not const-correct; out-of-place transforms
        // do not modify the input array.
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

private:
    FftPlanCache() = default;
    ~FftPlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get_plan(int nx, int ny, int sign) {
        const std::uint64_t key = (static_cast<std::uint64_t>(nx) << 32) |
                                  (static_cast<std::uint64_t>(ny) << 1) |
                                  (sign == FFTW_FORWARD ? 1u : 0u);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::vector<std::complex<double>> scratch_in(static_cast<std::size_t>(nx) * ny);
        std::vector<std::complex<double>> scratch_out(scratch_in.size());
        fftw_plan plan;
        if (ny > 1) {
            plan = fftw_plan_dft_2d(ny, nx, reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                    reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        } else {
            plan = fftw_plan_dft_1d(nx, reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                    reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::uint64_t, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized forward DFT of a real field.
inline Spectrum forward(const Field& f) {
    require_finite(f, "forward");
    std::vector<std::complex<double>> in(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) in[i] = f.values[i];

    Spectrum s;
    s.nx = f.nx;
    s.ny = f.ny;
    s.extent_x = f.extent_x;
    s.extent_y = f.extent_y;
    s.coeffs.resize(f.size());
    detail::FftPlanCache::instance().execute(in.data(), s.coeffs.data(), f.nx, f.ny,
                                             FFTW_FORWARD);
    return s;
}

/// Real part of the 1/N-normalized inverse DFT. A spectrum whose inverse
/// carries imaginary residue above 1e-9 * max|coeffs| is rejected as
/// non-Hermitian.
inline Field inverse(const Spectrum& s) {
    std::vector<std::complex<double>> out(s.size());
    detail::FftPlanCache::instance().execute(s.coeffs.data(), out.data(), s.nx, s.ny,
                                             FFTW_BACKWARD);
    const double norm = 1.0 / static_cast<double>(s.size());
    double max_coeff = 0.0;
    for (const auto& c : s.coeffs) max_coeff = std::max(max_coeff, std::abs(c));

    Field f;
    f.nx = s.nx;
    f.ny = s.ny;
    f.extent_x = s.extent_x;
    f.extent_y = s.extent_y;
    f.values.resize(s.size());
    double max_imag = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        f.values[i] = out[i].real() * norm;
        max_imag = std::max(max_imag, std::abs(out[i].imag()) * norm);
    }
    if (max_imag > 1e-9 * std::max(max_coeff, 1e-300))
        throw std::runtime_error("inverse: imaginary residue " + std::to_string(max_imag) +
                                 " exceeds tolerance; spectrum is not Hermitian");
    return f;
}

/// sqrt( sum_k |F(k)|^2 * dk ) with dk the product of per-axis wavenumber
/// spacings. By Parseval this equals c * ||field||_2 with
/// c = sqrt(N * prod(2*pi/L)) under the unnormalized-forward convention.
inline double sobolev_norm(const Spectrum& s) {
    double acc = 0.0;
    for (const auto& c : s.coeffs) acc += std::norm(c);
    return std::sqrt(acc * s.dk_x() * s.dk_y());
}

/// The Parseval constant relating sobolev_norm(forward(f)) to l2_norm(f).
inline double parseval_constant(const Field& f) {
    double c = static_cast<double>(f.size()) * 2.0 * M_PI / f.extent_x;
    if (f.is_2d()) c *= 2.0 * M_PI / f.extent_y;
    return std::sqrt(c);
}

/// Zero every coefficient whose index magnitude exceeds keep_modes on any
/// axis. Hermitian symmetry is preserved (the kept set is symmetric).
inline Spectrum lowpass(const Spectrum& s, int keep_x, int keep_y = -1) {
    if (keep_x <= 0 || (s.ny > 1 && keep_y == 0))
        throw std::invalid_argument("lowpass: keep_modes must be positive");
    if (keep_x > s.nx / 2 || (s.ny > 1 && keep_y > s.ny / 2))
        throw std::invalid_argument("lowpass: keep_modes beyond Nyquist");
    if (keep_y < 0) keep_y = s.ny > 1 ? keep_x : 0;

    Spectrum out = s;
    for (int iy = 0; iy < s.ny; ++iy) {
        int my = iy <= s.ny / 2 ? iy : s.ny - iy;
        for (int ix = 0; ix < s.nx; ++ix) {
            int mx = ix <= s.nx / 2 ? ix : s.nx - ix;
            if (mx > keep_x || (s.ny > 1 && my > keep_y))
                out.coeffs[static_cast<std::size_t>(iy) * s.nx + ix] = 0.0;
        }
    }
    return out;
}

}  // namespace ssp
