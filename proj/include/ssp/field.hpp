#pragma once

// Field: a real signal sampled on a uniform periodic grid, 1D (n) or
// 2D (ny, nx), with physical extent per axis. The common currency between
// the simulators, the loss metrics and the model.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssp {

struct Field {
    std::vector<double> values;  // row-major, size ny*nx
    int nx = 0;
    int ny = 1;  // 1 for 1D fields
    double extent_x = 0.0;
    double extent_y = 0.0;  // unused when ny == 1
    std::optional<double> time;

    bool is_2d() const { return ny > 1; }
    std::size_t size() const { return values.size(); }

    double& at(int iy, int ix) { return values[static_cast<std::size_t>(iy) * nx + ix]; }
    double at(int iy, int ix) const { return values[static_cast<std::size_t>(iy) * nx + ix]; }
};

inline Field make_field_1d(int n, double extent) {
    if (n < 4) throw std::invalid_argument("Field: need at least 4 samples, got " + std::to_string(n));
    if (!(extent > 0.0)) throw std::invalid_argument("Field: extent must be positive");
    Field f;
    f.nx = n;
    f.ny = 1;
    f.extent_x = extent;
    f.values.assign(static_cast<std::size_t>(n), 0.0);
    return f;
}

inline Field make_field_2d(int ny, int nx, double extent_y, double extent_x) {
    if (nx < 4 || ny < 4)
        throw std::invalid_argument("Field: need at least 4 samples per axis");
    if (!(extent_x > 0.0) || !(extent_y > 0.0))
        throw std::invalid_argument("Field: extents must be positive");
    Field f;
    f.nx = nx;
    f.ny = ny;
    f.extent_x = extent_x;
    f.extent_y = extent_y;
    f.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
    return f;
}

/// Index of the first non-finite value, or -1 if all finite.
inline std::ptrdiff_t first_nonfinite(const Field& f) {
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (!std::isfinite(f.values[i])) return static_cast<std::ptrdiff_t>(i);
    return -1;
}

inline void require_finite(const Field& f, const char* who) {
    auto bad = first_nonfinite(f);
    if (bad >= 0)
        throw std::invalid_argument(std::string(who) + ": non-finite value at flat index " +
                                    std::to_string(bad));
}

inline void require_same_shape(const Field& a, const Field& b, const char* who) {
    if (a.nx != b.nx || a.ny != b.ny)
        throw std::invalid_argument(std::string(who) + ": shape mismatch (" +
                                    std::to_string(a.ny) + "x" + std::to_string(a.nx) + " vs " +
                                    std::to_string(b.ny) + "x" + std::to_string(b.nx) + ")");
}

inline double max_abs(const Field& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

/// Plain spatial l2 norm sqrt(sum v^2), no grid weighting.
inline double l2_norm(const Field& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(s);
}

/// Number of integration/sampling steps covering `duration` at spacing `dt`,
/// tolerant of duration/dt landing a hair under an integer.
inline long sim_steps(double duration, double dt) {
    return static_cast<long>(std::floor(duration / dt + 1e-9));
}

/// An ordered sequence of equally spaced frames from one simulation.
struct Trajectory {
    std::vector<Field> frames;
    double dt = 0.0;  // seconds between frames

    std::size_t size() const { return frames.size(); }
};

}  // namespace ssp
