#pragma once

#include <cmath>
#include <cstddef>
#include <string>

namespace lomach {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Discretization of [0,T] x T^n. Space is the 2pi-periodic torus sampled on a
/// uniform collocation grid, time is a uniform non-periodic grid.
struct GridSpec {
    int n = 2;                 ///< spatial dimension, 2 or 3
    int modes_per_axis = 64;   ///< even, >= 8
    double T = 1.0;            ///< final time
    int time_steps = 32;       ///< number of uniform steps; slices = time_steps+1
    double dealias_fraction = 2.0 / 3.0;

    void validate() const;

    int slices() const { return time_steps + 1; }
    double dt() const { return T / time_steps; }
    double dx() const { return kTwoPi / modes_per_axis; }
    std::size_t points() const {
        std::size_t p = 1;
        for (int d = 0; d < n; ++d) p *= static_cast<std::size_t>(modes_per_axis);
        return p;
    }
    double cell_volume() const { return std::pow(dx(), n); }
    double domain_volume() const { return std::pow(kTwoPi, n); }

    /// Same spatial grid, restricted to times <= t_max (t_max snapped down to
    /// the time grid).
    GridSpec restricted_to(double t_max) const;

    bool same_space(const GridSpec& o) const {
        return n == o.n && modes_per_axis == o.modes_per_axis;
    }
    bool operator==(const GridSpec& o) const {
        return n == o.n && modes_per_axis == o.modes_per_axis && T == o.T &&
               time_steps == o.time_steps && dealias_fraction == o.dealias_fraction;
    }
};

}  // namespace lomach
