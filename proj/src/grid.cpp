#include "lomach/grid.hpp"

#include "lomach/errors.hpp"

namespace lomach {

void GridSpec::validate() const {
    if (n != 2 && n != 3) throw DimensionMismatch("spatial dimension must be 2 or 3");
    if (modes_per_axis < 8 || modes_per_axis % 2 != 0)
        throw Error("modes_per_axis must be even and >= 8");
    if (!(T > 0.0)) throw Error("final time must be positive");
    if (time_steps < 1) throw Error("time_steps must be positive");
    if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
        throw Error("dealias_fraction must lie in (0,1]");
}

GridSpec GridSpec::restricted_to(double t_max) const {
    if (t_max <= 0.0 || t_max > T + 1e-14 * T)
        throw Error("restricted_to: time bound outside (0,T]");
    GridSpec g = *this;
    int steps = static_cast<int>(std::floor(t_max / dt() + 1e-9));
    if (steps < 1) throw Error("restricted_to: fewer than one step remains");
    g.time_steps = steps;
    g.T = steps * dt();
    return g;
}

}  // namespace lomach
