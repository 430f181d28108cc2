#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lomach/grid.hpp"

namespace lomach {

/// Collocation-space storage for a field on [0,T] x T^n. The payload is the
/// real value at each grid point, time-major, component-minor, row-major in
/// space (x1 slowest). Fields are value types; operations never mutate inputs.
class FieldData {
  public:
    FieldData() = default;
    FieldData(const GridSpec& grid, int ncomp, std::string name = {})
        : grid_(grid), ncomp_(ncomp), name_(std::move(name)),
          data_(static_cast<std::size_t>(grid.slices()) * ncomp * grid.points(), 0.0) {}

    const GridSpec& grid() const { return grid_; }
    int ncomp() const { return ncomp_; }
    const std::string& name() const { return name_; }
    void set_name(std::string s) { name_ = std::move(s); }

    std::size_t points() const { return grid_.points(); }
    int slices() const { return grid_.slices(); }

    double& at(int t, int c, std::size_t p) { return data_[offset(t, c) + p]; }
    double at(int t, int c, std::size_t p) const { return data_[offset(t, c) + p]; }

    std::span<double> slice(int t, int c) { return {data_.data() + offset(t, c), points()}; }
    std::span<const double> slice(int t, int c) const {
        return {data_.data() + offset(t, c), points()};
    }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double max_abs() const;
    /// this += a * other (same shape required)
    void axpy(double a, const FieldData& other);
    void scale(double a);

    /// Restrict to time slices [0, t_max]; spatial payload copied verbatim.
    FieldData restricted_to(double t_max) const;
    /// Restrict to slices [first, last] inclusive; the result's time origin is
    /// shifted to 0 (window views used for region-limited checks).
    FieldData window(int first, int last) const;

    /// Grid coordinate of spatial point p along axis d.
    double coord(std::size_t p, int d) const;

  private:
    std::size_t offset(int t, int c) const {
        return (static_cast<std::size_t>(t) * ncomp_ + c) * points();
    }
    GridSpec grid_;
    int ncomp_ = 0;
    std::string name_;
    std::vector<double> data_;
};

class ScalarField : public FieldData {
  public:
    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, std::string name = {})
        : FieldData(g, 1, std::move(name)) {}
    explicit ScalarField(FieldData d) : FieldData(std::move(d)) {}
};

class VectorField : public FieldData {
  public:
    VectorField() = default;
    explicit VectorField(const GridSpec& g, std::string name = {})
        : FieldData(g, g.n, std::move(name)) {}
    explicit VectorField(FieldData d) : FieldData(std::move(d)) {}
};

/// Symmetric tensor with the independent entries stored in row-major upper
/// triangle order: 2D (00,01,11), 3D (00,01,02,11,12,22).
class SymTensorField : public FieldData {
  public:
    SymTensorField() = default;
    explicit SymTensorField(const GridSpec& g, std::string name = {})
        : FieldData(g, g.n * (g.n + 1) / 2, std::move(name)) {}
    explicit SymTensorField(FieldData d) : FieldData(std::move(d)) {}

    static int sym_index(int n, int i, int j) {
        if (i > j) std::swap(i, j);
        return n == 2 ? (i == 0 ? j : 2) : (i == 0 ? j : (i == 1 ? 2 + j : 5));
    }
    int sym_index(int i, int j) const { return sym_index(grid().n, i, j); }

    bool traceless = false;  ///< when set, |trace| <= tol * max|entries| is asserted by checks
};

int sym_components(int n);

/// Max |trace| over all points and slices.
double max_abs_trace(const SymTensorField& s);

/// Pointwise symmetric outer product u (x) u.
SymTensorField outer(const VectorField& u);

}  // namespace lomach
