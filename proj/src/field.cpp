#include "lomach/field.hpp"

#include <algorithm>
#include <cmath>

#include "lomach/errors.hpp"

namespace lomach {

double FieldData::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

void FieldData::axpy(double a, const FieldData& other) {
    if (other.data_.size() != data_.size())
        throw DimensionMismatch("axpy: field shapes differ");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * other.data_[i];
}

void FieldData::scale(double a) {
    for (double& v : data_) v *= a;
}

FieldData FieldData::restricted_to(double t_max) const {
    GridSpec g = grid_.restricted_to(t_max);
    FieldData out(g, ncomp_, name_);
    std::copy_n(data_.data(), out.data_.size(), out.data_.data());
    return out;
}

FieldData FieldData::window(int first, int last) const {
    if (first < 0 || last >= slices() || first > last)
        throw Error("window: slice range out of bounds");
    GridSpec g = grid_;
    g.time_steps = last - first;
    g.T = g.time_steps * grid_.dt();
    if (g.time_steps == 0) throw Error("window: needs at least two slices");
    FieldData out(g, ncomp_, name_);
    std::copy_n(data_.data() + offset(first, 0), out.data_.size(), out.data_.data());
    return out;
}

double FieldData::coord(std::size_t p, int d) const {
    const int N = grid_.modes_per_axis;
    std::size_t stride = 1;
    for (int a = grid_.n - 1; a > d; --a) stride *= N;
    return static_cast<double>((p / stride) % N) * grid_.dx();
}

int sym_components(int n) { return n * (n + 1) / 2; }

double max_abs_trace(const SymTensorField& s) {
    const int n = s.grid().n;
    double m = 0.0;
    for (int t = 0; t < s.slices(); ++t) {
        for (std::size_t p = 0; p < s.points(); ++p) {
            double tr = 0.0;
            for (int i = 0; i < n; ++i) tr += s.at(t, s.sym_index(i, i), p);
            m = std::max(m, std::abs(tr));
        }
    }
    return m;
}

SymTensorField outer(const VectorField& u) {
    const GridSpec& g = u.grid();
    SymTensorField s(g);
    for (int t = 0; t < g.slices(); ++t)
        for (int i = 0; i < g.n; ++i)
            for (int j = i; j < g.n; ++j) {
                auto a = u.slice(t, i);
                auto b = u.slice(t, j);
                auto dst = s.slice(t, SymTensorField::sym_index(g.n, i, j));
                for (std::size_t q = 0; q < dst.size(); ++q) dst[q] = a[q] * b[q];
            }
    return s;
}

}  // namespace lomach
