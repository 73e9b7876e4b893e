#include "wforge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wforge/error.hpp"

namespace wforge {

std::string to_string(BoundaryMode mode) {
  return mode == BoundaryMode::periodic ? "periodic" : "open";
}

BoundaryMode boundary_mode_from_string(const std::string& s) {
  if (s == "periodic") return BoundaryMode::periodic;
  if (s == "open") return BoundaryMode::open;
  throw ConfigError("unknown boundary mode '" + s + "'");
}

ComplexGrid::ComplexGrid(int nx, int ny, double x0, double y0, double lx,
                         double ly, BoundaryMode mode)
    : nx_(nx), ny_(ny), x0_(x0), y0_(y0), lx_(lx), ly_(ly), mode_(mode) {
  if (nx < 4 || ny < 4)
    throw std::invalid_argument("ComplexGrid needs nx >= 4 and ny >= 4");
  if (!(lx > 0.0) || !(ly > 0.0))
    throw std::invalid_argument("ComplexGrid needs positive extents");
}

double ComplexGrid::diameter() const { return std::hypot(lx_, ly_); }

ScalarField::ScalarField(ComplexGrid grid, FieldKind kind)
    : grid_(grid), values_(grid.size()), kind_(kind) {}

ScalarField::ScalarField(ComplexGrid grid, std::vector<cplx> values,
                         FieldKind kind)
    : grid_(grid), values_(std::move(values)), kind_(kind) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument("ScalarField: value count does not match grid");
  if (kind_ == FieldKind::real) {
    for (const auto& v : values_)
      if (v.imag() != 0.0)
        throw std::invalid_argument(
            "ScalarField: real kind with nonzero imaginary part");
  }
}

ScalarField ScalarField::constant(const ComplexGrid& grid, cplx value) {
  return ScalarField(grid, std::vector<cplx>(grid.size(), value),
                     value.imag() == 0.0 ? FieldKind::real : FieldKind::complex);
}

ScalarField ScalarField::sample(const ComplexGrid& grid,
                                const std::function<cplx(cplx)>& f) {
  std::vector<cplx> v(grid.size());
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) v[grid.index(i, j)] = f(grid.z(i, j));
  return ScalarField(grid, std::move(v));
}

ScalarField ScalarField::real_part(const ScalarField& f) {
  std::vector<cplx> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f[k].real();
  return ScalarField(f.grid(), std::move(v), FieldKind::real);
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid()))
    throw GridMismatch("fields are sampled on different grids");
}

namespace {
FieldKind combine(const ScalarField& a, const ScalarField& b) {
  return a.is_real() && b.is_real() ? FieldKind::real : FieldKind::complex;
}
}  // namespace

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  kind_ = combine(*this, o);
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  kind_ = combine(*this, o);
  return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& o) {
  require_same_grid(*this, o);
  const bool real = is_real() && o.is_real();
  for (std::size_t k = 0; k < values_.size(); ++k) {
    values_[k] *= o.values_[k];
    if (real) values_[k].imag(0.0);
  }
  kind_ = real ? FieldKind::real : FieldKind::complex;
  return *this;
}

ScalarField& ScalarField::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  if (s.imag() != 0.0) kind_ = FieldKind::complex;
  if (is_real())
    for (auto& v : values_) v.imag(0.0);
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
ScalarField operator*(cplx s, ScalarField a) { return a *= s; }
ScalarField operator*(ScalarField a, cplx s) { return a *= s; }

ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, [](cplx x, cplx y) { return x / y; });
}

ScalarField operator+(ScalarField a, cplx s) {
  auto v = a.mutable_values();
  for (auto& x : v) x += s;
  if (s.imag() != 0.0) a.as_complex();
  return a;
}

ScalarField operator-(ScalarField a) { return a *= cplx(-1.0, 0.0); }

ScalarField conj(const ScalarField& f) {
  if (f.is_real()) return f;
  return map(f, [](cplx v) { return std::conj(v); });
}

ScalarField abs2(const ScalarField& f) {
  std::vector<cplx> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::norm(f[k]);
  return ScalarField(f.grid(), std::move(v), FieldKind::real);
}

ScalarField map(const ScalarField& f, const std::function<cplx(cplx)>& fn) {
  std::vector<cplx> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(f[k]);
  return ScalarField(f.grid(), std::move(v));
}

ScalarField zip(const ScalarField& a, const ScalarField& b,
                const std::function<cplx(cplx, cplx)>& fn) {
  require_same_grid(a, b);
  std::vector<cplx> v(a.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(a[k], b[k]);
  return ScalarField(a.grid(), std::move(v));
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_imag(const ScalarField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v.imag()));
  return m;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

cplx mean(const ScalarField& f) {
  cplx s = 0.0;
  for (const auto& v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

OneForm::OneForm(ScalarField a_, ScalarField b_)
    : a(std::move(a_)), b(std::move(b_)) {
  require_same_grid(a, b);
}

}  // namespace wforge
