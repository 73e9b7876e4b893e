#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wforge {

using cplx = std::complex<double>;

enum class BoundaryMode { periodic, open };

std::string to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string& s);

/// Rectangular sampling of a domain of the complex plane.
///
/// Periodic grids sample a torus without the duplicated endpoint
/// (spacing lx/nx); open grids include both endpoints (spacing lx/(nx-1)).
/// Samples are stored with the y index running fastest.
class ComplexGrid {
 public:
  ComplexGrid(int nx, int ny, double x0, double y0, double lx, double ly,
              BoundaryMode mode);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  BoundaryMode mode() const { return mode_; }
  bool periodic() const { return mode_ == BoundaryMode::periodic; }

  double hx() const { return periodic() ? lx_ / nx_ : lx_ / (nx_ - 1); }
  double hy() const { return periodic() ? ly_ / ny_ : ly_ / (ny_ - 1); }
  double x(int i) const { return x0_ + i * hx(); }
  double y(int j) const { return y0_ + j * hy(); }
  cplx z(int i, int j) const { return {x(i), y(j)}; }

  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * ny_ + j;
  }
  double diameter() const;
  double area() const { return lx_ * ly_; }

  friend bool operator==(const ComplexGrid&, const ComplexGrid&) = default;

 private:
  int nx_, ny_;
  double x0_, y0_, lx_, ly_;
  BoundaryMode mode_;
};

struct GridIndex {
  int i = 0;
  int j = 0;
};

enum class FieldKind { complex, real };

/// Complex samples on a grid. A real-kind field has imaginary parts that
/// are exactly zero; constructors reject anything else.
class ScalarField {
 public:
  explicit ScalarField(ComplexGrid grid, FieldKind kind = FieldKind::complex);
  ScalarField(ComplexGrid grid, std::vector<cplx> values,
              FieldKind kind = FieldKind::complex);

  static ScalarField constant(const ComplexGrid& grid, cplx value);
  static ScalarField sample(const ComplexGrid& grid,
                            const std::function<cplx(cplx)>& f);
  /// Real part of `f` as a real-kind field.
  static ScalarField real_part(const ScalarField& f);

  const ComplexGrid& grid() const { return grid_; }
  FieldKind kind() const { return kind_; }
  bool is_real() const { return kind_ == FieldKind::real; }
  std::size_t size() const { return values_.size(); }

  std::span<const cplx> values() const { return values_; }
  std::span<cplx> mutable_values() { return values_; }
  cplx operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  cplx operator[](std::size_t k) const { return values_[k]; }
  cplx& operator[](std::size_t k) { return values_[k]; }

  /// Drop the kind back to complex (always valid).
  ScalarField& as_complex() {
    kind_ = FieldKind::complex;
    return *this;
  }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(const ScalarField& o);
  ScalarField& operator*=(cplx s);

 private:
  ComplexGrid grid_;
  std::vector<cplx> values_;
  FieldKind kind_;
};

/// Throws GridMismatch when the two fields live on different grids.
void require_same_grid(const ScalarField& a, const ScalarField& b);

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);
ScalarField operator*(cplx s, ScalarField a);
ScalarField operator*(ScalarField a, cplx s);
ScalarField operator+(ScalarField a, cplx s);
ScalarField operator-(ScalarField a);

ScalarField conj(const ScalarField& f);
ScalarField abs2(const ScalarField& f);
ScalarField map(const ScalarField& f, const std::function<cplx(cplx)>& fn);
ScalarField zip(const ScalarField& a, const ScalarField& b,
                const std::function<cplx(cplx, cplx)>& fn);

double max_abs(const ScalarField& f);
double max_imag(const ScalarField& f);
double max_abs_diff(const ScalarField& a, const ScalarField& b);
cplx mean(const ScalarField& f);

/// Coefficients of a 1-form a dz + b dz̄.
struct OneForm {
  OneForm(ScalarField a, ScalarField b);
  ScalarField a;
  ScalarField b;
};

}  // namespace wforge
