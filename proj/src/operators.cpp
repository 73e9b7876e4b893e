#include "wforge/operators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "spectral.hpp"
#include "wforge/error.hpp"

namespace wforge {

namespace {

using Stencil = std::array<double, 5>;

// Fornberg weights for the first derivative at node r of nodes 0..4.
Stencil fornberg_first(int r) {
  constexpr int n = 5;
  double c[n][2] = {};
  double x0 = r;
  double c1 = 1.0;
  double c4 = 0.0 - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = i - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = i - j;
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  Stencil w{};
  for (int k = 0; k < n; ++k) w[k] = c[k][1];
  return w;
}

const std::array<Stencil, 5>& stencils() {
  static const std::array<Stencil, 5> s = [] {
    std::array<Stencil, 5> out{};
    for (int r = 0; r < 5; ++r) out[r] = fornberg_first(r);
    return out;
  }();
  return s;
}

// 4th-order derivative along one axis of an open grid.
ScalarField fd_axis(const ScalarField& f, bool along_x) {
  const auto& g = f.grid();
  const int n = along_x ? g.nx() : g.ny();
  const double h = along_x ? g.hx() : g.hy();
  ScalarField out(g);
  auto vals = f.values();
  const auto& st = stencils();
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ny(); ++j) {
      const int pos = along_x ? i : j;
      const int s = std::clamp(pos - 2, 0, n - 5);
      const Stencil& w = st[pos - s];
      cplx acc = 0.0;
      for (int k = 0; k < 5; ++k) {
        const std::size_t idx = along_x ? g.index(s + k, j) : g.index(i, s + k);
        acc += w[k] * vals[idx];
      }
      out[g.index(i, j)] = acc / h;
    }
  }
  return out;
}

using Symbol = std::function<cplx(double kx, double ky)>;

ScalarField apply_symbol(const ScalarField& f, const Symbol& sym,
                         bool zero_nyquist = true) {
  const auto& g = f.grid();
  std::vector<double> ky(g.ny());
  for (int j = 0; j < g.ny(); ++j) ky[j] = detail::wavenumber(j, g.ny(), g.ly(), zero_nyquist);
  auto data = detail::spectral_pass(f.values(), g.nx(), g.ny(), [&](cplx* spec) {
    for (int i = 0; i < g.nx(); ++i) {
      const double kx = detail::wavenumber(i, g.nx(), g.lx(), zero_nyquist);
      cplx* row = spec + g.index(i, 0);
      for (int j = 0; j < g.ny(); ++j) row[j] *= sym(kx, ky[j]);
    }
  });
  return ScalarField(g, std::move(data));
}

constexpr cplx I{0.0, 1.0};

// Cumulative integral of samples g with spacing h, anchored at k0, using
// 4-point interval rules (exact for cubics).
std::vector<cplx> cumulative(const std::vector<cplx>& g, double h, int k0) {
  const int n = static_cast<int>(g.size());
  std::vector<cplx> interval(n - 1);
  for (int k = 0; k + 1 < n; ++k) {
    if (k == 0)
      interval[k] = h / 24.0 * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]);
    else if (k == n - 2)
      interval[k] = h / 24.0 * (9.0 * g[n - 1] + 19.0 * g[n - 2] -
                                5.0 * g[n - 3] + g[n - 4]);
    else
      interval[k] = h / 24.0 * (-g[k - 1] + 13.0 * g[k] + 13.0 * g[k + 1] -
                                g[k + 2]);
  }
  std::vector<cplx> F(n);
  F[k0] = 0.0;
  for (int k = k0 + 1; k < n; ++k) F[k] = F[k - 1] + interval[k - 1];
  for (int k = k0 - 1; k >= 0; --k) F[k] = F[k + 1] - interval[k];
  return F;
}

void check_base(const ComplexGrid& g, GridIndex base) {
  if (base.i < 0 || base.i >= g.nx() || base.j < 0 || base.j >= g.ny())
    throw std::out_of_range("reconstruct_from_form: base index outside grid");
}

Reconstruction reconstruct_open(const ScalarField& gx, const ScalarField& gy,
                                GridIndex base, PathOrder order) {
  const auto& g = gx.grid();
  ScalarField X(g);
  const int nx = g.nx(), ny = g.ny();
  if (order == PathOrder::row_first) {
    std::vector<cplx> row(nx);
    for (int i = 0; i < nx; ++i) row[i] = gx(i, base.j);
    auto Fx = cumulative(row, g.hx(), base.i);
    std::vector<cplx> col(ny);
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) col[j] = gy(i, j);
      auto Fy = cumulative(col, g.hy(), base.j);
      for (int j = 0; j < ny; ++j) X[g.index(i, j)] = Fx[i] + Fy[j];
    }
  } else {
    std::vector<cplx> col(ny);
    for (int j = 0; j < ny; ++j) col[j] = gy(base.i, j);
    auto Fy = cumulative(col, g.hy(), base.j);
    std::vector<cplx> row(nx);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) row[i] = gx(i, j);
      auto Fx = cumulative(row, g.hx(), base.i);
      for (int i = 0; i < nx; ++i) X[g.index(i, j)] = Fy[j] + Fx[i];
    }
  }
  return Reconstruction{std::move(X)};
}

Reconstruction reconstruct_periodic(const ScalarField& gx,
                                    const ScalarField& gy, GridIndex base) {
  const auto& g = gx.grid();
  const int nx = g.nx(), ny = g.ny();
  std::vector<cplx> hx(gx.values().begin(), gx.values().end());
  std::vector<cplx> hy(gy.values().begin(), gy.values().end());
  detail::fft_forward(hx, nx, ny);
  detail::fft_forward(hy, nx, ny);
  const double n = static_cast<double>(g.size());
  const cplx sx = hx[0] / n;
  const cplx sy = hy[0] / n;
  std::vector<cplx> q(g.size());
  for (int i = 0; i < nx; ++i) {
    const double kx = detail::wavenumber(i, nx, g.lx(), false);
    for (int j = 0; j < ny; ++j) {
      const double ky = detail::wavenumber(j, ny, g.ly(), false);
      const std::size_t k = g.index(i, j);
      if (i != 0)
        q[k] = hx[k] / (I * kx);
      else if (j != 0)
        q[k] = hy[k] / (I * ky);
    }
  }
  detail::fft_backward(q, nx, ny);
  const cplx qb = q[g.index(base.i, base.j)];
  ScalarField X(g);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const std::size_t k = g.index(i, j);
      X[k] = sx * (g.x(i) - g.x(base.i)) + sy * (g.y(j) - g.y(base.j)) +
             q[k] - qb;
    }
  Reconstruction r{std::move(X)};
  r.drift_x = sx;
  r.drift_y = sy;
  return r;
}

}  // namespace

ScalarField d_x(const ScalarField& f) {
  if (!f.grid().periodic()) return fd_axis(f, true);
  return apply_symbol(f, [](double kx, double) { return I * kx; });
}

ScalarField d_y(const ScalarField& f) {
  if (!f.grid().periodic()) return fd_axis(f, false);
  return apply_symbol(f, [](double, double ky) { return I * ky; });
}

ScalarField d_z(const ScalarField& f) {
  if (!f.grid().periodic()) {
    auto fx = fd_axis(f, true);
    auto fy = fd_axis(f, false);
    return zip(fx, fy, [](cplx a, cplx b) { return 0.5 * (a - I * b); });
  }
  return apply_symbol(f,
                      [](double kx, double ky) { return 0.5 * (I * kx + ky); });
}

ScalarField d_zbar(const ScalarField& f) {
  if (!f.grid().periodic()) {
    auto fx = fd_axis(f, true);
    auto fy = fd_axis(f, false);
    return zip(fx, fy, [](cplx a, cplx b) { return 0.5 * (a + I * b); });
  }
  return apply_symbol(f,
                      [](double kx, double ky) { return 0.5 * (I * kx - ky); });
}

ScalarField inv_dzbar(const ScalarField& f) {
  if (!f.grid().periodic())
    throw NonPeriodicGrid("inv_dzbar requires a periodic grid");
  const double m = std::abs(mean(f));
  if (m > 1e-8 * max_abs(f))
    throw NonzeroMean(m,
                      "d_zbar u = f has no periodic solution; move the mean of "
                      "f into the zero mode of the seed");
  return apply_symbol(f, [](double kx, double ky) {
    const cplx s = 0.5 * (I * kx - ky);
    return s == 0.0 ? cplx(0.0) : 1.0 / s;
  });
}

ScalarField inv_dz(const ScalarField& f) { return conj(inv_dzbar(conj(f))); }

ScalarField fourier_multiplier(const ScalarField& f,
                               const std::function<cplx(double, double)>& symbol) {
  if (!f.grid().periodic())
    throw NonPeriodicGrid("fourier_multiplier requires a periodic grid");
  return apply_symbol(f, symbol);
}

cplx quadrature(const ScalarField& f) {
  const auto& g = f.grid();
  cplx s = 0.0;
  if (g.periodic()) {
    for (const auto& v : f.values()) s += v;
    return s * g.hx() * g.hy();
  }
  for (int i = 0; i < g.nx(); ++i) {
    const double wx = (i == 0 || i == g.nx() - 1) ? 0.5 : 1.0;
    for (int j = 0; j < g.ny(); ++j) {
      const double wy = (j == 0 || j == g.ny() - 1) ? 0.5 : 1.0;
      s += wx * wy * f(i, j);
    }
  }
  return s * g.hx() * g.hy();
}

ScalarField dealias(const ScalarField& f) {
  const auto& g = f.grid();
  if (!g.periodic()) throw NonPeriodicGrid("dealias requires a periodic grid");
  auto data = detail::spectral_pass(f.values(), g.nx(), g.ny(), [&](cplx* spec) {
    for (int i = 0; i < g.nx(); ++i) {
      const bool cut_x = 3 * std::abs(detail::mode_number(i, g.nx())) > g.nx();
      for (int j = 0; j < g.ny(); ++j) {
        const bool cut_y = 3 * std::abs(detail::mode_number(j, g.ny())) > g.ny();
        if (cut_x || cut_y) spec[g.index(i, j)] = 0.0;
      }
    }
  });
  ScalarField out(g, std::move(data));
  return f.is_real() ? ScalarField::real_part(out) : out;
}

double closedness_residual(const OneForm& w) {
  auto da = d_zbar(w.a);
  auto db = d_z(w.b);
  const double num = max_abs_diff(da, db);
  const double scale =
      std::max({max_abs(da), max_abs(db),
                (max_abs(w.a) + max_abs(w.b)) / w.a.grid().diameter()});
  return scale > 0.0 ? num / scale : 0.0;
}

Reconstruction reconstruct_from_form(const OneForm& w, GridIndex base,
                                     PathOrder order) {
  const auto& g = w.a.grid();
  check_base(g, base);
  auto gx = w.a + w.b;
  auto gy = zip(w.a, w.b, [](cplx a, cplx b) { return I * (a - b); });
  Reconstruction r = g.periodic() ? reconstruct_periodic(gx, gy, base)
                                  : reconstruct_open(gx, gy, base, order);
  auto da = d_zbar(w.a);
  auto db = d_z(w.b);
  const double curl = max_abs_diff(da, db);
  const double scale = std::max(
      {max_abs(da), max_abs(db), (max_abs(w.a) + max_abs(w.b)) / g.diameter()});
  r.closedness_residual = scale > 0.0 ? curl / scale : 0.0;
  r.closedness_scale = scale;
  r.curl_max = 2.0 * curl;
  return r;
}

namespace {
ScalarField remove_drift(const ScalarField& X, cplx sx, cplx sy) {
  const auto& g = X.grid();
  ScalarField q(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const std::size_t k = g.index(i, j);
      q[k] = X[k] - sx * (g.x(i) - g.x0()) - sy * (g.y(j) - g.y0());
    }
  return q;
}
}  // namespace

ScalarField d_z_drifting(const ScalarField& X, cplx sx, cplx sy) {
  if (!X.grid().periodic() || (sx == 0.0 && sy == 0.0)) return d_z(X);
  return d_z(remove_drift(X, sx, sy)) + 0.5 * (sx - I * sy);
}

ScalarField d_zbar_drifting(const ScalarField& X, cplx sx, cplx sy) {
  if (!X.grid().periodic() || (sx == 0.0 && sy == 0.0)) return d_zbar(X);
  return d_zbar(remove_drift(X, sx, sy)) + 0.5 * (sx + I * sy);
}

}  // namespace wforge
