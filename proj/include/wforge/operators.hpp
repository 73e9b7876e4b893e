#pragma once

#include <functional>

#include "wforge/grid.hpp"

namespace wforge {

// Derivatives are spectral on periodic grids and 4th-order finite
// differences (one-sided near the edges) on open grids.
ScalarField d_x(const ScalarField& f);
ScalarField d_y(const ScalarField& f);
ScalarField d_z(const ScalarField& f);
ScalarField d_zbar(const ScalarField& f);

/// Solves d_zbar(u) = f on a periodic grid with mean(u) = 0.
/// Throws NonPeriodicGrid, or NonzeroMean when |mean f| > 1e-8 max|f|.
ScalarField inv_dzbar(const ScalarField& f);
/// conj(inv_dzbar(conj f)).
ScalarField inv_dz(const ScalarField& f);

/// Multiplies the Fourier coefficients by symbol(kx, ky); Nyquist modes are
/// zeroed as for the derivatives. Periodic grids only.
ScalarField fourier_multiplier(const ScalarField& f,
                               const std::function<cplx(double, double)>& symbol);

/// Integral over the grid domain: rectangle rule (periodic) or trapezoid
/// rule in both axes (open).
cplx quadrature(const ScalarField& f);

/// 2/3-rule truncation of the Fourier coefficients (periodic grids only).
ScalarField dealias(const ScalarField& f);

enum class PathOrder { row_first, column_first };

struct Reconstruction {
  ScalarField X;
  /// max|d_zbar a - d_z b| relative to the size of the form.
  double closedness_residual = 0.0;
  /// The denominator of closedness_residual.
  double closedness_scale = 0.0;
  /// max|curl| of the real 1-form components, absolute.
  double curl_max = 0.0;
  /// Linear growth per unit x and y. Zero on open grids; on periodic grids
  /// X = drift_x (x - x_b) + drift_y (y - y_b) + periodic part.
  cplx drift_x = 0.0;
  cplx drift_y = 0.0;
};

/// Integrates dX = a dz + b dz̄ with X(base) = 0.
///
/// Open grids use 4th-order cumulative quadrature along the path given by
/// `order` (row_first walks x along the base row, then y). Periodic grids
/// integrate spectrally, so the path is irrelevant there.
Reconstruction reconstruct_from_form(const OneForm& w, GridIndex base = {},
                                     PathOrder order = PathOrder::row_first);

/// max|d_zbar a - d_z b| / max(|d_zbar a|, |d_z b|, (|a| + |b|) / diam).
double closedness_residual(const OneForm& w);

/// Derivatives of a field that is periodic up to a known linear drift.
ScalarField d_z_drifting(const ScalarField& X, cplx drift_x, cplx drift_y);
ScalarField d_zbar_drifting(const ScalarField& X, cplx drift_x, cplx drift_y);

/// Caps the number of FFTW threads; 0 or negative means 1.
void set_fft_threads(int n);

}  // namespace wforge
