#pragma once

#include <functional>
#include <span>
#include <vector>

#include "wforge/grid.hpp"

namespace wforge::detail {

/// Unnormalized forward DFT in place (nx x ny, y fastest).
void fft_forward(std::vector<cplx>& data, int nx, int ny);
/// Inverse DFT in place, normalized by 1/(nx ny).
void fft_backward(std::vector<cplx>& data, int nx, int ny);

/// Forward transform of `in`, `edit` applied to the spectrum, inverse
/// transform (normalized) into the returned vector. Two copies in total.
std::vector<cplx> spectral_pass(std::span<const cplx> in, int nx, int ny,
                                const std::function<void(cplx*)>& edit);

/// Angular wavenumber of Fourier index `i` on `n` points over length `l`.
/// The Nyquist index maps to 0 when `zero_nyquist` is set.
double wavenumber(int i, int n, double l, bool zero_nyquist);
/// Signed integer mode number of index `i`.
int mode_number(int i, int n);

}  // namespace wforge::detail
