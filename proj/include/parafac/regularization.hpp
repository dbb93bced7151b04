#pragma once

// Orthogonality residuals of a filter for rate-R operation, in the tap domain
// and in the frequency domain. The two routes agree by Parseval's theorem.

#include "parafac/polymat.hpp"

namespace parafac {

// sum_i || sum_n h[n]^T h[n - R i] - delta[i] I_S ||_F^2
double reg_residual_spatial(const MatrixSeq& seq, int rate);

// Uniform-grid quadrature of (1/2pi) int ||H^{[R]}(e^{iw})^H H^{[R]}(e^{iw}) - I_S||_F^2 dw
// with H^{[R]} the stacked polyphase matrix. The integrand is a trigonometric
// polynomial, so any grid above its degree is exact; smaller grid_size values
// are raised to max(4 (lo + hi) + 1, 4 deg H^{[R]} + 1).
double reg_residual_spectral(const MatrixSeq& seq, int rate, int grid_size = 0);

// Row-side pair: sum_i || sum_n h[n] h[n - R i]^T - delta[i] I_T ||_F^2 ...
double reg_residual_spatial_rows(const MatrixSeq& seq, int rate);
// ... equals the quadrature of ||Ht^{[R]} Ht^{[R]}^H - I_T||_F^2 with Ht^{[R]}
// the reflected polyphase matrix.
double reg_residual_spectral_rows(const MatrixSeq& seq, int rate, int grid_size = 0);

}  // namespace parafac
