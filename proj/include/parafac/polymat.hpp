#pragma once

// Finite-support sequences of real matrices h[n], n in [-lo, hi], viewed as
// Laurent polynomials H(z) = sum_n h[n] z^{-n}.

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace parafac {

using Complex = std::complex<double>;

inline constexpr double kTapTrimTol = 1e-15;

class MatrixSeq {
 public:
  MatrixSeq() = default;
  // taps[k] holds h[k - lo]. Outer taps with every entry <= kTapTrimTol in
  // magnitude are dropped, but the support always keeps n = 0.
  MatrixSeq(int rows, int cols, int lo, int hi, std::vector<Eigen::MatrixXd> taps);
  // taps[k] holds h[first + k]; first may be any integer.
  static MatrixSeq from_offset(int rows, int cols, int first, std::vector<Eigen::MatrixXd> taps);
  static MatrixSeq monomial(const Eigen::MatrixXd& m, int n);
  static MatrixSeq delta(const Eigen::MatrixXd& m) { return monomial(m, 0); }
  static MatrixSeq identity(int dim) { return delta(Eigen::MatrixXd::Identity(dim, dim)); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int lo() const { return lo_; }
  int hi() const { return hi_; }
  int length() const { return lo_ + hi_ + 1; }
  int first() const { return -lo_; }
  int last() const { return hi_; }

  const std::vector<Eigen::MatrixXd>& taps() const { return taps_; }
  // h[n]; must lie in [-lo, hi].
  const Eigen::MatrixXd& tap(int n) const { return taps_[static_cast<std::size_t>(n + lo_)]; }
  // h[n], zero outside the support.
  Eigen::MatrixXd at(int n) const;

  bool operator==(const MatrixSeq& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int lo_ = 0;
  int hi_ = 0;
  std::vector<Eigen::MatrixXd> taps_;
};

// H on the uniform grid w_k = 2 pi k / K.
struct FreqGrid {
  int points = 0;
  std::vector<Eigen::MatrixXcd> values;
};

// sum_n h[n] z^{-n}. Throws PoleError for z = 0 when hi > 0.
Eigen::MatrixXcd eval_z(const MatrixSeq& seq, Complex z);

// Twiddle-table DFT of the taps. Conjugate symmetry H_{K-k} = conj(H_k) holds
// exactly for real taps.
FreqGrid dft_grid(const MatrixSeq& seq, int points);

// Spatial convolution of the tap sequences, i.e. the product A(z) B(z).
MatrixSeq seq_mul(const MatrixSeq& a, const MatrixSeq& b);

// g[n] = h[-n]^T, so G(z) = H(z^{-1})^T.
MatrixSeq paraconjugate(const MatrixSeq& seq);

// Smallest grid that decides unitarity of a support of this size exactly.
int min_unitarity_grid(const MatrixSeq& seq);

struct ParaunitaryCheck {
  bool paraunitary = false;
  // max_k ||H(e^{iw_k})^H H(e^{iw_k}) - I||_max
  double residual = 0.0;
  int grid_size = 0;
};

// grid_size values below min_unitarity_grid(seq) are raised to it; 0 selects it.
ParaunitaryCheck is_paraunitary(const MatrixSeq& seq, int grid_size = 0, double tol = 1e-12);

// max_n ||(paraconjugate(h) * h)[n] - delta[n] I||_max, the same test in the tap domain.
double tap_unitarity_residual(const MatrixSeq& seq);

// max_n ||a[n] - b[n]||_max over the union of both supports.
double max_tap_difference(const MatrixSeq& a, const MatrixSeq& b);

// Sum of squared Frobenius norms over all taps.
double energy(const MatrixSeq& seq);

}  // namespace parafac
