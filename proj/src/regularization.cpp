#include "parafac/regularization.hpp"

#include <algorithm>
#include <string>

#include "parafac/error.hpp"
#include "parafac/multirate.hpp"

namespace parafac {
namespace {

// sum_i || sum_n lhs(n)^op rhs(n - R i) - delta[i] I ||_F^2 with the Gram
// taken on the column side (transpose_left) or the row side.
double gram_residual_spatial(const MatrixSeq& seq, int rate, bool column_side) {
  if (rate < 1) throw InvalidInput("rate must be >= 1, got " + std::to_string(rate));
  const int dim = column_side ? seq.cols() : seq.rows();
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(dim, dim);
  const int span = seq.last() - seq.first();
  const int i_max = span / rate;
  double total = 0.0;
  for (int i = -i_max; i <= i_max; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = seq.first(); n <= seq.last(); ++n) {
      const int m = n - rate * i;
      if (m < seq.first() || m > seq.last()) continue;
      if (column_side) {
        acc.noalias() += seq.tap(n).transpose() * seq.tap(m);
      } else {
        acc.noalias() += seq.tap(n) * seq.tap(m).transpose();
      }
    }
    if (i == 0) acc -= ident;
    total += acc.squaredNorm();
  }
  return total;
}

double gram_residual_spectral(const MatrixSeq& seq, int rate, int grid_size, bool column_side) {
  if (rate < 1) throw InvalidInput("rate must be >= 1, got " + std::to_string(rate));
  const MatrixSeq poly = polyphase_matrix(
      seq, rate, column_side ? PolyphaseFlavor::kStacked : PolyphaseFlavor::kReflected);
  const int degree = poly.lo() + poly.hi();
  const int points =
      std::max({grid_size, 4 * (seq.lo() + seq.hi()) + 1, 4 * degree + 1});
  const FreqGrid grid = dft_grid(poly, points);
  const int dim = column_side ? poly.cols() : poly.rows();
  const Eigen::MatrixXcd ident = Eigen::MatrixXcd::Identity(dim, dim);
  double total = 0.0;
  for (const auto& h : grid.values) {
    const Eigen::MatrixXcd g = column_side ? Eigen::MatrixXcd(h.adjoint() * h - ident)
                                           : Eigen::MatrixXcd(h * h.adjoint() - ident);
    total += g.squaredNorm();
  }
  return total / points;
}

}  // namespace

double reg_residual_spatial(const MatrixSeq& seq, int rate) {
  return gram_residual_spatial(seq, rate, true);
}

double reg_residual_spectral(const MatrixSeq& seq, int rate, int grid_size) {
  return gram_residual_spectral(seq, rate, grid_size, true);
}

double reg_residual_spatial_rows(const MatrixSeq& seq, int rate) {
  return gram_residual_spatial(seq, rate, false);
}

double reg_residual_spectral_rows(const MatrixSeq& seq, int rate, int grid_size) {
  return gram_residual_spectral(seq, rate, grid_size, false);
}

}  // namespace parafac
