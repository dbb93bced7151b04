#pragma once

// Maps unconstrained parameters to orthogonal and column-orthogonal matrices.
//
// The exponential map over skew-symmetric matrices is the primary route: it
// reaches every rotation and, composed with a column selection, every point of
// the Stiefel manifold. Cayley and Björck are kept for comparison.

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>
#include <vector>

namespace parafac {

inline constexpr double kOrthoTolF64 = 1e-12;
inline constexpr double kOrthoTolF32 = 1e-5;

// Strict upper triangle of a skew-symmetric matrix, row-major.
class SkewParams {
 public:
  SkewParams() = default;
  SkewParams(int dim, std::vector<double> coeffs);
  static SkewParams zero(int dim);
  // Inverse of materialize(); only the strict upper triangle of a is read.
  static SkewParams from_matrix(const Eigen::MatrixXd& a);

  int dim() const { return dim_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  static std::size_t count(int dim) { return static_cast<std::size_t>(dim) * (dim - 1) / 2; }

  // A with A^T = -A exactly.
  Eigen::MatrixXd materialize() const;

 private:
  int dim_ = 0;
  std::vector<double> coeffs_;
};

class OrthoMatrix {
 public:
  OrthoMatrix() = default;
  // Throws InvalidInput if ||Q^T Q - I||_max exceeds tol.
  explicit OrthoMatrix(Eigen::MatrixXd q, double tol = kOrthoTolF64);
  static OrthoMatrix identity(int dim);

  int dim() const { return static_cast<int>(q_.rows()); }
  const Eigen::MatrixXd& matrix() const { return q_; }

 private:
  Eigen::MatrixXd q_;
};

class ColumnOrtho {
 public:
  ColumnOrtho() = default;
  explicit ColumnOrtho(Eigen::MatrixXd u, double tol = kOrthoTolF64);
  static ColumnOrtho empty(int rows);

  int rows() const { return static_cast<int>(u_.rows()); }
  int cols() const { return static_cast<int>(u_.cols()); }
  const Eigen::MatrixXd& matrix() const { return u_; }
  // U U^T; the zero matrix when cols() == 0.
  Eigen::MatrixXd projector() const;

 private:
  Eigen::MatrixXd u_;
};

// max_ij |(Q^T Q - I)_ij|
double orthogonality_defect(const Eigen::MatrixXd& q);

// exp(A) by scaling and squaring around a diagonal Pade approximant, followed
// by one Newton-Schulz step that removes the rounding defect.
OrthoMatrix exp_skew(const SkewParams& params);
// Raw exponential of an arbitrary square matrix (same algorithm, no checks on
// the result). Exposed for the tests and for callers with non-skew inputs.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// (I - A)(I + A)^{-1}. Throws SingularMatrix when I + A is numerically singular.
OrthoMatrix cayley(const SkewParams& params);

struct BjorckTrace {
  // ||P_k||_max for each completed step.
  std::vector<double> defects;
};

// Björck orthogonalization, U_{k+1} = U_k * sum_{j<=order} c_j P_k^j with
// P_k = I - U_k^T U_k and c_j the binomial series of (1 - P)^{-1/2}. Inputs
// with a spectral norm bound above one are scaled into the unit ball first.
OrthoMatrix bjorck(const Eigen::MatrixXd& initial, int steps, int order = 1,
                   BjorckTrace* trace = nullptr);

// First `cols` columns of exp_skew(params).
ColumnOrtho column_ortho(const SkewParams& params, int cols);

enum class InitScheme { kIdentity, kPermutation, kUniform, kTorus };

InitScheme parse_init_scheme(std::string_view name);
std::string_view init_scheme_name(InitScheme scheme);

OrthoMatrix init_scheme(InitScheme scheme, int dim, std::uint64_t seed);
OrthoMatrix init_scheme(std::string_view name, int dim, std::uint64_t seed);

// Coefficients uniform in [-pi, pi], the source used by the uniform scheme.
SkewParams uniform_skew(int dim, std::uint64_t seed);

}  // namespace parafac
