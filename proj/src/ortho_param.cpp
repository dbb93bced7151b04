#include "parafac/ortho_param.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "parafac/error.hpp"

namespace parafac {

SkewParams::SkewParams(int dim, std::vector<double> coeffs) : dim_(dim), coeffs_(std::move(coeffs)) {
  if (dim < 1) throw InvalidInput("skew parameters need dim >= 1, got " + std::to_string(dim));
  if (coeffs_.size() != count(dim)) {
    throw InvalidInput("skew parameters for dim " + std::to_string(dim) + " need " +
                       std::to_string(count(dim)) + " coefficients, got " +
                       std::to_string(coeffs_.size()));
  }
}

SkewParams SkewParams::zero(int dim) {
  return SkewParams(dim, std::vector<double>(count(std::max(dim, 1)), 0.0));
}

SkewParams SkewParams::from_matrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidInput("skew parameters need a square matrix");
  const int n = static_cast<int>(a.rows());
  std::vector<double> c;
  c.reserve(count(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) c.push_back(a(i, j));
  return SkewParams(n, std::move(c));
}

Eigen::MatrixXd SkewParams::materialize() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim_, dim_);
  std::size_t k = 0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = i + 1; j < dim_; ++j) {
      a(i, j) = coeffs_[k];
      a(j, i) = -coeffs_[k];
      ++k;
    }
  }
  return a;
}

double orthogonality_defect(const Eigen::MatrixXd& q) {
  if (q.cols() == 0) return 0.0;
  const Eigen::MatrixXd g = q.transpose() * q - Eigen::MatrixXd::Identity(q.cols(), q.cols());
  return g.cwiseAbs().maxCoeff();
}

OrthoMatrix::OrthoMatrix(Eigen::MatrixXd q, double tol) : q_(std::move(q)) {
  if (q_.rows() != q_.cols() || q_.rows() == 0) {
    throw InvalidInput("orthogonal matrix must be square and non-empty");
  }
  const double defect = orthogonality_defect(q_);
  if (!(defect <= tol)) {
    throw InvalidInput("matrix is not orthogonal: ||Q^T Q - I||_max = " + std::to_string(defect));
  }
}

OrthoMatrix OrthoMatrix::identity(int dim) { return OrthoMatrix(Eigen::MatrixXd::Identity(dim, dim)); }

ColumnOrtho::ColumnOrtho(Eigen::MatrixXd u, double tol) : u_(std::move(u)) {
  if (u_.rows() == 0) throw InvalidInput("column-orthogonal matrix needs at least one row");
  if (u_.cols() > u_.rows()) throw InvalidInput("column-orthogonal matrix cannot have cols > rows");
  const double defect = orthogonality_defect(u_);
  if (!(defect <= tol)) {
    throw InvalidInput("matrix is not column-orthogonal: ||U^T U - I||_max = " +
                       std::to_string(defect));
  }
}

ColumnOrtho ColumnOrtho::empty(int rows) { return ColumnOrtho(Eigen::MatrixXd(rows, 0)); }

Eigen::MatrixXd ColumnOrtho::projector() const {
  if (u_.cols() == 0) return Eigen::MatrixXd::Zero(u_.rows(), u_.rows());
  return u_ * u_.transpose();
}

namespace {

// Diagonal (9,9) Pade coefficients of exp.
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};

// Squarings are chosen so that ||A / 2^s||_1 <= this bound.
constexpr double kScaledNormBound = 0.5;

void require_finite(const Eigen::MatrixXd& a, const char* what) {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
}

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidInput("expm needs a square matrix");
  require_finite(a, "expm input");
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
  if (n == 0) return ident;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kScaledNormBound) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kScaledNormBound)));
  }
  const Eigen::MatrixXd as = std::ldexp(1.0, -squarings) * a;

  const Eigen::MatrixXd a2 = as * as;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  const Eigen::MatrixXd a8 = a4 * a4;
  const auto& b = kPade9;
  const Eigen::MatrixXd u =
      as * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  const Eigen::MatrixXd v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int s = 0; s < squarings; ++s) r = (r * r).eval();
  return r;
}

OrthoMatrix exp_skew(const SkewParams& params) {
  if (params.dim() < 1) throw InvalidInput("exp_skew needs dim >= 1");
  for (double c : params.coeffs()) {
    if (!std::isfinite(c)) throw InvalidInput("exp_skew: non-finite skew coefficient");
  }
  Eigen::MatrixXd q = expm(params.materialize());
  // Squaring leaves a defect of a few hundred ulps for large A. One
  // Newton-Schulz step towards the polar factor squares it away; the
  // paraunitary constructions rely on U U^T being idempotent to the last bits.
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(q.rows(), q.cols());
  q = (q * (1.5 * ident - 0.5 * q.transpose() * q)).eval();
  return OrthoMatrix(std::move(q));
}

OrthoMatrix cayley(const SkewParams& params) {
  if (params.dim() < 1) throw InvalidInput("cayley needs dim >= 1");
  const Eigen::MatrixXd a = params.materialize();
  require_finite(a, "cayley input");
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(ident + a);
  constexpr double kMinRcond = 1e-12;
  if (!(lu.rcond() >= kMinRcond)) {
    throw SingularMatrix("cayley: I + A is numerically singular (rcond estimate " +
                         std::to_string(lu.rcond()) + ")");
  }
  // I - A and I + A commute, so the right inverse can be applied on the left.
  return OrthoMatrix(lu.solve(ident - a));
}

OrthoMatrix bjorck(const Eigen::MatrixXd& initial, int steps, int order, BjorckTrace* trace) {
  if (initial.rows() != initial.cols() || initial.rows() == 0) {
    throw InvalidInput("bjorck needs a non-empty square matrix");
  }
  if (steps < 0) throw InvalidInput("bjorck needs steps >= 0");
  if (order < 1) throw InvalidInput("bjorck needs order >= 1");
  require_finite(initial, "bjorck input");

  const Eigen::Index n = initial.rows();
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);

  // sqrt(||U||_1 ||U||_inf) bounds the spectral norm from above.
  const double norm1 = initial.cwiseAbs().colwise().sum().maxCoeff();
  const double norm_inf = initial.cwiseAbs().rowwise().sum().maxCoeff();
  const double bound = std::sqrt(norm1 * norm_inf);
  if (bound == 0.0) throw InvalidInput("bjorck: initial matrix is zero");
  Eigen::MatrixXd u = bound > 1.0 ? Eigen::MatrixXd(initial / bound) : initial;

  // Series coefficients of (1 - P)^{-1/2}: c_j = binom(2j, j) / 4^j.
  std::vector<double> coeff(static_cast<std::size_t>(order) + 1, 1.0);
  for (int j = 1; j <= order; ++j) coeff[j] = coeff[j - 1] * (2.0 * j - 1.0) / (2.0 * j);

  // Below this the defect is rounding noise and may wobble upwards.
  const double converged = 8.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
  double previous = std::numeric_limits<double>::infinity();
  int rising = 0;
  for (int k = 0; k < steps; ++k) {
    const Eigen::MatrixXd p = ident - u.transpose() * u;
    const double defect = p.cwiseAbs().maxCoeff();
    if (trace != nullptr) trace->defects.push_back(defect);
    if (!std::isfinite(defect)) throw NonConvergence("bjorck: iteration produced non-finite values");
    if (defect <= converged) break;
    rising = defect > previous ? rising + 1 : 0;
    if (rising >= 3) {
      throw NonConvergence("bjorck: ||P_k|| increased for 3 consecutive steps");
    }
    previous = defect;

    Eigen::MatrixXd series = coeff[order] * ident;
    for (int j = order - 1; j >= 0; --j) series = (p * series + coeff[j] * ident).eval();
    u = (u * series).eval();
  }
  // Approximate by construction; the caller inspects the trace or the defect.
  return OrthoMatrix(std::move(u), std::numeric_limits<double>::infinity());
}

ColumnOrtho column_ortho(const SkewParams& params, int cols) {
  if (cols < 0 || cols > params.dim()) {
    throw InvalidInput("column_ortho: cols must lie in [0, " + std::to_string(params.dim()) +
                       "], got " + std::to_string(cols));
  }
  if (cols == 0) return ColumnOrtho::empty(params.dim());
  const OrthoMatrix q = exp_skew(params);
  return ColumnOrtho(q.matrix().leftCols(cols));
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "identity") return InitScheme::kIdentity;
  if (name == "permutation") return InitScheme::kPermutation;
  if (name == "uniform") return InitScheme::kUniform;
  if (name == "torus") return InitScheme::kTorus;
  throw InvalidInput("unknown init scheme '" + std::string(name) +
                     "' (expected identity, permutation, uniform or torus)");
}

std::string_view init_scheme_name(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::kIdentity: return "identity";
    case InitScheme::kPermutation: return "permutation";
    case InitScheme::kUniform: return "uniform";
    case InitScheme::kTorus: return "torus";
  }
  return "unknown";
}

SkewParams uniform_skew(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::vector<double> c(SkewParams::count(dim));
  for (double& v : c) v = angle(rng);
  return SkewParams(dim, std::move(c));
}

OrthoMatrix init_scheme(InitScheme scheme, int dim, std::uint64_t seed) {
  if (dim < 1) throw InvalidInput("init_scheme needs dim >= 1");
  switch (scheme) {
    case InitScheme::kIdentity:
      return OrthoMatrix::identity(dim);
    case InitScheme::kPermutation: {
      std::vector<int> perm(dim);
      std::iota(perm.begin(), perm.end(), 0);
      std::mt19937_64 rng(seed);
      std::shuffle(perm.begin(), perm.end(), rng);
      Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dim, dim);
      for (int i = 0; i < dim; ++i) p(i, perm[i]) = 1.0;
      return OrthoMatrix(std::move(p));
    }
    case InitScheme::kUniform:
      return exp_skew(uniform_skew(dim, seed));
    case InitScheme::kTorus: {
      // Block-diagonal 2x2 rotations; an odd trailing dimension is fixed at 1.
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> angle(-M_PI, M_PI);
      Eigen::MatrixXd t = Eigen::MatrixXd::Identity(dim, dim);
      for (int b = 0; b + 1 < dim; b += 2) {
        const double th = angle(rng);
        const double c = std::cos(th);
        const double s = std::sin(th);
        t(b, b) = c;
        t(b, b + 1) = -s;
        t(b + 1, b) = s;
        t(b + 1, b + 1) = c;
      }
      return OrthoMatrix(std::move(t));
    }
  }
  throw InvalidInput("unknown init scheme");
}

OrthoMatrix init_scheme(std::string_view name, int dim, std::uint64_t seed) {
  return init_scheme(parse_init_scheme(name), dim, seed);
}

}  // namespace parafac
