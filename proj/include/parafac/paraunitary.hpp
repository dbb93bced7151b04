#pragma once

// Paraunitary systems assembled from orthogonal-matrix parameters.
//
// A 1D system of support [-lo, hi] is the product
//
//   H(z) = V(z; U_{-lo}) ... V(z; U_{-1}) Q V(z^{-1}; U_1) ... V(z^{-1}; U_hi)
//
// with V(z; U) = (I - U U^T) + U U^T z, Q orthogonal and every U
// column-orthogonal. Every such product is paraunitary and every finite
// paraunitary system has this form.

#include <cstdint>
#include <vector>

#include "parafac/ortho_param.hpp"
#include "parafac/polymat.hpp"

namespace parafac {

struct ParaunitaryFactors {
  int channels = 0;
  OrthoMatrix q;
  // neg_factors[l - 1] = U_{-l}, l = 1..lo (anticausal side).
  std::vector<ColumnOrtho> neg_factors;
  // pos_factors[l - 1] = U_l, l = 1..hi (causal side).
  std::vector<ColumnOrtho> pos_factors;

  int lo() const { return static_cast<int>(neg_factors.size()); }
  int hi() const { return static_cast<int>(pos_factors.size()); }
  // Throws InvalidInput on inconsistent dimensions.
  void validate() const;
};

enum class VDirection {
  kAdvance,  // V(z; U): taps {0: I - UU^T, -1: UU^T}
  kDelay,    // V(z^{-1}; U): taps {0: I - UU^T, 1: UU^T}
};

MatrixSeq v_block(const ColumnOrtho& u, VDirection direction);

// The factor product, accumulated from Q outwards.
MatrixSeq build_1d(const ParaunitaryFactors& factors);

// Sets U_{-l} = Q U_l for every l, which collapses build_1d to the single tap Q.
ParaunitaryFactors init_reduced(const OrthoMatrix& q, std::vector<ColumnOrtho> pos_factors);

// Where factor parameters come from.
struct FactorSource {
  InitScheme scheme = InitScheme::kUniform;
  std::uint64_t seed = 0;
  // Columns of each U; negative selects floor(channels / 2).
  int factor_cols = -1;
  // Use the reduced form (filter equals Q). Schemes other than uniform are
  // always reduced, so that the orthogonal-matrix initialization carries over
  // to the convolution unchanged.
  bool reduced = false;
};

// Random factors of the requested support drawn from `source`. When the
// reduced form is used and lo != hi, the unmatched outer factors are empty
// (their V-blocks are the identity).
ParaunitaryFactors make_factors(int channels, int lo, int hi, const FactorSource& source);

// Independent sub-seed for stream `stream` of a base seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Separable2D {
  ParaunitaryFactors horizontal;
  ParaunitaryFactors vertical;
};

// g[m, n], m in [-lo1, hi1] along the first axis, n in [-lo2, hi2] along the second.
class Taps2D {
 public:
  Taps2D(int channels, int lo1, int hi1, int lo2, int hi2);

  int channels() const { return channels_; }
  int lo1() const { return lo1_; }
  int hi1() const { return hi1_; }
  int lo2() const { return lo2_; }
  int hi2() const { return hi2_; }

  Eigen::MatrixXd& at(int m, int n) { return taps_[index(m, n)]; }
  const Eigen::MatrixXd& at(int m, int n) const { return taps_[index(m, n)]; }

  // sum_{m,n} g[m, n] z1^{-m} z2^{-n}
  Eigen::MatrixXcd eval(Complex z1, Complex z2) const;

 private:
  std::size_t index(int m, int n) const {
    return static_cast<std::size_t>((m + lo1_) * (lo2_ + hi2_ + 1) + (n + lo2_));
  }

  int channels_;
  int lo1_, hi1_, lo2_, hi2_;
  std::vector<Eigen::MatrixXd> taps_;
};

// H(z1, z2) = H1(z1) H2(z2), realized as g[m, n] = h1[m] h2[n].
Taps2D build_2d(const Separable2D& sep);

// max over a k1 x k2 frequency grid of ||H^H H - I||_max.
ParaunitaryCheck is_paraunitary_2d(const Taps2D& taps, int k1 = 16, int k2 = 16,
                                   double tol = 1e-12);

}  // namespace parafac
