#pragma once

// Circular 1D convolutions (standard, dilated, strided, transposed-strided,
// grouped), their orthogonal constructions from paraunitary systems, and the
// checks used to verify them.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parafac/paraunitary.hpp"
#include "parafac/polymat.hpp"
#include "parafac/signal.hpp"

namespace parafac {

enum class ConvKind { kStandard, kDilated, kStridedDown, kStridedUp };

std::string_view kind_name(ConvKind kind);
// Accepts standard, dilated, strided_down, strided_up and group (a standard
// convolution with several groups).
ConvKind parse_kind(std::string_view name);

// One filter per group; filters[g] maps the g-th slice of S/G input channels
// to the g-th slice of T/G output channels.
struct ConvSpec {
  ConvKind kind = ConvKind::kStandard;
  int rate = 1;
  int groups = 1;
  std::vector<MatrixSeq> filters;

  int in_channels() const { return groups * filters.front().cols(); }
  int out_channels() const { return groups * filters.front().rows(); }
  // Throws InvalidInput on malformed specs.
  void validate() const;
};

ConvSpec make_standard(MatrixSeq filter);

// Output length for an input of length n; throws InvalidInput when the
// support does not fit or the rate does not divide n.
int output_length(const ConvSpec& spec, int n);

template <typename Real>
BasicSignal<Real> apply(const ConvSpec& spec, const BasicSignal<Real>& x);

// y[i] = sum_n h[n] x[i - n]
Signal conv_standard(const MatrixSeq& filter, const Signal& x);
// y[i] = sum_n h_up[n] x[i - n], h_up the filter up-sampled by `rate`
Signal conv_dilated(const MatrixSeq& filter, int rate, const Signal& x);
// y[i] = sum_n h[n] x[R i - n]; output length N / R
Signal conv_strided_down(const MatrixSeq& filter, int rate, const Signal& x);
// y[i] = sum_n h[n] x_up[i - n]; output length N R
Signal conv_strided_up(const MatrixSeq& filter, int rate, const Signal& x);
// Block-diagonal application of the per-group filters.
Signal conv_group(const std::vector<MatrixSeq>& filters, const Signal& x);

struct ConvDesign {
  ConvKind kind = ConvKind::kStandard;
  int in_channels = 1;
  int out_channels = 1;
  int rate = 1;
  int groups = 1;
  int lo = 1;
  int hi = 1;
  FactorSource source;
};

// Throws InvalidInput naming the violated relation when no orthogonal
// convolution of this shape exists in the supported family.
void check_feasible(const ConvDesign& design);

// Orthogonal convolution of the requested shape. The paraunitary system is
// built in the variant's own transfer domain: the filter itself for standard
// and dilated kinds, the reflected (down) or stacked (up) polyphase matrix
// for strided kinds, which is square of size R S or S respectively.
ConvSpec build_orthogonal(const ConvDesign& design);

// The matrix whose paraunitarity decides orthogonality of group g.
MatrixSeq transfer_matrix(const ConvSpec& spec, int group);
// max over groups of the is_paraunitary residual of transfer_matrix.
double spectral_residual(const ConvSpec& spec);

inline constexpr long long kOracleMaxDim = 4096;

struct CirculantOracle {
  Eigen::MatrixXd matrix;  // (out_len T) x (N S), sample-major like Signal
  double residual = 0.0;   // ||C^T C - I||_max
};

// Dense operator assembled entry by entry from the convolution definitions.
// Throws ResourceError when N S exceeds kOracleMaxDim.
CirculantOracle circulant_oracle(const ConvSpec& spec, int n);

enum class DType { kF64, kF32 };
std::string_view dtype_name(DType dtype);
DType parse_dtype(std::string_view name);
double dtype_tolerance(DType dtype);

// Streaming mean/variance of ratio - 1; merge() makes aggregation order-free.
class DeviationStats {
 public:
  void add(double dev);
  void merge(const DeviationStats& other);

  long long count() const { return count_; }
  double mean() const { return mean_; }
  // Sample standard deviation (0 for fewer than two values).
  double stddev() const;
  double mean_abs() const { return count_ ? sum_abs_ / count_ : 0.0; }
  double max_abs() const { return max_abs_; }

 private:
  long long count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double sum_abs_ = 0.0;
  double max_abs_ = 0.0;
};

struct OrthoReport {
  ConvKind kind = ConvKind::kStandard;
  int rate = 1;
  int groups = 1;
  DType dtype = DType::kF64;
  int in_channels = 0;
  int out_channels = 0;
  int length = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  double ratio_dev_mean = 0.0;  // mean of ||Conv(x)|| / ||x|| - 1
  double ratio_dev_std = 0.0;
  double mean_abs_dev = 0.0;
  double max_abs_dev = 0.0;
  double spectral_residual = 0.0;
  std::optional<double> oracle_residual;
  double tolerance = 0.0;
  bool orthogonal = false;
};

struct VerifyOptions {
  int length = 256;
  int trials = 100;
  std::uint64_t seed = 0;
  DType dtype = DType::kF64;
  bool with_oracle = false;
};

// Gaussian inputs, one independently seeded stream per trial.
OrthoReport verify_orthogonality(const ConvSpec& spec, const VerifyOptions& options);

// Singular values of H on an n_freq-point DFT grid clipped to one, then
// transformed back. With mask_to_support the result is cut to the original
// support, which in general destroys orthogonality.
MatrixSeq svcm_project(const MatrixSeq& filter, int n_freq, bool mask_to_support);

// Reshaped-kernel orthogonalization: the T x (S K) matrix [h[-lo], ..., h[hi]]
// is replaced by its polar factor. Not orthogonal as a convolution.
MatrixSeq rko_project(const MatrixSeq& filter);

// Filter with standard Gaussian taps on [-lo, hi].
MatrixSeq gaussian_filter(int rows, int cols, int lo, int hi, std::uint64_t seed);

}  // namespace parafac
