#include "parafac/convops.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <string>
#include <thread>

#include "parafac/error.hpp"
#include "parafac/multirate.hpp"
#include "parafac/simd/kernels.hpp"

namespace parafac {

std::string_view kind_name(ConvKind kind) {
  switch (kind) {
    case ConvKind::kStandard: return "standard";
    case ConvKind::kDilated: return "dilated";
    case ConvKind::kStridedDown: return "strided_down";
    case ConvKind::kStridedUp: return "strided_up";
  }
  return "unknown";
}

ConvKind parse_kind(std::string_view name) {
  if (name == "standard" || name == "group") return ConvKind::kStandard;
  if (name == "dilated") return ConvKind::kDilated;
  if (name == "strided_down") return ConvKind::kStridedDown;
  if (name == "strided_up") return ConvKind::kStridedUp;
  throw InvalidInput("unknown convolution kind '" + std::string(name) +
                     "' (expected standard, dilated, strided_down, strided_up or group)");
}

void ConvSpec::validate() const {
  if (groups < 1) throw InvalidInput("convolution needs groups >= 1");
  if (rate < 1) throw InvalidInput("convolution needs rate >= 1");
  if (kind == ConvKind::kStandard && rate != 1) {
    throw InvalidInput("standard convolution has rate 1, got " + std::to_string(rate));
  }
  if (filters.size() != static_cast<std::size_t>(groups)) {
    throw InvalidInput("convolution with " + std::to_string(groups) + " groups needs " +
                       std::to_string(groups) + " filters, got " + std::to_string(filters.size()));
  }
  for (const auto& f : filters) {
    if (f.rows() != filters.front().rows() || f.cols() != filters.front().cols()) {
      throw InvalidInput("all group filters must share one shape");
    }
  }
}

ConvSpec make_standard(MatrixSeq filter) {
  ConvSpec spec;
  spec.filters.push_back(std::move(filter));
  return spec;
}

int output_length(const ConvSpec& spec, int n) {
  spec.validate();
  if (n < 1) throw InvalidInput("signal length must be >= 1");
  int support = 0;
  for (const auto& f : spec.filters) support = std::max(support, f.length());
  const int r = spec.rate;
  auto too_long = [&](long long limit, const std::string& what) {
    if (support > limit) {
      throw InvalidInput("filter support " + std::to_string(support) + " exceeds " + what + " " +
                         std::to_string(limit));
    }
  };
  switch (spec.kind) {
    case ConvKind::kStandard:
      too_long(n, "signal length");
      return n;
    case ConvKind::kDilated:
      if (static_cast<long long>(r) * support > n) {
        throw InvalidInput("dilated support R * L = " + std::to_string(r * support) +
                           " exceeds signal length " + std::to_string(n));
      }
      return n;
    case ConvKind::kStridedDown:
      if (n % r != 0) {
        throw InvalidInput("stride " + std::to_string(r) + " does not divide signal length " +
                           std::to_string(n));
      }
      too_long(n, "signal length");
      return n / r;
    case ConvKind::kStridedUp:
      too_long(static_cast<long long>(n) * r, "up-sampled length");
      return n * r;
  }
  throw InvalidInput("unknown convolution kind");
}

namespace {

template <typename Real>
struct PackedFilter {
  int rows = 0;
  int cols = 0;
  int first = 0;
  int last = 0;
  std::vector<Real> data;

  const Real* tap(int n) const {
    return data.data() + static_cast<std::size_t>(n - first) * rows * cols;
  }
};

template <typename Real>
PackedFilter<Real> pack(const MatrixSeq& f) {
  PackedFilter<Real> p{f.rows(), f.cols(), f.first(), f.last(), {}};
  p.data.resize(static_cast<std::size_t>(f.length()) * f.rows() * f.cols());
  Real* out = p.data.data();
  for (int n = f.first(); n <= f.last(); ++n) {
    const Eigen::MatrixXd& t = f.tap(n);
    for (int r = 0; r < f.rows(); ++r)
      for (int c = 0; c < f.cols(); ++c) *out++ = static_cast<Real>(t(r, c));
  }
  return p;
}

long long wrap(long long v, long long m) { return ((v % m) + m) % m; }

}  // namespace

template <typename Real>
BasicSignal<Real> apply(const ConvSpec& spec, const BasicSignal<Real>& x) {
  const int n_in = x.length();
  const int n_out = output_length(spec, n_in);
  if (x.channels() != spec.in_channels()) {
    throw InvalidInput("convolution expects " + std::to_string(spec.in_channels()) +
                       " input channels, signal has " + std::to_string(x.channels()));
  }
  const int sg = spec.filters.front().cols();
  const int tg = spec.filters.front().rows();
  const long long r = spec.rate;
  const long long up_len = static_cast<long long>(n_in) * r;

  BasicSignal<Real> y(spec.out_channels(), n_out);
  for (int g = 0; g < spec.groups; ++g) {
    const PackedFilter<Real> f = pack<Real>(spec.filters[g]);
    for (int i = 0; i < n_out; ++i) {
      Real* yi = y.sample(i) + static_cast<std::ptrdiff_t>(g) * tg;
      for (int n = f.first; n <= f.last; ++n) {
        long long src = 0;
        switch (spec.kind) {
          case ConvKind::kStandard: src = i - n; break;
          case ConvKind::kDilated: src = i - r * n; break;
          case ConvKind::kStridedDown: src = r * i - n; break;
          case ConvKind::kStridedUp: {
            const long long p = wrap(i - n, up_len);
            if (p % r != 0) continue;
            src = p / r;
            break;
          }
        }
        const Real* xs = x.wrapped(src) + static_cast<std::ptrdiff_t>(g) * sg;
        simd::gemv_acc(f.tap(n), static_cast<std::size_t>(tg), static_cast<std::size_t>(sg),
                       static_cast<std::size_t>(sg), xs, yi);
      }
    }
  }
  return y;
}

template Signal apply<double>(const ConvSpec&, const Signal&);
template Signal32 apply<float>(const ConvSpec&, const Signal32&);

Signal conv_standard(const MatrixSeq& filter, const Signal& x) {
  return apply(make_standard(filter), x);
}

Signal conv_dilated(const MatrixSeq& filter, int rate, const Signal& x) {
  ConvSpec spec = make_standard(filter);
  spec.kind = ConvKind::kDilated;
  spec.rate = rate;
  return apply(spec, x);
}

Signal conv_strided_down(const MatrixSeq& filter, int rate, const Signal& x) {
  ConvSpec spec = make_standard(filter);
  spec.kind = ConvKind::kStridedDown;
  spec.rate = rate;
  return apply(spec, x);
}

Signal conv_strided_up(const MatrixSeq& filter, int rate, const Signal& x) {
  ConvSpec spec = make_standard(filter);
  spec.kind = ConvKind::kStridedUp;
  spec.rate = rate;
  return apply(spec, x);
}

Signal conv_group(const std::vector<MatrixSeq>& filters, const Signal& x) {
  ConvSpec spec;
  spec.groups = static_cast<int>(filters.size());
  spec.filters = filters;
  return apply(spec, x);
}

void check_feasible(const ConvDesign& d) {
  const auto s = std::to_string(d.in_channels);
  const auto t = std::to_string(d.out_channels);
  const auto r = std::to_string(d.rate);
  const auto g = std::to_string(d.groups);
  if (d.in_channels < 1 || d.out_channels < 1) throw InvalidInput("channel counts must be >= 1");
  if (d.rate < 1) throw InvalidInput("rate must be >= 1, got " + r);
  if (d.groups < 1) throw InvalidInput("groups must be >= 1, got " + g);
  if (d.lo < 0 || d.hi < 0) throw InvalidInput("degrees must be >= 0");
  if (d.kind == ConvKind::kStandard && d.rate != 1) {
    throw InvalidInput("standard convolution has rate 1; use kind dilated for R = " + r);
  }
  if (d.in_channels % d.groups != 0) {
    throw InvalidInput("violated G | S: groups " + g + " does not divide in_channels " + s);
  }
  if (d.out_channels % d.groups != 0) {
    throw InvalidInput("violated G | T: groups " + g + " does not divide out_channels " + t);
  }
  switch (d.kind) {
    case ConvKind::kStandard:
    case ConvKind::kDilated:
      if (d.in_channels != d.out_channels) {
        throw InvalidInput("violated T = S: orthogonal " + std::string(kind_name(d.kind)) +
                           " convolution needs out_channels " + t + " == in_channels " + s);
      }
      break;
    case ConvKind::kStridedDown:
      if (d.out_channels != d.rate * d.in_channels) {
        throw InvalidInput("violated T = R * S: strided_down needs out_channels " + t + " == " + r +
                           " * " + s);
      }
      break;
    case ConvKind::kStridedUp:
      if (d.in_channels != d.rate * d.out_channels) {
        throw InvalidInput("violated S = R * T: strided_up needs in_channels " + s + " == " + r +
                           " * " + t);
      }
      break;
  }
}

ConvSpec build_orthogonal(const ConvDesign& d) {
  check_feasible(d);
  const int sg = d.in_channels / d.groups;
  const int tg = d.out_channels / d.groups;
  const int rate = d.rate;

  ConvSpec spec;
  spec.kind = d.kind;
  spec.rate = d.kind == ConvKind::kStandard ? 1 : rate;
  spec.groups = d.groups;
  for (int g = 0; g < d.groups; ++g) {
    FactorSource src = d.source;
    src.seed = derive_seed(d.source.seed, 0x100 + static_cast<std::uint64_t>(g));
    switch (d.kind) {
      case ConvKind::kStandard:
      case ConvKind::kDilated:
        spec.filters.push_back(build_1d(make_factors(sg, d.lo, d.hi, src)));
        break;
      case ConvKind::kStridedDown: {
        // Reflected polyphase matrix P (T x RS, square): h[mR - r] = P[m][:, r].
        const MatrixSeq p = build_1d(make_factors(tg, d.lo, d.hi, src));
        const int first = p.first() * rate - (rate - 1);
        const int last = p.last() * rate;
        std::vector<Eigen::MatrixXd> taps(static_cast<std::size_t>(last - first + 1),
                                          Eigen::MatrixXd::Zero(tg, sg));
        for (int m = p.first(); m <= p.last(); ++m) {
          for (int r = 0; r < rate; ++r) {
            taps[static_cast<std::size_t>(m * rate - r - first)] = p.tap(m).middleCols(r * sg, sg);
          }
        }
        spec.filters.push_back(MatrixSeq::from_offset(tg, sg, first, std::move(taps)));
        break;
      }
      case ConvKind::kStridedUp: {
        // Stacked polyphase matrix P (RT x S, square): h[mR + r] = P[m][r, :].
        const MatrixSeq p = build_1d(make_factors(sg, d.lo, d.hi, src));
        const int first = p.first() * rate;
        const int last = p.last() * rate + rate - 1;
        std::vector<Eigen::MatrixXd> taps(static_cast<std::size_t>(last - first + 1),
                                          Eigen::MatrixXd::Zero(tg, sg));
        for (int m = p.first(); m <= p.last(); ++m) {
          for (int r = 0; r < rate; ++r) {
            taps[static_cast<std::size_t>(m * rate + r - first)] = p.tap(m).middleRows(r * tg, tg);
          }
        }
        spec.filters.push_back(MatrixSeq::from_offset(tg, sg, first, std::move(taps)));
        break;
      }
    }
  }
  return spec;
}

MatrixSeq transfer_matrix(const ConvSpec& spec, int group) {
  spec.validate();
  const MatrixSeq& f = spec.filters.at(static_cast<std::size_t>(group));
  switch (spec.kind) {
    case ConvKind::kStandard: return f;
    case ConvKind::kDilated: return upsample(f, spec.rate);
    case ConvKind::kStridedDown: return polyphase_matrix(f, spec.rate, PolyphaseFlavor::kReflected);
    case ConvKind::kStridedUp: return polyphase_matrix(f, spec.rate, PolyphaseFlavor::kStacked);
  }
  throw InvalidInput("unknown convolution kind");
}

double spectral_residual(const ConvSpec& spec) {
  double worst = 0.0;
  for (int g = 0; g < spec.groups; ++g) {
    worst = std::max(worst, is_paraunitary(transfer_matrix(spec, g)).residual);
  }
  return worst;
}

CirculantOracle circulant_oracle(const ConvSpec& spec, int n) {
  const int n_out = output_length(spec, n);
  const long long s = spec.in_channels();
  const long long t = spec.out_channels();
  if (static_cast<long long>(n) * s > kOracleMaxDim) {
    throw ResourceError("circulant oracle: N * S = " + std::to_string(n * s) +
                        " exceeds the limit " + std::to_string(kOracleMaxDim));
  }
  const int sg = spec.filters.front().cols();
  const int tg = spec.filters.front().rows();
  const long long r = spec.rate;

  // Block (i, j) collects every tap k whose index relation links output i to input j.
  auto links = [&](long long i, long long j, long long k) {
    switch (spec.kind) {
      case ConvKind::kStandard: return wrap(i - k - j, n) == 0;
      case ConvKind::kDilated: return wrap(i - r * k - j, n) == 0;
      case ConvKind::kStridedDown: return wrap(r * i - k - j, n) == 0;
      case ConvKind::kStridedUp: return wrap(i - k - j * r, n * r) == 0;
    }
    return false;
  };

  CirculantOracle out;
  out.matrix = Eigen::MatrixXd::Zero(n_out * t, n * s);
  for (int g = 0; g < spec.groups; ++g) {
    const MatrixSeq& f = spec.filters[g];
    for (int i = 0; i < n_out; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = f.first(); k <= f.last(); ++k) {
          if (!links(i, j, k)) continue;
          out.matrix.block(i * t + g * tg, j * s + g * sg, tg, sg) += f.tap(k);
        }
      }
    }
  }
  const Eigen::MatrixXd gram = out.matrix.transpose() * out.matrix;
  out.residual = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  return out;
}

std::string_view dtype_name(DType dtype) { return dtype == DType::kF32 ? "f32" : "f64"; }

DType parse_dtype(std::string_view name) {
  if (name == "f64") return DType::kF64;
  if (name == "f32") return DType::kF32;
  throw InvalidInput("unknown dtype '" + std::string(name) + "' (expected f32 or f64)");
}

double dtype_tolerance(DType dtype) { return dtype == DType::kF32 ? kOrthoTolF32 : kOrthoTolF64; }

void DeviationStats::add(double dev) {
  ++count_;
  const double delta = dev - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (dev - mean_);
  sum_abs_ += std::abs(dev);
  max_abs_ = std::max(max_abs_, std::abs(dev));
}

void DeviationStats::merge(const DeviationStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double total = static_cast<double>(count_ + other.count_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.count_) / total;
  m2_ += other.m2_ + delta * delta * static_cast<double>(count_) * other.count_ / total;
  count_ += other.count_;
  sum_abs_ += other.sum_abs_;
  max_abs_ = std::max(max_abs_, other.max_abs_);
}

double DeviationStats::stddev() const {
  return count_ < 2 ? 0.0 : std::sqrt(m2_ / static_cast<double>(count_ - 1));
}

namespace {

double trial_deviation(const ConvSpec& spec, const VerifyOptions& opt, int trial) {
  std::mt19937_64 rng(derive_seed(opt.seed, static_cast<std::uint64_t>(trial)));
  const Signal x = gaussian_signal(spec.in_channels(), opt.length, rng);
  if (opt.dtype == DType::kF32) {
    const Signal32 x32 = x.cast<float>();
    const Signal32 y32 = apply(spec, x32);
    return y32.norm() / x32.norm() - 1.0;
  }
  const Signal y = apply(spec, x);
  return y.norm() / x.norm() - 1.0;
}

}  // namespace

OrthoReport verify_orthogonality(const ConvSpec& spec, const VerifyOptions& opt) {
  if (opt.trials < 1) throw InvalidInput("verify needs trials >= 1");
  output_length(spec, opt.length);

  // Fixed chunking keeps the merge order, and so the result, independent of
  // how many threads actually run.
  constexpr int kChunks = 4;
  std::vector<DeviationStats> parts(kChunks);
  auto run_chunk = [&](int c) {
    for (int trial = c; trial < opt.trials; trial += kChunks) {
      parts[c].add(trial_deviation(spec, opt, trial));
    }
  };
  if (std::thread::hardware_concurrency() > 1 && opt.trials >= kChunks) {
    std::vector<std::future<void>> jobs;
    for (int c = 0; c < kChunks; ++c) jobs.push_back(std::async(std::launch::async, run_chunk, c));
    for (auto& j : jobs) j.get();
  } else {
    for (int c = 0; c < kChunks; ++c) run_chunk(c);
  }
  DeviationStats stats;
  for (const auto& p : parts) stats.merge(p);

  OrthoReport rep;
  rep.kind = spec.kind;
  rep.rate = spec.rate;
  rep.groups = spec.groups;
  rep.dtype = opt.dtype;
  rep.in_channels = spec.in_channels();
  rep.out_channels = spec.out_channels();
  rep.length = opt.length;
  rep.trials = opt.trials;
  rep.seed = opt.seed;
  rep.ratio_dev_mean = stats.mean();
  rep.ratio_dev_std = stats.stddev();
  rep.mean_abs_dev = stats.mean_abs();
  rep.max_abs_dev = stats.max_abs();
  rep.spectral_residual = spectral_residual(spec);
  if (opt.with_oracle) rep.oracle_residual = circulant_oracle(spec, opt.length).residual;
  rep.tolerance = dtype_tolerance(opt.dtype);
  rep.orthogonal = rep.max_abs_dev <= rep.tolerance && rep.spectral_residual <= rep.tolerance &&
                   (!rep.oracle_residual || *rep.oracle_residual <= rep.tolerance);
  return rep;
}

MatrixSeq svcm_project(const MatrixSeq& filter, int n_freq, bool mask_to_support) {
  if (n_freq < filter.length()) {
    throw InvalidInput("svcm: grid of " + std::to_string(n_freq) +
                       " points is shorter than the filter support " +
                       std::to_string(filter.length()));
  }
  const FreqGrid grid = dft_grid(filter, n_freq);
  std::vector<Eigen::MatrixXcd> clipped;
  clipped.reserve(grid.values.size());
  for (const auto& h : grid.values) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    clipped.emplace_back(svd.matrixU() * svd.matrixV().adjoint());
  }

  const int first = filter.first();
  const int last = mask_to_support ? filter.last() : first + n_freq - 1;
  std::vector<Eigen::MatrixXd> taps;
  taps.reserve(static_cast<std::size_t>(last - first + 1));
  for (int n = first; n <= last; ++n) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(filter.rows(), filter.cols());
    for (int k = 0; k < n_freq; ++k) {
      const long long idx = wrap(static_cast<long long>(k) * n, n_freq);
      const double w = 2.0 * M_PI * static_cast<double>(idx) / n_freq;
      acc += clipped[k] * Complex(std::cos(w), std::sin(w));
    }
    taps.emplace_back(acc.real() / n_freq);
  }
  return MatrixSeq::from_offset(filter.rows(), filter.cols(), first, std::move(taps));
}

MatrixSeq rko_project(const MatrixSeq& filter) {
  const int t = filter.rows();
  const int s = filter.cols();
  const int k = filter.length();
  Eigen::MatrixXd wide(t, s * k);
  for (int n = filter.first(); n <= filter.last(); ++n) {
    wide.middleCols((n - filter.first()) * s, s) = filter.tap(n);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(wide, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd polar = svd.matrixU() * svd.matrixV().transpose();
  std::vector<Eigen::MatrixXd> taps;
  for (int j = 0; j < k; ++j) taps.emplace_back(polar.middleCols(j * s, s));
  return MatrixSeq::from_offset(t, s, filter.first(), std::move(taps));
}

MatrixSeq gaussian_filter(int rows, int cols, int lo, int hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::MatrixXd> taps;
  for (int n = -lo; n <= hi; ++n) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    taps.push_back(std::move(m));
  }
  return MatrixSeq(rows, cols, lo, hi, std::move(taps));
}

}  // namespace parafac
