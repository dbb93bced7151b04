#include "parafac/polymat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parafac/error.hpp"

namespace parafac {
namespace {

bool negligible(const Eigen::MatrixXd& m) {
  return m.size() == 0 || m.cwiseAbs().maxCoeff() <= kTapTrimTol;
}

void require_shape(const Eigen::MatrixXd& m, int rows, int cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidInput("tap has shape " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                       std::to_string(cols));
  }
}

}  // namespace

MatrixSeq::MatrixSeq(int rows, int cols, int lo, int hi, std::vector<Eigen::MatrixXd> taps)
    : rows_(rows), cols_(cols), lo_(lo), hi_(hi), taps_(std::move(taps)) {
  if (rows < 1 || cols < 1) throw InvalidInput("matrix sequence needs rows, cols >= 1");
  if (lo < 0 || hi < 0) throw InvalidInput("matrix sequence needs lo, hi >= 0");
  if (taps_.size() != static_cast<std::size_t>(lo + hi + 1)) {
    throw InvalidInput("matrix sequence expects lo + hi + 1 = " + std::to_string(lo + hi + 1) +
                       " taps, got " + std::to_string(taps_.size()));
  }
  for (const auto& t : taps_) require_shape(t, rows, cols);

  std::size_t front = 0;
  while (lo_ > 0 && negligible(taps_[front])) {
    ++front;
    --lo_;
  }
  std::size_t back = taps_.size();
  while (hi_ > 0 && negligible(taps_[back - 1])) {
    --back;
    --hi_;
  }
  if (front > 0 || back < taps_.size()) {
    taps_ = std::vector<Eigen::MatrixXd>(taps_.begin() + static_cast<std::ptrdiff_t>(front),
                                         taps_.begin() + static_cast<std::ptrdiff_t>(back));
  }
}

MatrixSeq MatrixSeq::from_offset(int rows, int cols, int first, std::vector<Eigen::MatrixXd> taps) {
  if (taps.empty()) return MatrixSeq(rows, cols, 0, 0, {Eigen::MatrixXd::Zero(rows, cols)});
  const int last = first + static_cast<int>(taps.size()) - 1;
  const int lo = std::max(0, -first);
  const int hi = std::max(0, last);
  std::vector<Eigen::MatrixXd> full(static_cast<std::size_t>(lo + hi + 1),
                                    Eigen::MatrixXd::Zero(rows, cols));
  for (std::size_t k = 0; k < taps.size(); ++k) {
    full[static_cast<std::size_t>(first + static_cast<int>(k) + lo)] = std::move(taps[k]);
  }
  return MatrixSeq(rows, cols, lo, hi, std::move(full));
}

MatrixSeq MatrixSeq::monomial(const Eigen::MatrixXd& m, int n) {
  return from_offset(static_cast<int>(m.rows()), static_cast<int>(m.cols()), n, {m});
}

Eigen::MatrixXd MatrixSeq::at(int n) const {
  if (n < -lo_ || n > hi_) return Eigen::MatrixXd::Zero(rows_, cols_);
  return tap(n);
}

bool MatrixSeq::operator==(const MatrixSeq& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_ || lo_ != other.lo_ || hi_ != other.hi_) {
    return false;
  }
  for (std::size_t k = 0; k < taps_.size(); ++k) {
    if (taps_[k] != other.taps_[k]) return false;
  }
  return true;
}

Eigen::MatrixXcd eval_z(const MatrixSeq& seq, Complex z) {
  if (z == Complex(0.0, 0.0)) {
    if (seq.hi() > 0) throw PoleError("eval_z: z = 0 is a pole of a sequence with causal taps");
    // Only h[0] survives: z^{-n} = 0 for n < 0.
    return seq.tap(0).cast<Complex>();
  }
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(seq.rows(), seq.cols());
  for (int n = seq.first(); n <= seq.last(); ++n) {
    acc += seq.tap(n).cast<Complex>() * std::pow(z, -n);
  }
  return acc;
}

FreqGrid dft_grid(const MatrixSeq& seq, int points) {
  if (points < 1) throw InvalidInput("dft_grid needs at least one point");
  const int k_total = points;
  std::vector<Complex> twiddle(static_cast<std::size_t>(k_total));
  twiddle[0] = Complex(1.0, 0.0);
  for (int j = 1; 2 * j <= k_total; ++j) {
    const double w = 2.0 * M_PI * j / k_total;
    // The Nyquist point must come out real for the symmetry to be exact.
    twiddle[j] = 2 * j == k_total ? Complex(-1.0, 0.0) : Complex(std::cos(w), -std::sin(w));
    twiddle[k_total - j] = std::conj(twiddle[j]);
  }

  FreqGrid grid;
  grid.points = k_total;
  grid.values.assign(static_cast<std::size_t>(k_total),
                     Eigen::MatrixXcd::Zero(seq.rows(), seq.cols()));
  for (int k = 0; k < k_total; ++k) {
    auto& acc = grid.values[k];
    for (int n = seq.first(); n <= seq.last(); ++n) {
      const long long idx = ((static_cast<long long>(k) * n) % k_total + k_total) % k_total;
      acc += seq.tap(n).cast<Complex>() * twiddle[static_cast<std::size_t>(idx)];
    }
  }
  return grid;
}

MatrixSeq seq_mul(const MatrixSeq& a, const MatrixSeq& b) {
  if (a.cols() != b.rows()) {
    throw InvalidInput("seq_mul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                       std::to_string(b.rows()) + ")");
  }
  const int lo = a.lo() + b.lo();
  const int hi = a.hi() + b.hi();
  std::vector<Eigen::MatrixXd> taps(static_cast<std::size_t>(lo + hi + 1),
                                    Eigen::MatrixXd::Zero(a.rows(), b.cols()));
  for (int n = a.first(); n <= a.last(); ++n) {
    for (int m = b.first(); m <= b.last(); ++m) {
      taps[static_cast<std::size_t>(n + m + lo)].noalias() += a.tap(n) * b.tap(m);
    }
  }
  return MatrixSeq(a.rows(), b.cols(), lo, hi, std::move(taps));
}

MatrixSeq paraconjugate(const MatrixSeq& seq) {
  std::vector<Eigen::MatrixXd> taps;
  taps.reserve(seq.taps().size());
  for (int n = seq.last(); n >= seq.first(); --n) taps.emplace_back(seq.tap(n).transpose());
  return MatrixSeq(seq.cols(), seq.rows(), seq.hi(), seq.lo(), std::move(taps));
}

int min_unitarity_grid(const MatrixSeq& seq) { return 2 * (seq.lo() + seq.hi()) + 1; }

ParaunitaryCheck is_paraunitary(const MatrixSeq& seq, int grid_size, double tol) {
  const int k_total = std::max(grid_size, min_unitarity_grid(seq));
  const FreqGrid grid = dft_grid(seq, k_total);
  const Eigen::MatrixXcd ident = Eigen::MatrixXcd::Identity(seq.cols(), seq.cols());
  double residual = 0.0;
  for (const auto& h : grid.values) {
    const Eigen::MatrixXcd g = h.adjoint() * h - ident;
    residual = std::max(residual, g.cwiseAbs().maxCoeff());
  }
  return {residual <= tol, residual, k_total};
}

double tap_unitarity_residual(const MatrixSeq& seq) {
  const MatrixSeq d = seq_mul(paraconjugate(seq), seq);
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(seq.cols(), seq.cols());
  double residual = 0.0;
  for (int n = d.first(); n <= d.last(); ++n) {
    const Eigen::MatrixXd diff = n == 0 ? Eigen::MatrixXd(d.tap(n) - ident) : d.tap(n);
    residual = std::max(residual, diff.cwiseAbs().maxCoeff());
  }
  return residual;
}

double max_tap_difference(const MatrixSeq& a, const MatrixSeq& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput("max_tap_difference: shapes differ");
  }
  const int first = std::min(a.first(), b.first());
  const int last = std::max(a.last(), b.last());
  double diff = 0.0;
  for (int n = first; n <= last; ++n) {
    diff = std::max(diff, (a.at(n) - b.at(n)).cwiseAbs().maxCoeff());
  }
  return diff;
}

double energy(const MatrixSeq& seq) {
  double e = 0.0;
  for (const auto& t : seq.taps()) e += t.squaredNorm();
  return e;
}

}  // namespace parafac
