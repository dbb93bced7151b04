#include "parafac/multirate.hpp"

#include <algorithm>
#include <string>

#include "parafac/error.hpp"

namespace parafac {
namespace {

void require_rate(int rate) {
  if (rate < 1) throw InvalidInput("rate must be >= 1, got " + std::to_string(rate));
}

int floor_div(int a, int b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0)) ? 1 : 0); }

}  // namespace

MatrixSeq upsample(const MatrixSeq& seq, int rate) {
  require_rate(rate);
  const int first = seq.first() * rate;
  std::vector<Eigen::MatrixXd> taps(static_cast<std::size_t>((seq.length() - 1) * rate + 1),
                                    Eigen::MatrixXd::Zero(seq.rows(), seq.cols()));
  for (int n = seq.first(); n <= seq.last(); ++n) {
    taps[static_cast<std::size_t>(n * rate - first)] = seq.tap(n);
  }
  return MatrixSeq::from_offset(seq.rows(), seq.cols(), first, std::move(taps));
}

Signal upsample(const Signal& x, int rate) {
  require_rate(rate);
  Signal y(x.channels(), x.length() * rate);
  for (int n = 0; n < x.length(); ++n) {
    std::copy_n(x.sample(n), x.channels(), y.sample(n * rate));
  }
  return y;
}

MatrixSeq polyphase_component(const MatrixSeq& seq, int phase, int rate) {
  require_rate(rate);
  const int m_first = floor_div(seq.first() - phase, rate);
  const int m_last = floor_div(seq.last() - phase, rate);
  std::vector<Eigen::MatrixXd> taps;
  taps.reserve(static_cast<std::size_t>(m_last - m_first + 1));
  for (int m = m_first; m <= m_last; ++m) taps.push_back(seq.at(m * rate + phase));
  return MatrixSeq::from_offset(seq.rows(), seq.cols(), m_first, std::move(taps));
}

PolyphaseSet polyphase_split(const MatrixSeq& seq, int rate) {
  require_rate(rate);
  PolyphaseSet set;
  set.rate = rate;
  set.components.reserve(static_cast<std::size_t>(rate));
  for (int r = 0; r < rate; ++r) set.components.push_back(polyphase_component(seq, r, rate));
  return set;
}

MatrixSeq interleave(const PolyphaseSet& set) {
  require_rate(set.rate);
  if (set.components.size() != static_cast<std::size_t>(set.rate)) {
    throw InvalidInput("interleave: expected " + std::to_string(set.rate) + " components");
  }
  const int rows = set.components.front().rows();
  const int cols = set.components.front().cols();
  int first = 0;
  int last = 0;
  for (int r = 0; r < set.rate; ++r) {
    const auto& c = set.components[r];
    if (c.rows() != rows || c.cols() != cols) throw InvalidInput("interleave: component shapes differ");
    first = std::min(first, c.first() * set.rate + r);
    last = std::max(last, c.last() * set.rate + r);
  }
  std::vector<Eigen::MatrixXd> taps(static_cast<std::size_t>(last - first + 1),
                                    Eigen::MatrixXd::Zero(rows, cols));
  for (int r = 0; r < set.rate; ++r) {
    const auto& c = set.components[r];
    for (int m = c.first(); m <= c.last(); ++m) {
      taps[static_cast<std::size_t>(m * set.rate + r - first)] = c.tap(m);
    }
  }
  return MatrixSeq::from_offset(rows, cols, first, std::move(taps));
}

std::vector<Signal> polyphase_split(const Signal& x, int rate) {
  require_rate(rate);
  if (x.length() % rate != 0) {
    throw InvalidInput("polyphase_split: rate " + std::to_string(rate) +
                       " does not divide signal length " + std::to_string(x.length()));
  }
  const int len = x.length() / rate;
  std::vector<Signal> out;
  out.reserve(static_cast<std::size_t>(rate));
  for (int r = 0; r < rate; ++r) {
    Signal c(x.channels(), len);
    for (int n = 0; n < len; ++n) std::copy_n(x.sample(n * rate + r), x.channels(), c.sample(n));
    out.push_back(std::move(c));
  }
  return out;
}

Signal interleave(const std::vector<Signal>& components) {
  if (components.empty()) throw InvalidInput("interleave: no components");
  const int rate = static_cast<int>(components.size());
  const int channels = components.front().channels();
  const int len = components.front().length();
  Signal y(channels, len * rate);
  for (int r = 0; r < rate; ++r) {
    const auto& c = components[r];
    if (c.channels() != channels || c.length() != len) {
      throw InvalidInput("interleave: component shapes differ");
    }
    for (int n = 0; n < len; ++n) std::copy_n(c.sample(n), channels, y.sample(n * rate + r));
  }
  return y;
}

MatrixSeq polyphase_matrix(const MatrixSeq& filter, int rate, PolyphaseFlavor flavor) {
  require_rate(rate);
  const int t = filter.rows();
  const int s = filter.cols();
  std::vector<MatrixSeq> blocks;
  blocks.reserve(static_cast<std::size_t>(rate));
  for (int r = 0; r < rate; ++r) {
    blocks.push_back(polyphase_component(filter, flavor == PolyphaseFlavor::kStacked ? r : -r, rate));
  }
  int first = 0;
  int last = 0;
  for (const auto& b : blocks) {
    first = std::min(first, b.first());
    last = std::max(last, b.last());
  }
  const bool stacked = flavor == PolyphaseFlavor::kStacked;
  const int rows = stacked ? rate * t : t;
  const int cols = stacked ? s : rate * s;
  std::vector<Eigen::MatrixXd> taps;
  taps.reserve(static_cast<std::size_t>(last - first + 1));
  for (int m = first; m <= last; ++m) {
    Eigen::MatrixXd block(rows, cols);
    for (int r = 0; r < rate; ++r) {
      if (stacked) {
        block.middleRows(r * t, t) = blocks[r].at(m);
      } else {
        block.middleCols(r * s, s) = blocks[r].at(m);
      }
    }
    taps.push_back(std::move(block));
  }
  return MatrixSeq::from_offset(rows, cols, first, std::move(taps));
}

ParsevalResult parseval_check(const MatrixSeq& seq, int rate, int grid_size) {
  require_rate(rate);
  ParsevalResult out;
  out.spatial = energy(seq);
  const MatrixSeq poly = polyphase_matrix(seq, rate, PolyphaseFlavor::kStacked);
  out.grid_size = std::max(grid_size, 2 * poly.length() + 1);
  const FreqGrid grid = dft_grid(poly, out.grid_size);
  double acc = 0.0;
  for (const auto& v : grid.values) acc += v.squaredNorm();
  out.spectral = acc / out.grid_size;
  return out;
}

ParsevalResult parseval_check(const Signal& x, int rate, int grid_size) {
  return parseval_check(to_seq(x), rate, grid_size);
}

}  // namespace parafac
