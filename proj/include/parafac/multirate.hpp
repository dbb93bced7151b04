#pragma once

// Up-sampling and polyphase decomposition of sequences and signals.

#include <vector>

#include "parafac/polymat.hpp"
#include "parafac/signal.hpp"

namespace parafac {

// x_up[n] = x[n / R] when R | n, else 0.
MatrixSeq upsample(const MatrixSeq& seq, int rate);
// Circular version: length N becomes N * R.
Signal upsample(const Signal& x, int rate);

struct PolyphaseSet {
  int rate = 1;
  // components[r][n] = x[n R + r], r = 0..R-1.
  std::vector<MatrixSeq> components;
};

// x^{[r|R]}[n] = x[n R + r] for any integer r. For r outside [0, R) this is a
// shift of a normalized component: x^{[r + kR|R]}[n] = x^{[r|R]}[n + k].
MatrixSeq polyphase_component(const MatrixSeq& seq, int phase, int rate);
PolyphaseSet polyphase_split(const MatrixSeq& seq, int rate);
// Inverse of polyphase_split.
MatrixSeq interleave(const PolyphaseSet& set);

// Circular signals split into R signals of length N / R. Requires R | N.
std::vector<Signal> polyphase_split(const Signal& x, int rate);
Signal interleave(const std::vector<Signal>& components);

enum class PolyphaseFlavor {
  // [H^{[0|R]}; ...; H^{[R-1|R]}] stacked vertically: RT x S.
  kStacked,
  // [H^{[-0|R]}, ..., H^{[-(R-1)|R]}] side by side: T x RS, with
  // H^{[-r|R]}[m] = h[m R - r].
  kReflected,
};

MatrixSeq polyphase_matrix(const MatrixSeq& filter, int rate, PolyphaseFlavor flavor);

struct ParsevalResult {
  double spatial = 0.0;   // sum_n ||x[n]||^2
  double spectral = 0.0;  // grid quadrature of (1/2pi) int ||X^{[R]}(e^{iw})||_F^2 dw
  int grid_size = 0;
};

// grid_size below 2 * support + 1 of the polyphase matrix is raised to it.
ParsevalResult parseval_check(const MatrixSeq& seq, int rate, int grid_size = 0);
ParsevalResult parseval_check(const Signal& x, int rate, int grid_size = 0);

}  // namespace parafac
