#pragma once

// 1-Lipschitz building blocks: GroupSort, additive and concatenative residual
// blocks over chains of orthogonal convolutions, margins and certified radii.

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "parafac/convops.hpp"
#include "parafac/signal.hpp"

namespace parafac {

// Sorts ascending within contiguous channel groups of this size, per sample.
struct GroupSort {
  int group_size = 2;
};

struct ResidualBlock;

struct Layer {
  std::variant<ConvSpec, GroupSort, std::shared_ptr<const ResidualBlock>> op;
};

using Chain = std::vector<Layer>;

struct ResidualBlock {
  enum class Kind { kAdditive, kConcatenative };

  Kind kind = Kind::kAdditive;
  // Additive: alpha f1(x) + (1 - alpha) f2(x); clamped to [0, 1] when applied.
  double alpha = 0.5;
  // Concatenative: channels [0, split) go through `first`, the rest through
  // `second`, and output channel c is channel perm[c] of the concatenation.
  int split = 0;
  std::vector<int> perm;
  Chain first;
  Chain second;
};

Layer conv_layer(ConvSpec spec);
Layer group_sort_layer(int group_size);
Layer additive_block(double alpha, Chain first, Chain second);
Layer concat_block(int split, std::vector<int> perm, Chain first, Chain second);

Signal group_sort(const Signal& x, int group_size);
Signal residual_apply(const ResidualBlock& block, const Signal& x);
Signal apply_layer(const Layer& layer, const Signal& x);
Signal apply_chain(const Chain& chain, const Signal& x);

struct MarginResult {
  double margin = 0.0;
  double certified_radius = 0.0;
  int label = 0;
};

// margin = max(0, logit_c - max_{i != c} logit_i), radius = margin / (sqrt(2) L).
MarginResult margin_and_radius(std::span<const double> logits, int label, double lipschitz);

struct ProbeOptions {
  int channels = 1;
  int length = 32;
  int trials = 1000;
  std::uint64_t seed = 0;
};

// Largest ||F(x') - F(x)|| / ||x' - x|| seen over random pairs, where
// x' = x + s d with Gaussian d and s log-uniform in [1e-3, 1].
double empirical_lipschitz(const Chain& chain, const ProbeOptions& options);

// `blocks` additive blocks on `channels` channels; each block mixes
// [conv, GroupSort] with a second conv using a random alpha. Convolutions are
// orthogonal standard convolutions of degree (1, 1).
Chain make_additive_chain(int blocks, int channels, std::uint64_t seed);

}  // namespace parafac
