#include "parafac/lipnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "parafac/error.hpp"

namespace parafac {

Layer conv_layer(ConvSpec spec) {
  spec.validate();
  return Layer{std::move(spec)};
}

Layer group_sort_layer(int group_size) {
  if (group_size < 1) throw InvalidInput("GroupSort needs group size >= 1");
  return Layer{GroupSort{group_size}};
}

Layer additive_block(double alpha, Chain first, Chain second) {
  if (!std::isfinite(alpha)) throw InvalidInput("additive block alpha must be finite");
  auto b = std::make_shared<ResidualBlock>();
  b->kind = ResidualBlock::Kind::kAdditive;
  b->alpha = alpha;
  b->first = std::move(first);
  b->second = std::move(second);
  return Layer{std::shared_ptr<const ResidualBlock>(std::move(b))};
}

Layer concat_block(int split, std::vector<int> perm, Chain first, Chain second) {
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<int>(i)) {
      throw InvalidInput("concatenative block: perm is not a permutation of 0.." +
                         std::to_string(perm.size() - 1));
    }
  }
  if (split < 1 || split >= static_cast<int>(perm.size())) {
    throw InvalidInput("concatenative block: split " + std::to_string(split) +
                       " must lie strictly inside 0.." + std::to_string(perm.size()));
  }
  auto b = std::make_shared<ResidualBlock>();
  b->kind = ResidualBlock::Kind::kConcatenative;
  b->split = split;
  b->perm = std::move(perm);
  b->first = std::move(first);
  b->second = std::move(second);
  return Layer{std::shared_ptr<const ResidualBlock>(std::move(b))};
}

Signal group_sort(const Signal& x, int group_size) {
  if (group_size < 1 || x.channels() % group_size != 0) {
    throw InvalidInput("GroupSort: group size " + std::to_string(group_size) +
                       " does not divide " + std::to_string(x.channels()) + " channels");
  }
  Signal y = x;
  for (int n = 0; n < y.length(); ++n) {
    double* s = y.sample(n);
    for (int c = 0; c < y.channels(); c += group_size) std::sort(s + c, s + c + group_size);
  }
  return y;
}

namespace {

Signal slice_channels(const Signal& x, int begin, int end) {
  Signal out(end - begin, x.length());
  for (int n = 0; n < x.length(); ++n) std::copy(x.sample(n) + begin, x.sample(n) + end, out.sample(n));
  return out;
}

}  // namespace

Signal residual_apply(const ResidualBlock& block, const Signal& x) {
  if (block.kind == ResidualBlock::Kind::kAdditive) {
    const double alpha = std::clamp(block.alpha, 0.0, 1.0);
    const Signal a = apply_chain(block.first, x);
    const Signal b = apply_chain(block.second, x);
    if (a.channels() != b.channels() || a.length() != b.length()) {
      throw InvalidInput("additive block: branch outputs differ in shape (" +
                         std::to_string(a.channels()) + "x" + std::to_string(a.length()) + " vs " +
                         std::to_string(b.channels()) + "x" + std::to_string(b.length()) + ")");
    }
    Signal y(a.channels(), a.length());
    auto out = y.data();
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * da[i] + (1.0 - alpha) * db[i];
    return y;
  }

  if (block.split < 1 || block.split >= x.channels()) {
    throw InvalidInput("concatenative block: split " + std::to_string(block.split) +
                       " invalid for " + std::to_string(x.channels()) + " channels");
  }
  const Signal a = apply_chain(block.first, slice_channels(x, 0, block.split));
  const Signal b = apply_chain(block.second, slice_channels(x, block.split, x.channels()));
  if (a.length() != b.length()) throw InvalidInput("concatenative block: branch lengths differ");
  const int total = a.channels() + b.channels();
  if (static_cast<int>(block.perm.size()) != total) {
    throw InvalidInput("concatenative block: perm has " + std::to_string(block.perm.size()) +
                       " entries for " + std::to_string(total) + " output channels");
  }
  Signal y(total, a.length());
  for (int n = 0; n < y.length(); ++n) {
    for (int c = 0; c < total; ++c) {
      const int src = block.perm[c];
      y(n, c) = src < a.channels() ? a(n, src) : b(n, src - a.channels());
    }
  }
  return y;
}

Signal apply_layer(const Layer& layer, const Signal& x) {
  if (const auto* spec = std::get_if<ConvSpec>(&layer.op)) return apply(*spec, x);
  if (const auto* gs = std::get_if<GroupSort>(&layer.op)) return group_sort(x, gs->group_size);
  return residual_apply(*std::get<std::shared_ptr<const ResidualBlock>>(layer.op), x);
}

Signal apply_chain(const Chain& chain, const Signal& x) {
  Signal y = x;
  for (const auto& layer : chain) y = apply_layer(layer, y);
  return y;
}

MarginResult margin_and_radius(std::span<const double> logits, int label, double lipschitz) {
  if (logits.size() < 2) throw InvalidInput("margin needs at least two logits");
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw InvalidInput("label " + std::to_string(label) + " out of range for " +
                       std::to_string(logits.size()) + " logits");
  }
  if (!(lipschitz > 0.0)) throw InvalidInput("Lipschitz constant must be positive");
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (static_cast<int>(i) != label) runner_up = std::max(runner_up, logits[i]);
  }
  MarginResult r;
  r.label = label;
  r.margin = std::max(0.0, logits[static_cast<std::size_t>(label)] - runner_up);
  r.certified_radius = r.margin / (std::sqrt(2.0) * lipschitz);
  return r;
}

double empirical_lipschitz(const Chain& chain, const ProbeOptions& opt) {
  if (opt.trials < 2) throw InvalidInput("empirical_lipschitz needs trials >= 2");
  double worst = 0.0;
  std::uniform_real_distribution<double> log_scale(std::log(1e-3), 0.0);
  for (int t = 0; t < opt.trials; ++t) {
    std::mt19937_64 rng(derive_seed(opt.seed, static_cast<std::uint64_t>(t)));
    const Signal x = gaussian_signal(opt.channels, opt.length, rng);
    Signal xp = gaussian_signal(opt.channels, opt.length, rng);
    const double s = std::exp(log_scale(rng));
    {
      auto dp = xp.data();
      auto dx = x.data();
      for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = dx[i] + s * dp[i];
    }
    const Signal fx = apply_chain(chain, x);
    const Signal fxp = apply_chain(chain, xp);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < fx.data().size(); ++i) {
      const double d = fxp.data()[i] - fx.data()[i];
      num += d * d;
    }
    for (std::size_t i = 0; i < x.data().size(); ++i) {
      const double d = xp.data()[i] - x.data()[i];
      den += d * d;
    }
    if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

Chain make_additive_chain(int blocks, int channels, std::uint64_t seed) {
  if (blocks < 0 || channels < 2 || channels % 2 != 0) {
    throw InvalidInput("additive chain needs blocks >= 0 and an even channel count >= 2");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto conv = [&](std::uint64_t stream) {
    ConvDesign d;
    d.in_channels = channels;
    d.out_channels = channels;
    d.source.seed = derive_seed(seed, stream);
    return conv_layer(build_orthogonal(d));
  };
  Chain chain;
  for (int b = 0; b < blocks; ++b) {
    Chain first{conv(2 * static_cast<std::uint64_t>(b)), group_sort_layer(2)};
    Chain second{conv(2 * static_cast<std::uint64_t>(b) + 1)};
    chain.push_back(additive_block(unit(rng), std::move(first), std::move(second)));
  }
  return chain;
}

}  // namespace parafac
