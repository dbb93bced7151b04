#include "parafac/paraunitary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parafac/error.hpp"

namespace parafac {

void ParaunitaryFactors::validate() const {
  if (channels < 1) throw InvalidInput("paraunitary factors need channels >= 1");
  if (q.dim() != channels) {
    throw InvalidInput("Q has dimension " + std::to_string(q.dim()) + ", expected " +
                       std::to_string(channels));
  }
  auto check = [&](const std::vector<ColumnOrtho>& list, const char* side) {
    for (std::size_t l = 0; l < list.size(); ++l) {
      if (list[l].rows() != channels) {
        throw InvalidInput(std::string(side) + " factor " + std::to_string(l + 1) + " has " +
                           std::to_string(list[l].rows()) + " rows, expected " +
                           std::to_string(channels));
      }
    }
  };
  check(neg_factors, "anticausal");
  check(pos_factors, "causal");
}

MatrixSeq v_block(const ColumnOrtho& u, VDirection direction) {
  const int c = u.rows();
  const Eigen::MatrixXd p = u.projector();
  const Eigen::MatrixXd comp = Eigen::MatrixXd::Identity(c, c) - p;
  if (direction == VDirection::kAdvance) return MatrixSeq(c, c, 1, 0, {p, comp});
  return MatrixSeq(c, c, 0, 1, {comp, p});
}

MatrixSeq build_1d(const ParaunitaryFactors& factors) {
  factors.validate();
  // Grown from Q outwards, one factor pair at a time. Paired factors that
  // cancel (the reduced form) then do so at every step instead of leaving
  // large intermediate taps to cancel at the end.
  MatrixSeq h = MatrixSeq::delta(factors.q.matrix());
  const int depth = std::max(factors.lo(), factors.hi());
  for (int l = 0; l < depth; ++l) {
    if (l < factors.lo()) h = seq_mul(v_block(factors.neg_factors[l], VDirection::kAdvance), h);
    if (l < factors.hi()) h = seq_mul(h, v_block(factors.pos_factors[l], VDirection::kDelay));
  }
  return h;
}

ParaunitaryFactors init_reduced(const OrthoMatrix& q, std::vector<ColumnOrtho> pos_factors) {
  ParaunitaryFactors f;
  f.channels = q.dim();
  f.q = q;
  f.neg_factors.reserve(pos_factors.size());
  for (const auto& u : pos_factors) {
    if (u.rows() != q.dim()) {
      throw InvalidInput("init_reduced: factor has " + std::to_string(u.rows()) +
                         " rows, Q has dimension " + std::to_string(q.dim()));
    }
    if (u.cols() == 0) {
      f.neg_factors.push_back(ColumnOrtho::empty(q.dim()));
    } else {
      f.neg_factors.emplace_back(q.matrix() * u.matrix());
    }
  }
  f.pos_factors = std::move(pos_factors);
  return f;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ParaunitaryFactors make_factors(int channels, int lo, int hi, const FactorSource& source) {
  if (channels < 1) throw InvalidInput("make_factors: channels must be >= 1");
  if (lo < 0 || hi < 0) throw InvalidInput("make_factors: degrees must be >= 0");
  const int cols = source.factor_cols < 0 ? channels / 2 : source.factor_cols;
  if (cols > channels) {
    throw InvalidInput("make_factors: factor columns " + std::to_string(cols) + " exceed channels " +
                       std::to_string(channels));
  }
  std::uint64_t stream = 0;
  auto next_factor = [&] {
    return column_ortho(uniform_skew(channels, derive_seed(source.seed, ++stream)), cols);
  };

  const bool reduced = source.reduced || source.scheme != InitScheme::kUniform;
  const OrthoMatrix q = init_scheme(source.scheme, channels, derive_seed(source.seed, 0));
  if (!reduced) {
    ParaunitaryFactors f;
    f.channels = channels;
    f.q = q;
    for (int l = 0; l < lo; ++l) f.neg_factors.push_back(next_factor());
    for (int l = 0; l < hi; ++l) f.pos_factors.push_back(next_factor());
    return f;
  }

  const int paired = std::min(lo, hi);
  std::vector<ColumnOrtho> pos;
  for (int l = 0; l < paired; ++l) pos.push_back(next_factor());
  ParaunitaryFactors f = init_reduced(q, std::move(pos));
  for (int l = paired; l < lo; ++l) f.neg_factors.push_back(ColumnOrtho::empty(channels));
  for (int l = paired; l < hi; ++l) f.pos_factors.push_back(ColumnOrtho::empty(channels));
  return f;
}

Taps2D::Taps2D(int channels, int lo1, int hi1, int lo2, int hi2)
    : channels_(channels), lo1_(lo1), hi1_(hi1), lo2_(lo2), hi2_(hi2) {
  if (channels < 1 || lo1 < 0 || hi1 < 0 || lo2 < 0 || hi2 < 0) {
    throw InvalidInput("Taps2D: invalid shape");
  }
  taps_.assign(static_cast<std::size_t>((lo1 + hi1 + 1) * (lo2 + hi2 + 1)),
               Eigen::MatrixXd::Zero(channels, channels));
}

Eigen::MatrixXcd Taps2D::eval(Complex z1, Complex z2) const {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(channels_, channels_);
  for (int m = -lo1_; m <= hi1_; ++m) {
    for (int n = -lo2_; n <= hi2_; ++n) {
      acc += at(m, n).cast<Complex>() * (std::pow(z1, -m) * std::pow(z2, -n));
    }
  }
  return acc;
}

Taps2D build_2d(const Separable2D& sep) {
  if (sep.horizontal.channels != sep.vertical.channels) {
    throw InvalidInput("build_2d: horizontal and vertical systems have " +
                       std::to_string(sep.horizontal.channels) + " and " +
                       std::to_string(sep.vertical.channels) + " channels");
  }
  const MatrixSeq h1 = build_1d(sep.horizontal);
  const MatrixSeq h2 = build_1d(sep.vertical);
  Taps2D g(h1.rows(), h1.lo(), h1.hi(), h2.lo(), h2.hi());
  for (int m = h1.first(); m <= h1.last(); ++m) {
    for (int n = h2.first(); n <= h2.last(); ++n) g.at(m, n).noalias() = h1.tap(m) * h2.tap(n);
  }
  return g;
}

ParaunitaryCheck is_paraunitary_2d(const Taps2D& taps, int k1, int k2, double tol) {
  k1 = std::max(k1, 2 * (taps.lo1() + taps.hi1()) + 1);
  k2 = std::max(k2, 2 * (taps.lo2() + taps.hi2()) + 1);
  const int c = taps.channels();
  const Eigen::MatrixXcd ident = Eigen::MatrixXcd::Identity(c, c);
  auto twiddle = [](int k, int n, int total) {
    const long long idx = ((static_cast<long long>(k) * n) % total + total) % total;
    const double w = 2.0 * M_PI * static_cast<double>(idx) / total;
    return Complex(std::cos(w), -std::sin(w));
  };
  double residual = 0.0;
  for (int a = 0; a < k1; ++a) {
    for (int b = 0; b < k2; ++b) {
      Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(c, c);
      for (int m = -taps.lo1(); m <= taps.hi1(); ++m) {
        for (int n = -taps.lo2(); n <= taps.hi2(); ++n) {
          h += taps.at(m, n).cast<Complex>() * (twiddle(a, m, k1) * twiddle(b, n, k2));
        }
      }
      residual = std::max(residual, (h.adjoint() * h - ident).cwiseAbs().maxCoeff());
    }
  }
  return {residual <= tol, residual, k1 * k2};
}

}  // namespace parafac
