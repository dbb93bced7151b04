#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "parafac/convops.hpp"
#include "parafac/error.hpp"
#include "parafac/multirate.hpp"

using namespace parafac;
using oracle::max_abs;
using oracle::max_diff;

namespace {

ConvSpec orthogonal(ConvKind kind, int s, int t, int rate, int groups, int lo, int hi, std::uint64_t seed) {
  ConvDesign d;
  d.kind = kind;
  d.in_channels = s;
  d.out_channels = t;
  d.rate = rate;
  d.groups = groups;
  d.lo = lo;
  d.hi = hi;
  d.source.seed = seed;
  return build_orthogonal(d);
}

double ratio_dev(const ConvSpec& spec, const Signal& x) { return std::abs(apply(spec, x).norm() / x.norm() - 1.0); }

}  // namespace

TEST_CASE("standard convolution") {
  std::mt19937_64 rng(1);
  const Signal x = oracle::random_signal(3, 10, rng);
  CHECK(conv_standard(MatrixSeq::identity(3), x) == x);

  std::vector<Eigen::MatrixXd> ones(2, Eigen::MatrixXd::Ones(1, 1));
  const MatrixSeq h = MatrixSeq(1, 1, 0, 1, ones);
  Signal imp(1, 4);
  imp(0, 0) = 1.0;
  const Signal y = conv_standard(h, imp);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(1, 0) == 1.0);
  CHECK(y(2, 0) == 0.0);
  CHECK(y(3, 0) == 0.0);

  for (int t = 0; t < 20; ++t) {
    const MatrixSeq g = oracle::random_seq(2, 3, t % 3, (t + 1) % 4, rng);
    const Signal xs = oracle::random_signal(3, 9, rng);
    CHECK(max_diff(conv_standard(g, xs), oracle::circ_conv(g, xs)) <= 1e-13);
  }

  CHECK_THROWS_AS(conv_standard(MatrixSeq::identity(2), x), InvalidInput);
  CHECK_THROWS_AS(conv_standard(oracle::random_seq(3, 3, 3, 3, rng), oracle::random_signal(3, 6, rng)), InvalidInput);
}

TEST_CASE("linearity and the convolution theorem") {
  std::mt19937_64 rng(2);
  const MatrixSeq h = oracle::random_seq(3, 2, 1, 2, rng);
  const Signal x1 = oracle::random_signal(2, 16, rng);
  const Signal x2 = oracle::random_signal(2, 16, rng);
  Signal mix(2, 16);
  for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = 2.5 * x1.data()[i] - 0.75 * x2.data()[i];
  const Signal y1 = conv_standard(h, x1);
  const Signal y2 = conv_standard(h, x2);
  const Signal ym = conv_standard(h, mix);
  for (std::size_t i = 0; i < ym.data().size(); ++i) {
    CHECK(std::abs(ym.data()[i] - (2.5 * y1.data()[i] - 0.75 * y2.data()[i])) <= 1e-12);
  }

  const auto xf = oracle::dft(x1);
  const auto yf = oracle::dft(y1);
  for (int k = 0; k < 16; ++k) {
    const Eigen::VectorXcd expect = eval_z(h, oracle::unit(2 * M_PI * k / 16)) * xf[k];
    CHECK((yf[k] - expect).cwiseAbs().maxCoeff() <= 1e-11);
  }
}

TEST_CASE("dilated convolution") {
  std::mt19937_64 rng(3);
  const MatrixSeq h = oracle::random_seq(2, 2, 1, 1, rng);
  const Signal x = oracle::random_signal(2, 16, rng);
  CHECK(max_diff(conv_dilated(h, 1, x), conv_standard(h, x)) == 0.0);
  CHECK(conv_dilated(MatrixSeq::identity(2), 4, x) == x);
  for (int rate : {2, 3, 4}) {
    CHECK(max_diff(conv_dilated(h, rate, x), oracle::circ_conv(oracle::zero_insert(h, rate), x)) <= 1e-13);
  }
  CHECK_THROWS_AS(conv_dilated(h, 6, x), InvalidInput);

  for (int rate : {2, 4}) {
    const ConvSpec spec = orthogonal(ConvKind::kDilated, 4, 4, rate, 1, 1, 1, 7);
    CHECK(spec.filters[0] == orthogonal(ConvKind::kStandard, 4, 4, 1, 1, 1, 1, 7).filters[0]);
    for (int t = 0; t < 10; ++t) CHECK(ratio_dev(spec, oracle::random_signal(4, 32, rng)) <= 1e-12);
  }
}

TEST_CASE("strided convolutions") {
  std::mt19937_64 rng(4);
  SUBCASE("down matches convolve-then-decimate") {
    for (int rate : {1, 2, 3}) {
      const MatrixSeq h = oracle::random_seq(3, 2, 2, 1, rng);
      const Signal x = oracle::random_signal(2, 12, rng);
      CHECK(max_diff(conv_strided_down(h, rate, x), oracle::keep_every(oracle::circ_conv(h, x), rate)) <= 1e-13);
    }
    const Signal x = oracle::random_signal(2, 8, rng);
    const Signal y = conv_strided_down(MatrixSeq::identity(2), 2, x);
    CHECK(y.length() == 4);
    for (int i = 0; i < 4; ++i) CHECK(y(i, 1) == x(2 * i, 1));
    CHECK_THROWS_AS(conv_strided_down(MatrixSeq::identity(2), 3, x), InvalidInput);
  }
  SUBCASE("up matches zero-insert-then-convolve") {
    for (int rate : {1, 2, 3}) {
      const MatrixSeq h = oracle::random_seq(2, 3, 1, 3, rng);
      const Signal x = oracle::random_signal(3, 5, rng);
      CHECK(max_diff(conv_strided_up(h, rate, x), oracle::circ_conv(h, oracle::zero_insert(x, rate))) <= 1e-13);
    }
    const Signal x = oracle::random_signal(1, 6, rng);
    const Signal y = conv_strided_up(MatrixSeq::identity(1), 2, x);
    CHECK(y == oracle::zero_insert(x, 2));
    CHECK(y.norm() == x.norm());
  }
  SUBCASE("polyphase bookkeeping") {
    // S = 1, R = 2, T = 2 with reflected polyphase matrix I: the output
    // stacks the two polyphase components of x.
    Eigen::MatrixXd e0 = Eigen::MatrixXd::Zero(2, 1), e1 = Eigen::MatrixXd::Zero(2, 1);
    e0(0, 0) = 1.0;
    e1(1, 0) = 1.0;
    const MatrixSeq h = MatrixSeq::from_offset(2, 1, -1, {e1, e0});
    CHECK(polyphase_matrix(h, 2, PolyphaseFlavor::kReflected) == MatrixSeq::identity(2));
    const Signal x = oracle::random_signal(1, 8, rng);
    const Signal y = conv_strided_down(h, 2, x);
    for (int i = 0; i < 4; ++i) {
      CHECK(y(i, 0) == x(2 * i, 0));
      CHECK(y(i, 1) == x(2 * i + 1, 0));
    }
    CHECK(y.squared_norm() == x.squared_norm());
  }
  SUBCASE("orthogonal constructions") {
    for (int rate : {2, 3, 4}) {
      const ConvSpec down = orthogonal(ConvKind::kStridedDown, 2, 2 * rate, rate, 1, 1, 1, 10 + rate);
      CHECK(spectral_residual(down) <= 1e-12);
      CHECK(is_paraunitary(polyphase_matrix(down.filters[0], rate, PolyphaseFlavor::kReflected)).residual <= 1e-12);
      const ConvSpec up = orthogonal(ConvKind::kStridedUp, 2 * rate, 2, rate, 1, 1, 2, 20 + rate);
      CHECK(spectral_residual(up) <= 1e-12);
      for (int t = 0; t < 10; ++t) {
        CHECK(ratio_dev(down, oracle::random_signal(2, 12 * rate, rng)) <= 1e-12);
        CHECK(ratio_dev(up, oracle::random_signal(2 * rate, 12, rng)) <= 1e-12);
      }
    }
  }
  SUBCASE("down with the paraconjugate filter inverts up") {
    for (int rate : {2, 4}) {
      const ConvSpec up = orthogonal(ConvKind::kStridedUp, 3 * rate, 3, rate, 1, 2, 1, 40 + rate);
      const Signal x = oracle::random_signal(3 * rate, 16, rng);
      const Signal y = apply(up, x);
      CHECK(max_diff(conv_strided_down(paraconjugate(up.filters[0]), rate, y), x) <= 1e-12);
    }
  }
}

TEST_CASE("group convolution") {
  std::mt19937_64 rng(5);
  const MatrixSeq h = oracle::random_seq(4, 4, 1, 1, rng);
  const Signal x = oracle::random_signal(4, 12, rng);
  CHECK(max_diff(conv_group({h}, x), conv_standard(h, x)) == 0.0);
  CHECK(conv_group(std::vector<MatrixSeq>(4, MatrixSeq::identity(1)), x) == x);

  // Block-diagonal: group g only sees its own channel slice.
  const MatrixSeq a = oracle::random_seq(2, 2, 1, 0, rng);
  const MatrixSeq b = oracle::random_seq(2, 2, 0, 2, rng);
  const Signal y = conv_group({a, b}, x);
  Signal lo(2, 12), hi(2, 12);
  for (int n = 0; n < 12; ++n) {
    lo(n, 0) = x(n, 0), lo(n, 1) = x(n, 1);
    hi(n, 0) = x(n, 2), hi(n, 1) = x(n, 3);
  }
  const Signal ya = oracle::circ_conv(a, lo);
  const Signal yb = oracle::circ_conv(b, hi);
  for (int n = 0; n < 12; ++n) {
    CHECK(std::abs(y(n, 0) - ya(n, 0)) <= 1e-13);
    CHECK(std::abs(y(n, 3) - yb(n, 1)) <= 1e-13);
  }

  for (int groups : {4, 16}) {
    const ConvSpec spec = orthogonal(ConvKind::kStandard, 32, 32, 1, groups, 1, 1, 50 + groups);
    CHECK(spec.filters.size() == static_cast<std::size_t>(groups));
    for (int t = 0; t < 5; ++t) CHECK(ratio_dev(spec, oracle::random_signal(32, 24, rng)) <= 1e-12);
  }
}

TEST_CASE("feasibility") {
  auto design = [](ConvKind kind, int s, int t, int rate, int groups) {
    ConvDesign d;
    d.kind = kind;
    d.in_channels = s;
    d.out_channels = t;
    d.rate = rate;
    d.groups = groups;
    return d;
  };
  CHECK_NOTHROW(check_feasible(design(ConvKind::kStridedDown, 2, 4, 2, 1)));
  CHECK_NOTHROW(check_feasible(design(ConvKind::kStridedUp, 32, 16, 2, 16)));
  CHECK_THROWS_WITH_AS(check_feasible(design(ConvKind::kStandard, 4, 4, 1, 3)), doctest::Contains("G | S"), InvalidInput);
  CHECK_THROWS_WITH_AS(check_feasible(design(ConvKind::kStridedUp, 32, 8, 4, 16)), doctest::Contains("G | T"), InvalidInput);
  CHECK_THROWS_WITH_AS(check_feasible(design(ConvKind::kStridedDown, 2, 3, 2, 1)), doctest::Contains("T = R * S"), InvalidInput);
  CHECK_THROWS_WITH_AS(check_feasible(design(ConvKind::kStridedUp, 4, 3, 2, 1)), doctest::Contains("S = R * T"), InvalidInput);
  CHECK_THROWS_WITH_AS(check_feasible(design(ConvKind::kDilated, 4, 2, 2, 1)), doctest::Contains("T = S"), InvalidInput);
  CHECK_THROWS_AS(check_feasible(design(ConvKind::kStandard, 4, 4, 2, 1)), InvalidInput);
  CHECK_THROWS_AS(build_orthogonal(design(ConvKind::kStridedUp, 32, 8, 4, 16)), InvalidInput);
}

TEST_CASE("degree zero identity construction") {
  ConvDesign d;
  d.in_channels = d.out_channels = 3;
  d.lo = d.hi = 0;
  d.source.scheme = InitScheme::kIdentity;
  const ConvSpec spec = build_orthogonal(d);
  CHECK(spec.filters[0] == MatrixSeq::identity(3));
}

TEST_CASE("circulant oracle") {
  std::mt19937_64 rng(6);
  const CirculantOracle id = circulant_oracle(make_standard(MatrixSeq::identity(2)), 4);
  CHECK(id.matrix == Eigen::MatrixXd::Identity(8, 8));
  CHECK(id.residual == 0.0);

  const CirculantOracle scaled = circulant_oracle(make_standard(MatrixSeq::delta(2.0 * Eigen::MatrixXd::Identity(2, 2))), 4);
  CHECK(scaled.residual == 3.0);

  CHECK(circulant_oracle(orthogonal(ConvKind::kStandard, 2, 2, 1, 1, 1, 1, 3), 8).residual <= 1e-10);

  // C x reproduces every kind of convolution.
  const std::vector<ConvSpec> specs = {
      orthogonal(ConvKind::kStandard, 4, 4, 1, 2, 1, 2, 1), orthogonal(ConvKind::kDilated, 2, 2, 1, 1, 1, 1, 2),
      orthogonal(ConvKind::kDilated, 2, 2, 2, 1, 1, 1, 2),  orthogonal(ConvKind::kStridedDown, 2, 4, 2, 1, 1, 1, 3),
      orthogonal(ConvKind::kStridedUp, 4, 2, 2, 2, 2, 0, 4), orthogonal(ConvKind::kStridedUp, 3, 1, 3, 1, 1, 1, 4)};
  for (const auto& spec : specs) {
    for (int n : {8, 16}) {
      if (spec.kind == ConvKind::kStridedDown && n % spec.rate != 0) continue;
      const CirculantOracle o = circulant_oracle(spec, n);
      CHECK(o.residual <= 1e-10);
      const Signal x = oracle::random_signal(spec.in_channels(), n, rng);
      Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data().data(), x.data().size());
      const Eigen::VectorXd cx = o.matrix * xv;
      const Signal y = apply(spec, x);
      REQUIRE(static_cast<std::size_t>(cx.size()) == y.data().size());
      for (Eigen::Index i = 0; i < cx.size(); ++i) CHECK(std::abs(cx(i) - y.data()[i]) <= 1e-13);
    }
  }

  CHECK_THROWS_AS(circulant_oracle(make_standard(MatrixSeq::identity(64)), 128), ResourceError);
}

TEST_CASE("verify_orthogonality") {
  const ConvSpec spec = orthogonal(ConvKind::kStandard, 8, 8, 1, 1, 1, 1, 5);
  VerifyOptions opt;
  opt.length = 32;
  opt.trials = 20;
  opt.seed = 3;
  opt.with_oracle = true;
  const OrthoReport r = verify_orthogonality(spec, opt);
  CHECK(r.orthogonal);
  CHECK(r.trials == 20);
  CHECK(r.max_abs_dev <= 1e-12);
  CHECK(r.mean_abs_dev <= r.max_abs_dev);
  REQUIRE(r.oracle_residual.has_value());
  CHECK(*r.oracle_residual <= 1e-12);

  const OrthoReport again = verify_orthogonality(spec, opt);
  CHECK(again.ratio_dev_mean == r.ratio_dev_mean);
  CHECK(again.ratio_dev_std == r.ratio_dev_std);

  opt.dtype = DType::kF32;
  opt.with_oracle = false;
  const OrthoReport f32 = verify_orthogonality(spec, opt);
  CHECK(f32.orthogonal);
  CHECK(f32.mean_abs_dev > 1e-10);
  CHECK(f32.mean_abs_dev <= 1e-6);

  // Pure decimation discards half the energy.
  ConvSpec dec = make_standard(MatrixSeq::identity(3));
  dec.kind = ConvKind::kStridedDown;
  dec.rate = 2;
  opt.dtype = DType::kF64;
  const OrthoReport bad = verify_orthogonality(dec, opt);
  CHECK_FALSE(bad.orthogonal);
  CHECK(bad.ratio_dev_mean < -0.2);

  opt.trials = 0;
  CHECK_THROWS_AS(verify_orthogonality(spec, opt), InvalidInput);
}

TEST_CASE("deviation statistics merge") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  DeviationStats all, a, b;
  std::vector<double> v;
  for (int i = 0; i < 101; ++i) {
    const double d = g(rng);
    v.push_back(d);
    all.add(d);
    (i % 3 == 0 ? a : b).add(d);
  }
  a.merge(b);
  CHECK(a.count() == 101);
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-14));
  CHECK(a.stddev() == doctest::Approx(all.stddev()).epsilon(1e-13));
  CHECK(a.max_abs() == all.max_abs());
  double mean = 0.0;
  for (double d : v) mean += d;
  mean /= v.size();
  double ss = 0.0;
  for (double d : v) ss += (d - mean) * (d - mean);
  CHECK(all.stddev() == doctest::Approx(std::sqrt(ss / 100)).epsilon(1e-13));
  DeviationStats empty;
  empty.merge(all);
  CHECK(empty.mean() == all.mean());
}

TEST_CASE("baselines") {
  std::mt19937_64 rng(8);
  SUBCASE("svcm leaves paraunitary filters alone") {
    const MatrixSeq h = orthogonal(ConvKind::kStandard, 3, 3, 1, 1, 1, 1, 2).filters[0];
    CHECK(max_tap_difference(svcm_project(h, 16, false), h) <= 1e-12);
  }
  SUBCASE("unmasked clipping is unitary on its grid") {
    const MatrixSeq g = gaussian_filter(4, 4, 1, 1, 9);
    const MatrixSeq p = svcm_project(g, 16, false);
    for (const auto& v : dft_grid(p, 16).values) {
      CHECK(max_abs(v.adjoint() * v - Eigen::MatrixXcd::Identity(4, 4)) <= 1e-12);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
      CHECK(svd.singularValues().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    }
    // On an N = grid signal the unmasked result is an orthogonal convolution.
    CHECK(ratio_dev(make_standard(p), oracle::random_signal(4, 16, rng)) <= 1e-12);
  }
  SUBCASE("masking breaks orthogonality") {
    const MatrixSeq m = svcm_project(gaussian_filter(8, 8, 1, 1, 10), 32, true);
    CHECK(m.length() <= 3);
    VerifyOptions opt;
    opt.length = 32;
    opt.trials = 20;
    const OrthoReport r = verify_orthogonality(make_standard(m), opt);
    CHECK_FALSE(r.orthogonal);
    CHECK(r.mean_abs_dev > 1e-2);
  }
  SUBCASE("reshaped-kernel polar factor is not an orthogonal convolution") {
    const MatrixSeq p = rko_project(gaussian_filter(8, 8, 1, 1, 11));
    Eigen::MatrixXd wide(8, 24);
    for (int n = -1; n <= 1; ++n) wide.middleCols((n + 1) * 8, 8) = p.tap(n);
    CHECK(max_abs(wide * wide.transpose() - Eigen::MatrixXd::Identity(8, 8)) <= 1e-12);
    VerifyOptions opt;
    opt.length = 32;
    opt.trials = 20;
    const OrthoReport r = verify_orthogonality(make_standard(p), opt);
    CHECK_FALSE(r.orthogonal);
    CHECK(r.mean_abs_dev > 1e-3);
  }
  CHECK_THROWS_AS(svcm_project(gaussian_filter(2, 2, 2, 2, 1), 4, false), InvalidInput);
}

TEST_CASE("parsing") {
  CHECK(parse_kind("group") == ConvKind::kStandard);
  for (auto k : {ConvKind::kStandard, ConvKind::kDilated, ConvKind::kStridedDown, ConvKind::kStridedUp}) {
    CHECK(parse_kind(kind_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_kind("transposed"), InvalidInput);
  CHECK(parse_dtype("f32") == DType::kF32);
  CHECK_THROWS_AS(parse_dtype("f16"), InvalidInput);
  CHECK(dtype_tolerance(DType::kF64) == 1e-12);
}
