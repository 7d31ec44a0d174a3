#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "equikernel/layers.hpp"

using namespace equikernel;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double rotate_commute_error(const IrrepsFeature& x, const Rotation& r,
                            const std::function<IrrepsFeature(const IrrepsFeature&)>& op) {
  IrrepsFeature lhs = op(rotate_feature(x, r));
  IrrepsFeature rhs = rotate_feature(op(x), r);
  return max_abs_diff(lhs.v, rhs.v);
}

const PointFunction kSilu = [](double* v, int n) {
  for (int c = 0; c < n; ++c) v[c] = silu(v[c]);
};

}  // namespace

TEST_CASE("grid construction enforces the band-limit relation") {
  CHECK_THROWS_AS(S2Grid(9, 18, 6), std::runtime_error);   // n_lat < 2*6+1
  CHECK_THROWS_AS(S2Grid(18, 9, 6), std::runtime_error);
  const S2Grid g(18, 18, 6);
  CHECK(g.n_points() == 324);
  // quadrature weights integrate the constant to 4 pi
  double s = 0.0;
  for (int p = 0; p < g.n_points(); ++p) s += g.weight(p);
  CHECK(s == doctest::Approx(4.0 * 3.14159265358979323846).epsilon(1e-12));
}

TEST_CASE("degree-0 features give constant samples and exact round trips") {
  const S2Grid grid(12, 12, 4);
  IrrepsFeature x(IrrepsLayout{0, 2, 0});
  x.at(0, 0, 0) = 1.5;
  x.at(0, 0, 1) = -0.3;
  auto samples = s2_project(x, grid);
  for (int p = 0; p < grid.n_points(); ++p) {
    CHECK(samples[static_cast<std::size_t>(p * 2)] == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(samples[static_cast<std::size_t>(p * 2 + 1)] == doctest::Approx(-0.3).epsilon(1e-13));
  }
  IrrepsFeature back = s2_reconstruct(samples, grid, 0, 2);
  CHECK(max_abs_diff(x.v, back.v) < 1e-13);
}

TEST_CASE("round trip is exact for band-limited input at the canonical resolution") {
  const S2Grid grid(18, 18, 6);
  Rng rng(1);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature x(IrrepsLayout{6, 3, 0});
    x.fill_random(rng);
    IrrepsFeature back = s2_reconstruct(s2_project(x, grid), grid, 6, 3);
    err = std::max(err, max_abs_diff(x.v, back.v));
  }
  CHECK(err < 1e-8);
}

TEST_CASE("projection is equivariant through reconstruction") {
  const S2Grid grid(18, 18, 6);
  Rng rng(2);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature x(IrrepsLayout{6, 2, 0});
    x.fill_random(rng);
    err = std::max(err, rotate_commute_error(x, Rotation::random(rng), [&](const IrrepsFeature& f) {
                     return s2_reconstruct(s2_project(f, grid), grid, 6, 2);
                   }));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("identity and scaling pass through the s2 activation exactly") {
  const S2Grid grid(18, 18, 6);
  Rng rng(3);
  IrrepsFeature x(IrrepsLayout{6, 2, 0});
  x.fill_random(rng);
  IrrepsFeature same = s2_activation(x, [](double*, int) {}, grid);
  CHECK(max_abs_diff(x.v, same.v) < 1e-8);
  IrrepsFeature twice = s2_activation(
      x, [](double* v, int n) {
        for (int c = 0; c < n; ++c) v[c] *= 2.0;
      },
      grid);
  IrrepsFeature want(x.layout);
  for (std::size_t i = 0; i < x.v.size(); ++i) want.v[i] = 2.0 * x.v[i];
  CHECK(max_abs_diff(want.v, twice.v) < 1e-8);
}

TEST_CASE("silu s2 activation is equivariant on an oversampled grid") {
  const S2Grid grid(48, 48, 2);
  Rng rng(4);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature x(IrrepsLayout{2, 3, 0});
    x.fill_random(rng, 0.5);
    err = std::max(err, rotate_commute_error(x, Rotation::random(rng), [&](const IrrepsFeature& f) {
                     return s2_activation(f, kSilu, grid);
                   }));
  }
  CHECK(err < 1e-6);
}

TEST_CASE("separable s2 activation splits and discards as specified") {
  const S2Grid grid(24, 24, 2);
  Rng rng(5);

  // zero higher degrees: the sphere signal is constant per channel, so the
  // activated signal keeps only degree-0 content and higher degrees stay zero
  IrrepsFeature x(IrrepsLayout{2, 3, 3});
  for (int c = 0; c < 3; ++c) {
    x.v[static_cast<std::size_t>(c)] = rng.gaussian();          // first part
    x.at(0, 0, c) = rng.gaussian();                             // second part
  }
  IrrepsFeature y = separable_s2_activation(x, kSilu, grid);
  CHECK(y.layout.extra0 == 0);
  for (int c = 0; c < 3; ++c)
    CHECK(y.at(0, 0, c) ==
          doctest::Approx(silu(x.v[static_cast<std::size_t>(c)])).epsilon(1e-12));
  for (int L = 1; L <= 2; ++L)
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(y.at(L, m, c)) < 1e-10);

  // identity F: higher degrees survive the round trip
  IrrepsFeature z(IrrepsLayout{2, 3, 3});
  z.fill_random(rng);
  IrrepsFeature zi = separable_s2_activation(z, [](double*, int) {}, grid);
  double err = 0.0;
  for (int L = 1; L <= 2; ++L)
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < 3; ++c) err = std::max(err, std::abs(zi.at(L, m, c) - z.at(L, m, c)));
  CHECK(err < 1e-8);
}

TEST_CASE("separable s2 activation is equivariant") {
  const S2Grid grid(48, 48, 2);
  Rng rng(6);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature x(IrrepsLayout{2, 3, 3});
    x.fill_random(rng, 0.5);
    err = std::max(err, rotate_commute_error(x, Rotation::random(rng), [&](const IrrepsFeature& f) {
                     return separable_s2_activation(f, kSilu, grid);
                   }));
  }
  CHECK(err < 1e-6);
}

TEST_CASE("separable s2 activation rejects a bad partition") {
  const S2Grid grid(12, 12, 2);
  IrrepsFeature x(IrrepsLayout{2, 3, 2});
  CHECK_THROWS_AS(separable_s2_activation(x, kSilu, grid), std::invalid_argument);
}

TEST_CASE("gate activation saturates, zeroes, and stays equivariant") {
  Rng rng(7);
  const int lmax = 2, nc = 3;
  const IrrepsLayout layout{lmax, nc, lmax * nc};  // (nc) scalars + lmax*nc gates

  // saturated gates pass higher degrees through
  IrrepsFeature x(layout);
  x.fill_random(rng);
  for (int g = 0; g < lmax * nc; ++g) x.v[static_cast<std::size_t>(nc + g)] = 40.0;
  IrrepsFeature y = gate_activation(x);
  double err = 0.0;
  for (int L = 1; L <= lmax; ++L)
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < nc; ++c) err = std::max(err, std::abs(y.at(L, m, c) - x.at(L, m, c)));
  CHECK(err < 1e-12);

  // zero higher-degree input gives zero higher-degree output
  IrrepsFeature z(layout);
  for (int c = 0; c < layout.ch(0); ++c) z.v[static_cast<std::size_t>(c)] = rng.gaussian();
  IrrepsFeature zy = gate_activation(z);
  for (int L = 1; L <= lmax; ++L)
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < nc; ++c) CHECK(zy.at(L, m, c) == 0.0);

  // equivariance
  double eq = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature f(layout);
    f.fill_random(rng);
    eq = std::max(eq, rotate_commute_error(f, Rotation::random(rng), [](const IrrepsFeature& a) {
                    return gate_activation(a);
                  }));
  }
  CHECK(eq < 1e-10);

  // insufficient scalars
  IrrepsFeature bad(IrrepsLayout{2, 3, 2});  // 5 degree-0 channels < 6 gates + 1
  CHECK_THROWS_AS(gate_activation(bad), std::invalid_argument);
}

TEST_CASE("equivariant layer norm fixes per-degree statistics") {
  Rng rng(8);
  const IrrepsLayout layout{2, 4, 0};
  NormParams p = NormParams::make(layout);

  // input with per-degree RMS already 1 stays unchanged for L > 0
  IrrepsFeature x(layout);
  x.fill_random(rng);
  for (int L = 1; L <= 2; ++L) {
    double acc = 0.0;
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < 4; ++c) acc += x.at(L, m, c) * x.at(L, m, c);
    const double scale = 1.0 / std::sqrt(acc / 4.0);
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < 4; ++c) x.at(L, m, c) *= scale;
  }
  IrrepsFeature y = equivariant_layer_norm(x, p);
  double err = 0.0;
  for (int L = 1; L <= 2; ++L)
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < 4; ++c) err = std::max(err, std::abs(y.at(L, m, c) - x.at(L, m, c)));
  CHECK(err < 1e-10);

  // per-degree scale invariance
  IrrepsFeature z(layout);
  z.fill_random(rng);
  IrrepsFeature z7 = z;
  for (int m = -1; m <= 1; ++m)
    for (int c = 0; c < 4; ++c) z7.at(1, m, c) *= 7.0;
  IrrepsFeature a = equivariant_layer_norm(z, p);
  IrrepsFeature b = equivariant_layer_norm(z7, p);
  for (int m = -1; m <= 1; ++m)
    for (int c = 0; c < 4; ++c)
      CHECK(a.at(1, m, c) == doctest::Approx(b.at(1, m, c)).epsilon(1e-10));
  // and the other degree is untouched by the rescaling of degree 1
  for (int m = -2; m <= 2; ++m)
    for (int c = 0; c < 4; ++c)
      CHECK(a.at(2, m, c) == doctest::Approx(b.at(2, m, c)).epsilon(1e-10));

  // equivariance
  Rng prng(9);
  NormParams pr = NormParams::make(layout);
  pr.init_random(prng);
  double eq = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature f(layout);
    f.fill_random(rng);
    eq = std::max(eq, rotate_commute_error(f, Rotation::random(rng), [&](const IrrepsFeature& g) {
                    return equivariant_layer_norm(g, pr);
                  }));
  }
  CHECK(eq < 1e-10);
}

TEST_CASE("separable layer norm matches its defining statistics") {
  Rng rng(10);
  const IrrepsLayout layout{3, 5, 0};
  NormParams unit = NormParams::make(layout);

  // constant degree-0 input maps to beta (zero) before bias
  IrrepsFeature c(layout);
  for (int ch = 0; ch < 5; ++ch) c.at(0, 0, ch) = 3.25;
  IrrepsFeature cy = separable_layer_norm(c, unit);
  for (int ch = 0; ch < 5; ++ch) CHECK(std::abs(cy.at(0, 0, ch)) < 1e-12);

  // unit gamma: degree-0 mean 0 / std 1 and combined L>0 RMS exactly 1
  IrrepsFeature x(layout);
  x.fill_random(rng);
  IrrepsFeature y = separable_layer_norm(x, unit);
  double mu = 0.0;
  for (int ch = 0; ch < 5; ++ch) mu += y.at(0, 0, ch);
  mu /= 5.0;
  CHECK(std::abs(mu) < 1e-10);
  double var = 0.0;
  for (int ch = 0; ch < 5; ++ch) var += (y.at(0, 0, ch) - mu) * (y.at(0, 0, ch) - mu);
  CHECK(std::abs(std::sqrt(var / 5.0) - 1.0) < 1e-10);
  double sigma2 = 0.0;
  for (int L = 1; L <= 3; ++L) {
    double acc = 0.0;
    for (int m = -L; m <= L; ++m)
      for (int ch = 0; ch < 5; ++ch) acc += y.at(L, m, ch) * y.at(L, m, ch);
    sigma2 += acc / (5.0 * (2.0 * L + 1.0));
  }
  CHECK(std::abs(std::sqrt(sigma2 / 3.0) - 1.0) < 1e-10);

  // joint scaling of all L>0 blocks leaves the L>0 output unchanged,
  // while scaling a single degree changes the other degrees too
  IrrepsFeature z(layout);
  z.fill_random(rng);
  IrrepsFeature zs = z;
  for (int L = 1; L <= 3; ++L)
    for (int m = -L; m <= L; ++m)
      for (int ch = 0; ch < 5; ++ch) zs.at(L, m, ch) *= 7.0;
  IrrepsFeature a = separable_layer_norm(z, unit);
  IrrepsFeature b = separable_layer_norm(zs, unit);
  double joint_err = 0.0;
  for (int L = 1; L <= 3; ++L)
    for (int m = -L; m <= L; ++m)
      for (int ch = 0; ch < 5; ++ch)
        joint_err = std::max(joint_err, std::abs(a.at(L, m, ch) - b.at(L, m, ch)));
  CHECK(joint_err < 1e-10);

  IrrepsFeature zone = z;
  for (int m = -1; m <= 1; ++m)
    for (int ch = 0; ch < 5; ++ch) zone.at(1, m, ch) *= 7.0;
  IrrepsFeature d = separable_layer_norm(zone, unit);
  double moved = 0.0;
  for (int m = -2; m <= 2; ++m)
    for (int ch = 0; ch < 5; ++ch) moved = std::max(moved, std::abs(d.at(2, m, ch) - a.at(2, m, ch)));
  CHECK(moved > 1e-3);  // distinguishes SLN from per-degree LN

  // equivariance
  double eq = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature f(layout);
    f.fill_random(rng);
    eq = std::max(eq, rotate_commute_error(f, Rotation::random(rng), [&](const IrrepsFeature& g) {
                    return separable_layer_norm(g, unit);
                  }));
  }
  CHECK(eq < 1e-10);

  // all-zero higher degrees survive the epsilon guard
  IrrepsFeature zero(layout);
  IrrepsFeature zy = separable_layer_norm(zero, unit);
  for (double v : zy.v) CHECK(std::isfinite(v));
}
