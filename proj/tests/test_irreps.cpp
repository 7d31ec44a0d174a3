#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "equikernel/tensor_product.hpp"

using namespace equikernel;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Vec3 random_unit(Rng& rng) {
  Vec3 v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
  while (v.norm() < 1e-3) v = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
  return v.normalized();
}

}  // namespace

TEST_CASE("layout bookkeeping") {
  IrrepsLayout l{3, 5, 2};
  CHECK(l.total() == 2 + 16 * 5);
  CHECK(l.ch(0) == 7);
  CHECK(l.ch(2) == 5);
  IrrepsFeature f(l);
  CHECK(static_cast<int>(f.v.size()) == l.total());
  f.at(3, 3, 4) = 1.0;
  CHECK(f.v.back() == 1.0);

  IrrepsLayout uniform{2, 4, 0};
  CHECK(uniform.total() == 9 * 4);
}

TEST_CASE("identity weights with zero bias are a no-op") {
  Rng rng(1);
  IrrepsFeature x(IrrepsLayout{3, 4, 0});
  x.fill_random(rng);
  LinearWeights id = LinearWeights::identity(x.layout);
  IrrepsFeature y = equivariant_linear(x, id);
  CHECK(max_abs_diff(x.v, y.v) == 0.0);
}

TEST_CASE("equivariant linear commutes with rotations") {
  Rng rng(2);
  const IrrepsLayout layout{3, 4, 0};
  LinearWeights w = LinearWeights::make(layout, IrrepsLayout{3, 6, 0});
  w.init_random(rng);
  for (double& b : w.bias0) b = rng.gaussian();
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature x(layout);
    x.fill_random(rng);
    const Rotation r = Rotation::random(rng);
    IrrepsFeature lhs = equivariant_linear(rotate_feature(x, r), w);
    IrrepsFeature rhs = rotate_feature(equivariant_linear(x, w), r);
    err = std::max(err, max_abs_diff(lhs.v, rhs.v));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("degree-0-only layout reduces to an ordinary affine map") {
  Rng rng(3);
  const IrrepsLayout layout{0, 3, 0};
  LinearWeights w = LinearWeights::make(layout, layout);
  w.init_random(rng);
  for (double& b : w.bias0) b = rng.gaussian();
  IrrepsFeature x(layout);
  x.fill_random(rng);
  IrrepsFeature y = equivariant_linear(x, w);
  for (int o = 0; o < 3; ++o) {
    double s = w.bias0[static_cast<std::size_t>(o)];
    for (int c = 0; c < 3; ++c)
      s += w.w[0][static_cast<std::size_t>(o * 3 + c)] * x.v[static_cast<std::size_t>(c)];
    CHECK(y.v[static_cast<std::size_t>(o)] == doctest::Approx(s).epsilon(1e-14));
  }
}

TEST_CASE("linear rejects mismatched layouts") {
  LinearWeights w = LinearWeights::make(IrrepsLayout{2, 4, 0}, IrrepsLayout{2, 4, 0});
  IrrepsFeature x(IrrepsLayout{2, 5, 0});
  CHECK_THROWS_AS(equivariant_linear(x, w), std::invalid_argument);
}

TEST_CASE("so3 convolution is zero on zero input and linear in x") {
  Rng rng(4);
  PathWeights pw = PathWeights::make(2, 4, 2, 3);
  pw.init_random(rng);
  const Vec3 rel = random_unit(rng) * 1.7;

  IrrepsFeature zero(IrrepsLayout{2, 3, 0});
  IrrepsFeature out = so3_convolution(zero, rel, pw, 2);
  for (double v : out.v) CHECK(v == 0.0);

  IrrepsFeature a(IrrepsLayout{2, 3, 0}), b(IrrepsLayout{2, 3, 0});
  a.fill_random(rng);
  b.fill_random(rng);
  IrrepsFeature sum(a.layout);
  for (std::size_t i = 0; i < sum.v.size(); ++i) sum.v[i] = 2.0 * a.v[i] - 3.0 * b.v[i];
  IrrepsFeature ya = so3_convolution(a, rel, pw, 2);
  IrrepsFeature yb = so3_convolution(b, rel, pw, 2);
  IrrepsFeature ys = so3_convolution(sum, rel, pw, 2);
  double err = 0.0;
  for (std::size_t i = 0; i < ys.v.size(); ++i)
    err = std::max(err, std::abs(ys.v[i] - (2.0 * ya.v[i] - 3.0 * yb.v[i])));
  CHECK(err < 1e-10);
}

TEST_CASE("degree-zero-everywhere convolution is a scaled copy") {
  Rng rng(5);
  PathWeights pw = PathWeights::make(0, 0, 0, 4);
  pw.init_random(rng);
  IrrepsFeature x(IrrepsLayout{0, 4, 0});
  x.fill_random(rng);
  IrrepsFeature y = so3_convolution(x, {0.3, -0.2, 1.1}, pw, 0);
  // single path (0,0,0): normalization 1, C(0,0,0) = 1, Y0 = 1
  for (int c = 0; c < 4; ++c)
    CHECK(y.at(0, 0, c) ==
          doctest::Approx(pw.w[0][static_cast<std::size_t>(c)] * x.at(0, 0, c)).epsilon(1e-13));
}

TEST_CASE("so3 convolution rejects zero relative vectors") {
  PathWeights pw = PathWeights::make(1, 2, 1, 2);
  IrrepsFeature x(IrrepsLayout{1, 2, 0});
  CHECK_THROWS_AS(so3_convolution(x, {0.0, 0.0, 0.0}, pw, 1), std::domain_error);
}

TEST_CASE("so3 convolution is equivariant as a two-argument map") {
  Rng rng(6);
  PathWeights pw = PathWeights::make(2, 4, 2, 4);
  pw.init_random(rng);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature x(IrrepsLayout{2, 4, 0});
    x.fill_random(rng);
    const Vec3 rel = random_unit(rng) * rng.uniform(0.5, 2.0);
    const Rotation r = Rotation::random(rng);
    IrrepsFeature lhs = so3_convolution(rotate_feature(x, r), r * rel, pw, 2);
    IrrepsFeature rhs = rotate_feature(so3_convolution(x, rel, pw, 2), r);
    err = std::max(err, max_abs_diff(lhs.v, rhs.v));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("truncation discards degrees above lmax_out") {
  Rng rng(7);
  PathWeights pw = PathWeights::make(2, 4, 2, 3);
  pw.init_random(rng);
  IrrepsFeature x(IrrepsLayout{2, 3, 0});
  x.fill_random(rng);
  IrrepsFeature y = so3_convolution(x, random_unit(rng), pw, 1);
  CHECK(y.layout.lmax == 1);
  CHECK(static_cast<int>(y.v.size()) == 4 * 3);
}

TEST_CASE("depthwise product with one channel equals the convolution") {
  Rng rng(8);
  PathWeights pw = PathWeights::make(2, 4, 2, 1);
  pw.init_random(rng);
  IrrepsFeature x(IrrepsLayout{2, 1, 0});
  x.fill_random(rng);
  const Vec3 rel = random_unit(rng) * 0.9;
  IrrepsFeature via_conv = so3_convolution(x, rel, pw, 2);
  IrrepsFeature via_dtp =
      depthwise_tensor_product(x, so3::spherical_harmonics(rel.normalized(), 4), pw, 2);
  CHECK(max_abs_diff(via_conv.v, via_dtp.v) < 1e-14);
}

TEST_CASE("depthwise product is equivariant") {
  Rng rng(9);
  PathWeights pw = PathWeights::make(2, 3, 2, 5);
  pw.init_random(rng);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    IrrepsFeature x(IrrepsLayout{2, 5, 0});
    x.fill_random(rng);
    const Vec3 dir = random_unit(rng);
    const Rotation r = Rotation::random(rng);
    IrrepsFeature lhs = depthwise_tensor_product(
        rotate_feature(x, r), so3::spherical_harmonics(r * dir, 3), pw, 2);
    IrrepsFeature rhs =
        rotate_feature(depthwise_tensor_product(x, so3::spherical_harmonics(dir, 3), pw, 2), r);
    err = std::max(err, max_abs_diff(lhs.v, rhs.v));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("single active path occupies only the permitted degree") {
  PathWeights pw = PathWeights::make(2, 2, 2, 2);
  for (std::size_t p = 0; p < pw.paths.size(); ++p) {
    const bool on = pw.paths[p].li == 1 && pw.paths[p].lf == 1 && pw.paths[p].lo == 2;
    for (double& wv : pw.w[p]) wv = on ? 1.0 : 0.0;
  }
  Rng rng(10);
  IrrepsFeature x(IrrepsLayout{2, 2, 0});
  x.fill_random(rng);
  IrrepsFeature y =
      depthwise_tensor_product(x, so3::spherical_harmonics(random_unit(rng), 2), pw, 2);
  for (int L = 0; L <= 1; ++L)
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < 2; ++c) CHECK(y.at(L, m, c) == 0.0);
  double energy = 0.0;
  for (int m = -2; m <= 2; ++m)
    for (int c = 0; c < 2; ++c) energy += std::abs(y.at(2, m, c));
  CHECK(energy > 1e-6);
}

TEST_CASE("depthwise product rejects channel mismatch") {
  PathWeights pw = PathWeights::make(2, 2, 2, 3);
  IrrepsFeature x(IrrepsLayout{2, 4, 0});
  CHECK_THROWS_AS(depthwise_tensor_product(x, so3::spherical_harmonics({0, 1, 0}, 2), pw, 2),
                  std::invalid_argument);
}
