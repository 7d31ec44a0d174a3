#include "equikernel/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace equikernel {

namespace {
// guards the division when a whole degree block is zero; small enough to
// leave unit statistics intact at the 1e-10 level
constexpr double kNormEps = 1e-24;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

S2Grid::S2Grid(int n_lat, int n_lon, int lmax) : n_lat_(n_lat), n_lon_(n_lon), lmax_(lmax) {
  if (lmax < 0) throw std::invalid_argument("S2Grid: lmax must be non-negative");
  if (n_lat < 2 * lmax + 1 || n_lon < 2 * lmax + 1)
    throw std::runtime_error("S2Grid: resolution too low for the requested band limit");

  n_sh_ = static_cast<std::size_t>((lmax + 1) * (lmax + 1));
  points_.reserve(static_cast<std::size_t>(n_lat) * n_lon);
  weights_.reserve(points_.capacity());
  sh_.reserve(points_.capacity() * n_sh_);

  // Fejer (first rule) latitude weights: exact for polynomials in cos(theta)
  // of degree <= n_lat - 1.
  std::vector<double> wlat(static_cast<std::size_t>(n_lat));
  for (int j = 0; j < n_lat; ++j) {
    const double theta = (2.0 * j + 1.0) * kPi / (2.0 * n_lat);
    double s = 0.0;
    for (int k = 1; k <= n_lat / 2; ++k) s += std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
    wlat[static_cast<std::size_t>(j)] = (2.0 / n_lat) * (1.0 - 2.0 * s);
  }

  const double wlon = 2.0 * kPi / n_lon;
  for (int j = 0; j < n_lat; ++j) {
    const double theta = (2.0 * j + 1.0) * kPi / (2.0 * n_lat);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int k = 0; k < n_lon; ++k) {
      const double phi = (2.0 * kPi * k) / n_lon;
      // internal frame (X, Y, Z) -> public (x, y, z) = (Y, Z, X)
      const Vec3 pt{st * std::sin(phi), ct, st * std::cos(phi)};
      points_.push_back(pt);
      weights_.push_back(wlat[static_cast<std::size_t>(j)] * wlon);
      const so3::SphericalSample ylm = so3::spherical_harmonics(pt, lmax);
      sh_.insert(sh_.end(), ylm.v.begin(), ylm.v.end());
    }
  }

  // exactness assertion on the latitude moments actually used
  const int kmax = std::min(n_lat - 1, 2 * lmax);
  for (int k = 0; k <= kmax; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n_lat; ++j) {
      const double t = std::cos((2.0 * j + 1.0) * kPi / (2.0 * n_lat));
      // Legendre P_k(t) by upward recurrence
      double p0 = 1.0, p1 = t;
      if (k == 0)
        acc += wlat[static_cast<std::size_t>(j)];
      else {
        for (int l = 2; l <= k; ++l) {
          const double p2 = ((2.0 * l - 1.0) * t * p1 - (l - 1.0) * p0) / l;
          p0 = p1;
          p1 = p2;
        }
        acc += wlat[static_cast<std::size_t>(j)] * p1;
      }
    }
    const double want = (k == 0) ? 2.0 : 0.0;
    if (std::abs(acc - want) > 1e-12)
      throw std::runtime_error("S2Grid: latitude quadrature failed its exactness check");
  }
}

std::vector<double> s2_project(const IrrepsFeature& x, const S2Grid& grid) {
  if (x.layout.extra0 != 0)
    throw std::invalid_argument("s2_project expects a uniform layout");
  if (x.layout.lmax > grid.lmax())
    throw std::runtime_error("s2_project: grid band limit below feature lmax");
  const int np = grid.n_points();
  const int nc = x.layout.channels;
  const int nsh = (x.layout.lmax + 1) * (x.layout.lmax + 1);
  std::vector<double> samples(static_cast<std::size_t>(np) * nc, 0.0);
  for (int p = 0; p < np; ++p) {
    const double* y = grid.sh_row(p);
    double* dst = &samples[static_cast<std::size_t>(p) * nc];
    for (int i = 0; i < nsh; ++i) {
      const double yv = y[i];
      const double* src = &x.v[static_cast<std::size_t>(i) * nc];
      for (int c = 0; c < nc; ++c) dst[c] += yv * src[c];
    }
  }
  return samples;
}

IrrepsFeature s2_reconstruct(const std::vector<double>& samples, const S2Grid& grid, int lmax,
                             int channels) {
  if (lmax > grid.lmax())
    throw std::runtime_error("s2_reconstruct: grid band limit below requested lmax");
  const int np = grid.n_points();
  if (static_cast<int>(samples.size()) != np * channels)
    throw std::invalid_argument("s2_reconstruct: sample count mismatch");
  IrrepsFeature x(IrrepsLayout{lmax, channels, 0});
  const int nsh = (lmax + 1) * (lmax + 1);
  for (int p = 0; p < np; ++p) {
    const double w = grid.weight(p);
    const double* y = grid.sh_row(p);
    const double* src = &samples[static_cast<std::size_t>(p) * channels];
    for (int i = 0; i < nsh; ++i) {
      const double wy = w * y[i];
      double* dst = &x.v[static_cast<std::size_t>(i) * channels];
      for (int c = 0; c < channels; ++c) dst[c] += wy * src[c];
    }
  }
  // dual normalization: the basis has per-degree norm 4pi/(2L+1)
  for (int L = 0; L <= lmax; ++L) {
    const double scale = (2.0 * L + 1.0) / (4.0 * kPi);
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < channels; ++c) x.at(L, m, c) *= scale;
  }
  return x;
}

IrrepsFeature s2_activation(const IrrepsFeature& x, const PointFunction& f, const S2Grid& grid) {
  std::vector<double> samples = s2_project(x, grid);
  const int nc = x.layout.channels;
  for (int p = 0; p < grid.n_points(); ++p)
    f(&samples[static_cast<std::size_t>(p) * nc], nc);
  return s2_reconstruct(samples, grid, x.layout.lmax, nc);
}

IrrepsFeature separable_s2_activation(const IrrepsFeature& x, const PointFunction& f,
                                      const S2Grid& grid) {
  if (x.layout.extra0 != x.layout.channels)
    throw std::invalid_argument(
        "separable_s2_activation: degree-0 partition mismatch (expects extra0 == channels)");
  const int nc = x.layout.channels;

  IrrepsFeature rest(IrrepsLayout{x.layout.lmax, nc, 0});
  // second scalar part plus all higher degrees
  std::copy(x.v.begin() + x.layout.extra0, x.v.end(), rest.v.begin());
  IrrepsFeature activated = s2_activation(rest, f, grid);

  IrrepsFeature out(IrrepsLayout{x.layout.lmax, nc, 0});
  for (int c = 0; c < nc; ++c) out.at(0, 0, c) = silu(x.v[static_cast<std::size_t>(c)]);
  for (int L = 1; L <= x.layout.lmax; ++L)
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < nc; ++c) out.at(L, m, c) = activated.at(L, m, c);
  return out;
}

IrrepsFeature gate_activation(const IrrepsFeature& x) {
  const int nc = x.layout.channels;
  const int lmax = x.layout.lmax;
  const int total0 = x.layout.ch(0);
  const int n_gates = lmax * nc;
  const int c0_out = total0 - n_gates;
  if (c0_out < 1)
    throw std::invalid_argument("gate_activation: insufficient scalar channels for the gates");
  if (c0_out < nc)
    throw std::invalid_argument(
        "gate_activation: fewer surviving scalars than higher-degree channels");

  IrrepsFeature out(IrrepsLayout{lmax, nc, c0_out - nc});
  for (int c = 0; c < c0_out; ++c)
    out.v[static_cast<std::size_t>(c)] = silu(x.v[static_cast<std::size_t>(c)]);
  for (int L = 1; L <= lmax; ++L)
    for (int c = 0; c < nc; ++c) {
      const double g = sigmoid(x.v[static_cast<std::size_t>(c0_out + (L - 1) * nc + c)]);
      for (int m = -L; m <= L; ++m) out.at(L, m, c) = g * x.at(L, m, c);
    }
  return out;
}

NormParams NormParams::make(const IrrepsLayout& layout) {
  NormParams p;
  p.gamma0.assign(static_cast<std::size_t>(layout.ch(0)), 1.0);
  p.beta0.assign(static_cast<std::size_t>(layout.ch(0)), 0.0);
  p.gamma.resize(static_cast<std::size_t>(layout.lmax));
  for (int L = 1; L <= layout.lmax; ++L)
    p.gamma[static_cast<std::size_t>(L - 1)].assign(static_cast<std::size_t>(layout.channels),
                                                    1.0);
  return p;
}

void NormParams::init_random(Rng& rng) {
  for (double& g : gamma0) g = rng.uniform(0.5, 1.5);
  for (double& b : beta0) b = 0.1 * rng.gaussian();
  for (auto& gl : gamma)
    for (double& g : gl) g = rng.uniform(0.5, 1.5);
}

namespace {

void layer_norm_degree0(const IrrepsFeature& x, const NormParams& p, IrrepsFeature& y) {
  const int n = x.layout.ch(0);
  double mu = 0.0;
  for (int c = 0; c < n; ++c) mu += x.v[static_cast<std::size_t>(c)];
  mu /= n;
  double var = 0.0;
  for (int c = 0; c < n; ++c) {
    const double d = x.v[static_cast<std::size_t>(c)] - mu;
    var += d * d;
  }
  const double inv = 1.0 / std::sqrt(var / n + kNormEps);
  for (int c = 0; c < n; ++c)
    y.v[static_cast<std::size_t>(c)] =
        p.gamma0[static_cast<std::size_t>(c)] * (x.v[static_cast<std::size_t>(c)] - mu) * inv +
        p.beta0[static_cast<std::size_t>(c)];
}

}  // namespace

IrrepsFeature equivariant_layer_norm(const IrrepsFeature& x, const NormParams& p) {
  if (x.layout.extra0 != 0)
    throw std::invalid_argument("equivariant_layer_norm expects a uniform layout");
  IrrepsFeature y(x.layout);
  layer_norm_degree0(x, p, y);
  const int nc = x.layout.channels;
  for (int L = 1; L <= x.layout.lmax; ++L) {
    double acc = 0.0;
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < nc; ++c) acc += x.at(L, m, c) * x.at(L, m, c);
    const double inv = 1.0 / std::sqrt(acc / nc + kNormEps);
    const auto& g = p.gamma[static_cast<std::size_t>(L - 1)];
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < nc; ++c)
        y.at(L, m, c) = g[static_cast<std::size_t>(c)] * x.at(L, m, c) * inv;
  }
  return y;
}

IrrepsFeature separable_layer_norm(const IrrepsFeature& x, const NormParams& p) {
  if (x.layout.extra0 != 0)
    throw std::invalid_argument("separable_layer_norm expects a uniform layout");
  IrrepsFeature y(x.layout);
  layer_norm_degree0(x, p, y);
  const int nc = x.layout.channels;
  const int lmax = x.layout.lmax;
  if (lmax == 0) return y;

  double sigma2 = 0.0;
  for (int L = 1; L <= lmax; ++L) {
    double acc = 0.0;
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < nc; ++c) acc += x.at(L, m, c) * x.at(L, m, c);
    sigma2 += acc / (nc * (2.0 * L + 1.0));
  }
  sigma2 /= lmax;
  const double inv = 1.0 / std::sqrt(sigma2 + kNormEps);
  for (int L = 1; L <= lmax; ++L) {
    const auto& g = p.gamma[static_cast<std::size_t>(L - 1)];
    for (int m = -L; m <= L; ++m)
      for (int c = 0; c < nc; ++c)
        y.at(L, m, c) = g[static_cast<std::size_t>(c)] * x.at(L, m, c) * inv;
  }
  return y;
}

void scalar_layer_norm(double* x, int n, const double* gamma, const double* beta) {
  double mu = 0.0;
  for (int i = 0; i < n; ++i) mu += x[i];
  mu /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = x[i] - mu;
    var += d * d;
  }
  const double inv = 1.0 / std::sqrt(var / n + kNormEps);
  for (int i = 0; i < n; ++i) x[i] = gamma[i] * (x[i] - mu) * inv + beta[i];
}

}  // namespace equikernel
