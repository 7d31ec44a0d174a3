#include "equikernel/so3.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>

namespace equikernel::so3 {

namespace {

constexpr int kMaxDegree = 24;

std::atomic<bool> g_corrupt_cg{false};

// Factorials in extended precision; Racah sums for combined degree up to
// 3 * kMaxDegree stay well inside long double range.
long double factorial(int n) {
  static const std::vector<long double> table = [] {
    std::vector<long double> t(3 * kMaxDegree + 4, 1.0L);
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<long double>(i);
    return t;
  }();
  return table[static_cast<std::size_t>(n)];
}

// Condon-Shortley Clebsch-Gordan coefficient <l1 m1 l2 m2 | l3 m3> via
// Racah's closed form.
long double cg_complex(int l1, int m1, int l2, int m2, int l3, int m3) {
  if (m1 + m2 != m3) return 0.0L;
  if (l3 < std::abs(l1 - l2) || l3 > l1 + l2) return 0.0L;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m3) > l3) return 0.0L;

  long double pref = (2.0L * l3 + 1.0L) * factorial(l3 + l1 - l2) * factorial(l3 - l1 + l2) *
                     factorial(l1 + l2 - l3) / factorial(l1 + l2 + l3 + 1);
  pref *= factorial(l3 + m3) * factorial(l3 - m3) /
          (factorial(l1 - m1) * factorial(l1 + m1) * factorial(l2 - m2) * factorial(l2 + m2));
  pref = std::sqrt(pref);

  int nmin = std::max(0, -(l1 - l2 - m3));
  int nmax = std::min(l3 - l1 + l2, l3 + m3);

  long double sum = 0.0L;
  for (int n = nmin; n <= nmax; ++n) {
    long double term = factorial(l2 + l3 + m1 - n) * factorial(l1 - m1 + n) /
                       (factorial(n) * factorial(l3 - l1 + l2 - n) * factorial(l3 + m3 - n) *
                        factorial(n + l1 - l2 - m3));
    sum += ((n + l2 + m2) % 2 == 0 ? term : -term);
  }
  return pref * sum;
}

// Unitary change of basis from Condon-Shortley complex SH to the real basis
// (rows m, columns mu; nonzero only for |mu| == |m|).
std::complex<double> real_basis_u(int m, int mu) {
  const double inv_sqrt2 = 0.70710678118654752440084436210485;
  if (m == 0) return (mu == 0) ? std::complex<double>(1.0, 0.0) : 0.0;
  if (std::abs(mu) != std::abs(m)) return 0.0;
  const double cs = (std::abs(m) % 2 == 0) ? 1.0 : -1.0;
  if (m > 0) {
    if (mu == m) return std::complex<double>(cs * inv_sqrt2, 0.0);
    return std::complex<double>(inv_sqrt2, 0.0);  // mu == -m
  }
  // m < 0
  if (mu == -m) return std::complex<double>(0.0, -cs * inv_sqrt2);
  return std::complex<double>(0.0, inv_sqrt2);  // mu == m
}

CGTensor build_cg(int l1, int l2, int l3) {
  CGTensor t;
  t.l1 = l1;
  t.l2 = l2;
  t.l3 = l3;
  const int n1 = 2 * l1 + 1, n2 = 2 * l2 + 1, n3 = 2 * l3 + 1;
  t.c.assign(static_cast<std::size_t>(n1) * n2 * n3, 0.0);
  if (l3 < std::abs(l1 - l2) || l3 > l1 + l2) return t;  // selection rule: all zero

  std::vector<std::complex<double>> cx(t.c.size());
  for (int m1 = -l1; m1 <= l1; ++m1)
    for (int m2 = -l2; m2 <= l2; ++m2)
      for (int m3 = -l3; m3 <= l3; ++m3) {
        std::complex<double> acc = 0.0;
        const int u1s[2] = {m1, -m1};
        const int u2s[2] = {m2, -m2};
        for (int a = 0; a < (m1 == 0 ? 1 : 2); ++a)
          for (int b = 0; b < (m2 == 0 ? 1 : 2); ++b) {
            int mu1 = u1s[a], mu2 = u2s[b];
            int mu3 = mu1 + mu2;
            if (std::abs(mu3) != std::abs(m3)) continue;
            std::complex<double> u =
                std::conj(real_basis_u(m1, mu1)) * std::conj(real_basis_u(m2, mu2)) *
                real_basis_u(m3, mu3);
            acc += u * static_cast<double>(cg_complex(l1, mu1, l2, mu2, l3, mu3));
          }
        cx[static_cast<std::size_t>(((m1 + l1) * n2 + (m2 + l2)) * n3 + (m3 + l3))] = acc;
      }

  // The transformed tensor is purely real for even l1+l2+l3 and purely
  // imaginary otherwise; peel off the phase so storage is real.
  double max_re = 0.0, max_im = 0.0;
  for (const auto& z : cx) {
    max_re = std::max(max_re, std::abs(z.real()));
    max_im = std::max(max_im, std::abs(z.imag()));
  }
  const bool use_imag = max_im > max_re;
  const double mag = std::max(max_re, max_im);
  if (mag > 0.0 && std::min(max_re, max_im) > 1e-10 * mag)
    throw std::logic_error("real-basis CG tensor is neither purely real nor purely imaginary");
  for (std::size_t i = 0; i < cx.size(); ++i) t.c[i] = use_imag ? cx[i].imag() : cx[i].real();

  // canonical global sign: first nonzero entry positive
  for (double x : t.c) {
    if (std::abs(x) > 1e-12) {
      if (x < 0.0)
        for (double& y : t.c) y = -y;
      break;
    }
  }

  for (std::size_t i = 0; i < t.c.size(); ++i) {
    if (std::abs(t.c[i]) < 1e-14) {
      t.c[i] = 0.0;
      continue;
    }
    int rem = static_cast<int>(i);
    int m3 = rem % n3 - l3;
    rem /= n3;
    int m2 = rem % n2 - l2;
    int m1 = rem / n2 - l1;
    t.nonzeros.push_back({m1, m2, m3, t.c[i]});
  }

  // non-uniform perturbation: a global rescale would be absorbed by the
  // orthonormalization downstream, a sliced one breaks the intertwiner
  if (g_corrupt_cg.load(std::memory_order_relaxed) && l1 == 1 && l2 == 1 && l3 == 2) {
    for (auto& e : t.nonzeros)
      if (e.m1 == 1) e.value *= 1.05;
    for (int m2 = -l2; m2 <= l2; ++m2)
      for (int m3 = -l3; m3 <= l3; ++m3)
        t.c[static_cast<std::size_t>(((1 + l1) * (2 * l2 + 1) + (m2 + l2)) * (2 * l3 + 1) +
                                     (m3 + l3))] *= 1.05;
  }
  return t;
}

std::shared_mutex g_cg_mutex;
std::map<int, CGTensor> g_cg_cache;

int cg_key(int l1, int l2, int l3) { return (l1 * (kMaxDegree + 1) + l2) * (kMaxDegree + 1) + l3; }

// Associated Legendre P_l^m(t) without Condon-Shortley phase, for all
// l <= lmax at fixed m; s = sqrt(1 - t^2).
void legendre_column(int m, int lmax, double t, double s, std::vector<double>& p) {
  p.assign(static_cast<std::size_t>(lmax + 1), 0.0);
  if (m > lmax) return;
  double pmm = 1.0;
  for (int k = 1; k <= m; ++k) pmm *= (2.0 * k - 1.0) * s;
  p[static_cast<std::size_t>(m)] = pmm;
  if (m + 1 <= lmax) p[static_cast<std::size_t>(m + 1)] = t * (2.0 * m + 1.0) * pmm;
  for (int l = m + 2; l <= lmax; ++l)
    p[static_cast<std::size_t>(l)] =
        (t * (2.0 * l - 1.0) * p[static_cast<std::size_t>(l - 1)] -
         (l + m - 1.0) * p[static_cast<std::size_t>(l - 2)]) /
        (l - m);
}

}  // namespace

namespace testing {
void corrupt_cg(bool enable) { g_corrupt_cg.store(enable, std::memory_order_relaxed); }
}  // namespace testing

const CGTensor& clebsch_gordan(int l1, int l2, int l3) {
  if (l1 < 0 || l2 < 0 || l3 < 0) throw std::invalid_argument("CG degrees must be non-negative");
  if (l1 > kMaxDegree || l2 > kMaxDegree || l3 > kMaxDegree)
    throw std::invalid_argument("CG degree beyond supported maximum (24)");
  const int key = cg_key(l1, l2, l3);
  {
    std::shared_lock lock(g_cg_mutex);
    auto it = g_cg_cache.find(key);
    if (it != g_cg_cache.end()) return it->second;
  }
  CGTensor t = build_cg(l1, l2, l3);
  std::unique_lock lock(g_cg_mutex);
  return g_cg_cache.emplace(key, std::move(t)).first->second;
}

SphericalSample spherical_harmonics(const Vec3& direction, int lmax) {
  if (lmax < 0) throw std::invalid_argument("lmax must be non-negative");
  if (lmax > 20) throw std::invalid_argument("lmax beyond supported maximum (20)");
  const double n = direction.norm();
  if (std::abs(n - 1.0) > 1e-9)
    throw std::domain_error("spherical_harmonics requires a unit direction");

  // internal frame: principal axis Z = y, with (X, Y) = (z, x)
  const double X = direction.z, Y = direction.x, Z = direction.y;
  const double t = std::clamp(Z, -1.0, 1.0);
  const double rho = std::sqrt(std::max(0.0, X * X + Y * Y));
  const double cphi = rho > 0.0 ? X / rho : 1.0;
  const double sphi = rho > 0.0 ? Y / rho : 0.0;

  SphericalSample out;
  out.lmax = lmax;
  out.v.assign(static_cast<std::size_t>((lmax + 1) * (lmax + 1)), 0.0);

  std::vector<double> p;
  double cm = 1.0, sm = 0.0;  // cos(m phi), sin(m phi)
  for (int m = 0; m <= lmax; ++m) {
    legendre_column(m, lmax, t, rho, p);
    if (m > 0) {
      double c_next = cm * cphi - sm * sphi;
      double s_next = sm * cphi + cm * sphi;
      cm = c_next;
      sm = s_next;
    }
    for (int l = std::max(m, 0); l <= lmax; ++l) {
      if (m == 0) {
        out.at(l, 0) = p[static_cast<std::size_t>(l)];
      } else {
        double scale = std::sqrt(2.0 * static_cast<double>(factorial(l - m) / factorial(l + m)));
        double base = scale * p[static_cast<std::size_t>(l)];
        out.at(l, m) = base * cm;
        out.at(l, -m) = base * sm;
      }
    }
  }
  return out;
}

std::vector<WignerBlock> wigner_blocks(const Rotation& r, int lmax) {
  if (lmax < 0) throw std::invalid_argument("lmax must be non-negative");
  if (lmax > 20) throw std::invalid_argument("lmax beyond supported maximum (20)");

  std::vector<WignerBlock> d(static_cast<std::size_t>(lmax + 1));
  d[0].degree = 0;
  d[0].m = {1.0};
  if (lmax == 0) return d;

  // degree 1 transforms the (x, y, z) components directly
  const Mat3& m = r.matrix();
  d[1].degree = 1;
  d[1].m.assign(9, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d[1].at(i - 1, j - 1) = m(i, j);

  for (int L = 2; L <= lmax; ++L) {
    const CGTensor& cg = clebsch_gordan(L - 1, 1, L);
    const WignerBlock& a = d[static_cast<std::size_t>(L - 1)];
    const WignerBlock& b = d[1];
    WignerBlock& out = d[static_cast<std::size_t>(L)];
    out.degree = L;
    const int dim = 2 * L + 1;
    out.m.assign(static_cast<std::size_t>(dim) * dim, 0.0);

    // T[(m1+l1)*3 + (m2+1)][k] = sum over CG nonzeros of rotated pair blocks
    const int na = 2 * L - 1;
    std::vector<double> tmp(static_cast<std::size_t>(na) * 3 * dim, 0.0);
    for (const auto& e : cg.nonzeros) {
      // e couples (n1, n2) -> k: accumulate D^(L-1)_{m1,n1} D^(1)_{m2,n2} C
      for (int m1 = -(L - 1); m1 <= L - 1; ++m1) {
        const double a1 = a.at(m1, e.m1);
        if (a1 == 0.0) continue;
        const double av = a1 * e.value;
        for (int m2 = -1; m2 <= 1; ++m2) {
          const double b1 = b.at(m2, e.m2);
          if (b1 == 0.0) continue;
          tmp[static_cast<std::size_t>(((m1 + L - 1) * 3 + (m2 + 1)) * dim + (e.m3 + L))] +=
              av * b1;
        }
      }
    }
    // project back: D^(L)_{m3,k} = sum_{m1,m2} C_{m1,m2,m3} T[(m1,m2)][k]
    for (const auto& e : cg.nonzeros) {
      const double* row =
          &tmp[static_cast<std::size_t>(((e.m1 + L - 1) * 3 + (e.m2 + 1)) * dim)];
      double* dst = &out.m[static_cast<std::size_t>((e.m3 + L) * dim)];
      for (int k = 0; k < dim; ++k) dst[k] += e.value * row[k];
    }

    // row Gram-Schmidt keeps the block orthogonal as the recursion deepens
    for (int i = 0; i < dim; ++i) {
      double* ri = &out.m[static_cast<std::size_t>(i) * dim];
      for (int j = 0; j < i; ++j) {
        const double* rj = &out.m[static_cast<std::size_t>(j) * dim];
        double dot = 0.0;
        for (int k = 0; k < dim; ++k) dot += ri[k] * rj[k];
        for (int k = 0; k < dim; ++k) ri[k] -= dot * rj[k];
      }
      double nrm = 0.0;
      for (int k = 0; k < dim; ++k) nrm += ri[k] * ri[k];
      nrm = std::sqrt(nrm);
      for (int k = 0; k < dim; ++k) ri[k] /= nrm;
    }
  }
  return d;
}

WignerBlock wigner_d(const Rotation& r, int degree) {
  auto blocks = wigner_blocks(r, degree);
  return std::move(blocks[static_cast<std::size_t>(degree)]);
}

Rotation alignment_rotation(const Vec3& direction) {
  const double n = direction.norm();
  if (n == 0.0) throw std::invalid_argument("alignment_rotation: zero-length direction");
  if (std::abs(n - 1.0) > 1e-9)
    throw std::domain_error("alignment_rotation requires a unit direction");

  const Vec3 yhat{0.0, 1.0, 0.0};
  const double c = direction.dot(yhat);
  if (c > 1.0 - 1e-12) return Rotation::identity();
  if (c < -1.0 + 1e-12) return Rotation::about_axis({1.0, 0.0, 0.0}, 3.14159265358979323846);
  const Vec3 axis = direction.cross(yhat);
  return Rotation::about_axis(axis, std::atan2(axis.norm(), c));
}

}  // namespace equikernel::so3
