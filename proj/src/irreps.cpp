#include "equikernel/irreps.hpp"

#include <cmath>
#include <stdexcept>

namespace equikernel {

IrrepsFeature rotate_feature(const IrrepsFeature& x, const std::vector<so3::WignerBlock>& d) {
  if (static_cast<int>(d.size()) < x.layout.lmax + 1)
    throw std::invalid_argument("rotate_feature: not enough Wigner blocks for layout");
  IrrepsFeature y(x.layout);
  const int c0 = x.layout.ch(0);
  for (int c = 0; c < c0; ++c) y.at(0, 0, c) = x.at(0, 0, c);
  for (int L = 1; L <= x.layout.lmax; ++L) {
    const auto& blk = d[static_cast<std::size_t>(L)];
    const int ch = x.layout.ch(L);
    for (int mr = -L; mr <= L; ++mr)
      for (int mc = -L; mc <= L; ++mc) {
        const double w = blk.at(mr, mc);
        if (w == 0.0) continue;
        const double* src = &x.v[static_cast<std::size_t>(x.index(L, mc, 0))];
        double* dst = &y.v[static_cast<std::size_t>(y.index(L, mr, 0))];
        for (int c = 0; c < ch; ++c) dst[c] += w * src[c];
      }
  }
  return y;
}

IrrepsFeature rotate_feature(const IrrepsFeature& x, const Rotation& r) {
  return rotate_feature(x, so3::wigner_blocks(r, x.layout.lmax));
}

LinearWeights LinearWeights::make(const IrrepsLayout& in, const IrrepsLayout& out) {
  if (out.lmax > in.lmax)
    throw std::invalid_argument("equivariant_linear cannot create degrees absent in the input");
  LinearWeights lw;
  lw.in = in;
  lw.out = out;
  lw.w.resize(static_cast<std::size_t>(out.lmax + 1));
  for (int L = 0; L <= out.lmax; ++L)
    lw.w[static_cast<std::size_t>(L)].assign(
        static_cast<std::size_t>(out.ch(L)) * in.ch(L), 0.0);
  lw.bias0.assign(static_cast<std::size_t>(out.ch(0)), 0.0);
  return lw;
}

LinearWeights LinearWeights::identity(const IrrepsLayout& layout) {
  LinearWeights lw = make(layout, layout);
  for (int L = 0; L <= layout.lmax; ++L) {
    const int n = layout.ch(L);
    for (int c = 0; c < n; ++c) lw.w[static_cast<std::size_t>(L)][static_cast<std::size_t>(c * n + c)] = 1.0;
  }
  return lw;
}

void LinearWeights::init_random(Rng& rng) {
  for (int L = 0; L <= out.lmax; ++L) {
    const double bound = std::sqrt(3.0 / in.ch(L));
    for (double& x : w[static_cast<std::size_t>(L)]) x = rng.uniform(-bound, bound);
  }
  for (double& b : bias0) b = 0.0;
}

IrrepsFeature equivariant_linear(const IrrepsFeature& x, const LinearWeights& wts) {
  if (x.layout != wts.in) throw std::invalid_argument("equivariant_linear: layout mismatch");
  IrrepsFeature y(wts.out);
  for (int L = 0; L <= wts.out.lmax; ++L) {
    const int ci = wts.in.ch(L);
    const int co = wts.out.ch(L);
    const auto& m = wts.w[static_cast<std::size_t>(L)];
    for (int mm = -L; mm <= L; ++mm) {
      const double* src = &x.v[static_cast<std::size_t>(x.index(L, mm, 0))];
      double* dst = &y.v[static_cast<std::size_t>(y.index(L, mm, 0))];
      for (int o = 0; o < co; ++o) {
        double s = 0.0;
        const double* row = &m[static_cast<std::size_t>(o) * ci];
        for (int c = 0; c < ci; ++c) s += row[c] * src[c];
        dst[o] = s;
      }
    }
  }
  for (int o = 0; o < wts.out.ch(0); ++o) y.at(0, 0, o) += wts.bias0[static_cast<std::size_t>(o)];
  return y;
}

}  // namespace equikernel
