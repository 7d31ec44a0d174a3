#include "equikernel/so2.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace equikernel {

SO2LinearWeights SO2LinearWeights::make(const IrrepsLayout& in, const IrrepsLayout& out,
                                        int mmax) {
  if (mmax < 0) throw std::invalid_argument("SO2LinearWeights: mmax must be non-negative");
  SO2LinearWeights w;
  w.in = in;
  w.out = out;
  w.mmax = mmax;
  w.w0.assign(static_cast<std::size_t>(in.lmax + 1),
              std::vector<std::vector<double>>(static_cast<std::size_t>(out.lmax + 1)));
  for (int li = 0; li <= in.lmax; ++li)
    for (int lo = 0; lo <= out.lmax; ++lo)
      w.mat0(li, lo).assign(static_cast<std::size_t>(out.ch(lo)) * in.ch(li), 0.0);

  const int mtop = std::min(mmax, std::min(in.lmax, out.lmax));
  w.wp.assign(static_cast<std::size_t>(mtop + 1), {});
  w.wn.assign(static_cast<std::size_t>(mtop + 1), {});
  for (int m = 1; m <= mtop; ++m) {
    auto& pm = w.wp[static_cast<std::size_t>(m)];
    auto& nm = w.wn[static_cast<std::size_t>(m)];
    pm.assign(static_cast<std::size_t>(in.lmax + 1),
              std::vector<std::vector<double>>(static_cast<std::size_t>(out.lmax + 1)));
    nm = pm;
    for (int li = m; li <= in.lmax; ++li)
      for (int lo = m; lo <= out.lmax; ++lo) {
        const std::size_t n = static_cast<std::size_t>(out.ch(lo)) * in.ch(li);
        pm[static_cast<std::size_t>(li)][static_cast<std::size_t>(lo)].assign(n, 0.0);
        nm[static_cast<std::size_t>(li)][static_cast<std::size_t>(lo)].assign(n, 0.0);
      }
  }
  return w;
}

void SO2LinearWeights::init_random(Rng& rng) {
  for (int li = 0; li <= in.lmax; ++li) {
    const double b0 = std::sqrt(3.0 / in.ch(li));
    const double bm = std::sqrt(3.0 / (2.0 * in.ch(li)));
    for (int lo = 0; lo <= out.lmax; ++lo)
      for (double& x : mat0(li, lo)) x = rng.uniform(-b0, b0);
    for (int m = 1; m < static_cast<int>(wp.size()); ++m) {
      if (li < m) continue;
      for (int lo = m; lo <= out.lmax; ++lo) {
        for (double& x : wp[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
                           [static_cast<std::size_t>(lo)])
          x = rng.uniform(-bm, bm);
        for (double& x : wn[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
                           [static_cast<std::size_t>(lo)])
          x = rng.uniform(-bm, bm);
      }
    }
  }
}

IrrepsFeature so2_linear(const IrrepsFeature& x, const SO2LinearWeights& w) {
  if (x.layout != w.in) throw std::invalid_argument("so2_linear: layout mismatch");
  IrrepsFeature y(w.out);

  for (int lo = 0; lo <= w.out.lmax; ++lo) {
    const int co = w.out.ch(lo);
    // m = 0
    for (int li = 0; li <= w.in.lmax; ++li) {
      const int ci = w.in.ch(li);
      const auto& m0 = w.mat0(li, lo);
      const double* src = &x.v[static_cast<std::size_t>(x.index(li, 0, 0))];
      double* dst = &y.v[static_cast<std::size_t>(y.index(lo, 0, 0))];
      for (int o = 0; o < co; ++o) {
        double s = 0.0;
        const double* row = &m0[static_cast<std::size_t>(o) * ci];
        for (int c = 0; c < ci; ++c) s += row[c] * src[c];
        dst[o] += s;
      }
    }
    // m >= 1 pairs
    const int mtop = std::min({w.mmax, lo, w.in.lmax});
    for (int m = 1; m <= mtop; ++m) {
      for (int li = m; li <= w.in.lmax; ++li) {
        const int ci = w.in.ch(li);
        const auto& p = w.wp[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
                            [static_cast<std::size_t>(lo)];
        const auto& q = w.wn[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
                            [static_cast<std::size_t>(lo)];
        const double* xp = &x.v[static_cast<std::size_t>(x.index(li, m, 0))];
        const double* xn = &x.v[static_cast<std::size_t>(x.index(li, -m, 0))];
        double* yp = &y.v[static_cast<std::size_t>(y.index(lo, m, 0))];
        double* yn = &y.v[static_cast<std::size_t>(y.index(lo, -m, 0))];
        for (int o = 0; o < co; ++o) {
          double sp = 0.0, sn = 0.0;
          const double* prow = &p[static_cast<std::size_t>(o) * ci];
          const double* qrow = &q[static_cast<std::size_t>(o) * ci];
          for (int c = 0; c < ci; ++c) {
            sp += prow[c] * xp[c] - qrow[c] * xn[c];
            sn += qrow[c] * xp[c] + prow[c] * xn[c];
          }
          yp[o] += sp;
          yn[o] += sn;
        }
      }
    }
  }
  return y;
}

IrrepsFeature escn_convolution(const IrrepsFeature& x, const Vec3& relative_vector,
                               const SO2LinearWeights& w) {
  if (relative_vector.norm() == 0.0)
    throw std::domain_error("escn_convolution: degenerate edge (zero relative vector)");
  const Rotation align = so3::alignment_rotation(relative_vector.normalized());
  const int lmax = std::max(w.in.lmax, w.out.lmax);
  const auto blocks = so3::wigner_blocks(align, lmax);

  IrrepsFeature aligned = rotate_feature(x, blocks);
  IrrepsFeature msg = so2_linear(aligned, w);

  std::vector<so3::WignerBlock> inv(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) inv[i] = blocks[i].transposed();
  return rotate_feature(msg, inv);
}

SO2LinearWeights reparametrize_weights(const PathWeights& pw, int lmax, int mmax) {
  if (pw.lmax_in != lmax || pw.lmax_out != lmax)
    throw std::invalid_argument("reparametrize_weights: path weights must span lmax");
  const IrrepsLayout layout{lmax, pw.channels, 0};
  SO2LinearWeights w = SO2LinearWeights::make(layout, layout, mmax);

  std::vector<double> inv_norm(static_cast<std::size_t>(lmax + 1), 0.0);
  for (int lo = 0; lo <= lmax; ++lo) {
    int n = pw.n_paths_into(lo);
    inv_norm[static_cast<std::size_t>(lo)] = n > 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : 0.0;
  }

  const int nc = pw.channels;
  for (std::size_t p = 0; p < pw.paths.size(); ++p) {
    const auto [li, lf, lo] = pw.paths[p];
    const so3::CGTensor& cg = so3::clebsch_gordan(li, lf, lo);
    const double norm = inv_norm[static_cast<std::size_t>(lo)];
    const int mtop = std::min({mmax, li, lo});
    for (int m = 0; m <= mtop; ++m) {
      const double c_pos = cg.at(m, 0, m) * norm;   // C^(lo, m)_{(li, m),(lf, 0)}
      const double c_neg = m > 0 ? cg.at(m, 0, -m) * norm : 0.0;
      if (c_pos == 0.0 && c_neg == 0.0) continue;
      for (int ch = 0; ch < nc; ++ch) {
        const double wv = pw.w[p][static_cast<std::size_t>(ch)];
        const std::size_t diag = static_cast<std::size_t>(ch * nc + ch);
        if (m == 0) {
          w.mat0(li, lo)[diag] += wv * c_pos;
        } else {
          w.wp[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
              [static_cast<std::size_t>(lo)][diag] += wv * c_pos;
          w.wn[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
              [static_cast<std::size_t>(lo)][diag] += wv * c_neg;
        }
      }
    }
  }
  return w;
}

}  // namespace equikernel
