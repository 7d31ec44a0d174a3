#include "equikernel/tensor_product.hpp"

#include <cmath>
#include <stdexcept>

namespace equikernel {

PathWeights PathWeights::make(int lmax_in, int lmax_f, int lmax_out, int channels) {
  if (lmax_in < 0 || lmax_f < 0 || lmax_out < 0 || channels <= 0)
    throw std::invalid_argument("PathWeights: invalid dimensions");
  PathWeights pw;
  pw.lmax_in = lmax_in;
  pw.lmax_f = lmax_f;
  pw.lmax_out = lmax_out;
  pw.channels = channels;
  for (int li = 0; li <= lmax_in; ++li)
    for (int lf = 0; lf <= lmax_f; ++lf)
      for (int lo = 0; lo <= lmax_out; ++lo)
        if (lo >= std::abs(li - lf) && lo <= li + lf) {
          pw.paths.push_back({li, lf, lo});
          pw.w.emplace_back(static_cast<std::size_t>(channels), 0.0);
        }
  return pw;
}

void PathWeights::init_random(Rng& rng) {
  for (auto& pv : w)
    for (double& x : pv) x = rng.uniform(-1.0, 1.0);
}

int PathWeights::n_paths_into(int lo) const {
  int n = 0;
  for (const auto& p : paths)
    if (p.lo == lo) ++n;
  return n;
}

namespace {

IrrepsFeature contract_paths(const IrrepsFeature& x, const so3::SphericalSample& y,
                             const PathWeights& weights, int lmax_out) {
  if (x.layout.extra0 != 0)
    throw std::invalid_argument("tensor product expects a uniform layout (no extra scalars)");
  if (x.layout.lmax != weights.lmax_in || x.layout.channels != weights.channels)
    throw std::invalid_argument("tensor product: feature/weight layout mismatch");
  if (y.lmax < weights.lmax_f)
    throw std::invalid_argument("tensor product: spherical sample does not cover lmax_f");

  IrrepsFeature out(IrrepsLayout{lmax_out, x.layout.channels, 0});
  const int nc = x.layout.channels;

  std::vector<double> inv_norm(static_cast<std::size_t>(lmax_out + 1), 0.0);
  for (int lo = 0; lo <= lmax_out; ++lo) {
    int n = weights.n_paths_into(lo);
    inv_norm[static_cast<std::size_t>(lo)] = n > 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : 0.0;
  }

  for (std::size_t p = 0; p < weights.paths.size(); ++p) {
    const auto [li, lf, lo] = weights.paths[p];
    if (lo > lmax_out) continue;  // degrees above lmax_out discarded
    const so3::CGTensor& cg = so3::clebsch_gordan(li, lf, lo);
    const double norm = inv_norm[static_cast<std::size_t>(lo)];
    const std::vector<double>& wp = weights.w[p];
    for (int m1 = -li; m1 <= li; ++m1)
      for (int m2 = -lf; m2 <= lf; ++m2)
        for (int m3 = -lo; m3 <= lo; ++m3) {
          const double c = cg.at(m1, m2, m3);
          const double cy = c * y.at(lf, m2) * norm;
          const double* src = &x.v[static_cast<std::size_t>(x.index(li, m1, 0))];
          double* dst = &out.v[static_cast<std::size_t>(out.index(lo, m3, 0))];
          for (int ch = 0; ch < nc; ++ch) dst[ch] += wp[static_cast<std::size_t>(ch)] * cy * src[ch];
        }
  }
  return out;
}

}  // namespace

IrrepsFeature so3_convolution(const IrrepsFeature& x, const Vec3& relative_vector,
                              const PathWeights& weights, int lmax_out) {
  if (relative_vector.norm() == 0.0)
    throw std::domain_error("so3_convolution: degenerate edge (zero relative vector)");
  const so3::SphericalSample y =
      so3::spherical_harmonics(relative_vector.normalized(), weights.lmax_f);
  return contract_paths(x, y, weights, lmax_out);
}

IrrepsFeature depthwise_tensor_product(const IrrepsFeature& x, const so3::SphericalSample& y,
                                       const PathWeights& weights, int lmax_out) {
  return contract_paths(x, y, weights, lmax_out);
}

}  // namespace equikernel
