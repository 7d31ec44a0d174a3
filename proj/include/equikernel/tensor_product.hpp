#ifndef EQUIKERNEL_TENSOR_PRODUCT_HPP_
#define EQUIKERNEL_TENSOR_PRODUCT_HPP_

#include <vector>

#include "equikernel/irreps.hpp"

namespace equikernel {

// Per-path, per-channel weights for the full tensor-product convolution.
// A path is a triangle-valid (L_i, L_f, L_o) triple with L_i <= lmax_in,
// L_f <= lmax_f, L_o <= lmax_out.
struct PathWeights {
  struct Path {
    int li, lf, lo;
  };

  int lmax_in = 0, lmax_f = 0, lmax_out = 0, channels = 0;
  std::vector<Path> paths;
  std::vector<std::vector<double>> w;  // parallel to paths; each size `channels`

  static PathWeights make(int lmax_in, int lmax_f, int lmax_out, int channels);
  void init_random(Rng& rng);

  // number of (L_i, L_f) pairs feeding output degree lo; used for the
  // 1/sqrt(n) path normalization shared with reparametrize_weights
  int n_paths_into(int lo) const;
};

// Reference SO(3) convolution: per channel,
//   y^(Lo) = 1/sqrt(n_paths(Lo)) * sum_{Li,Lf} w[Li,Lf,Lo] (x^(Li) (x) Y^(Lf)(r^))
// Dense CG loops by intent -- this is the O(Lmax^6) oracle and benchmark
// baseline.
IrrepsFeature so3_convolution(const IrrepsFeature& x, const Vec3& relative_vector,
                              const PathWeights& weights, int lmax_out);

// Same contraction with a caller-supplied sample in place of Y(r^); one
// output channel depends only on the same input channel.
IrrepsFeature depthwise_tensor_product(const IrrepsFeature& x, const so3::SphericalSample& y,
                                       const PathWeights& weights, int lmax_out);

}  // namespace equikernel

#endif  // EQUIKERNEL_TENSOR_PRODUCT_HPP_
