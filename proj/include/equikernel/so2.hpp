#ifndef EQUIKERNEL_SO2_HPP_
#define EQUIKERNEL_SO2_HPP_

#include <vector>

#include "equikernel/irreps.hpp"
#include "equikernel/tensor_product.hpp"

namespace equikernel {

// Weights of an SO(2) linear layer acting on features in the aligned (gauge)
// frame.  For each input/output degree pair and each order m <= mmax there is
// one channel-mixing matrix per structural slot:
//
//   m = 0:   y_0  =  W0 x_0
//   m >= 1:  y_m  =  Wp x_m - Wn x_-m
//            y_-m =  Wn x_m + Wp x_-m
//
// which is complex multiplication on the (m, -m) pair and therefore commutes
// with rotations about the alignment axis.  Orders above mmax produce zero.
struct SO2LinearWeights {
  IrrepsLayout in, out;
  int mmax = 0;

  // mat(m=0): indexed [li][lo]; mat(m>=1): wp/wn indexed [m][li][lo] with
  // li, lo >= m.  Each matrix is row-major out.ch(lo) x in.ch(li); matrices
  // outside the valid range stay empty.
  std::vector<std::vector<std::vector<double>>> w0;
  std::vector<std::vector<std::vector<std::vector<double>>>> wp, wn;

  static SO2LinearWeights make(const IrrepsLayout& in, const IrrepsLayout& out, int mmax);
  void init_random(Rng& rng);

  std::vector<double>& mat0(int li, int lo) {
    return w0[static_cast<std::size_t>(li)][static_cast<std::size_t>(lo)];
  }
  const std::vector<double>& mat0(int li, int lo) const {
    return w0[static_cast<std::size_t>(li)][static_cast<std::size_t>(lo)];
  }
};

IrrepsFeature so2_linear(const IrrepsFeature& x_aligned, const SO2LinearWeights& w);

// Full eSCN convolution: rotate into the frame where the edge direction is
// the y axis, apply the SO(2) linear layer, rotate back.
IrrepsFeature escn_convolution(const IrrepsFeature& x, const Vec3& relative_vector,
                               const SO2LinearWeights& w);

// Bridge to the SO(3) oracle: collapse the L_f sum of path weights into
// channel-diagonal SO(2) blocks,
//   w~(+m) = sum_Lf w[Li,Lf,Lo]/sqrt(n_paths(Lo)) C^(Lo, m)_{(Li, m),(Lf,0)}
//   w~(-m) = sum_Lf w[Li,Lf,Lo]/sqrt(n_paths(Lo)) C^(Lo,-m)_{(Li, m),(Lf,0)}
// The m = 0 slot keeps the single scalar per channel.
SO2LinearWeights reparametrize_weights(const PathWeights& path_weights, int lmax, int mmax);

}  // namespace equikernel

#endif  // EQUIKERNEL_SO2_HPP_
