#ifndef EQUIKERNEL_IRREPS_HPP_
#define EQUIKERNEL_IRREPS_HPP_

#include <vector>

#include "equikernel/rng.hpp"
#include "equikernel/so3.hpp"

namespace equikernel {

// Shape of an irreps feature: `channels` type-L vectors for every degree
// 0..lmax, plus `extra0` additional scalar channels (gate / attention
// scalars).  Flat storage is degree-major with order-major blocks inside a
// degree and channels contiguous:
//
//   [ degree 0, m = 0, c = 0..ch(0) )
//   [ degree 1, m = -1..1, c = 0..ch(1) )  ...
//
// where ch(0) = extra0 + channels and ch(L>=1) = channels.  The extra scalars
// occupy the first extra0 slots of the degree-0 block.
struct IrrepsLayout {
  int lmax = 0;
  int channels = 0;
  int extra0 = 0;

  int ch(int L) const { return L == 0 ? extra0 + channels : channels; }
  int dim(int L) const { return 2 * L + 1; }
  int block_offset(int L) const {
    // degree 0 block then (2L+1)*channels per higher degree
    if (L == 0) return 0;
    return extra0 + channels + (L * L - 1) * channels;
  }
  int total() const { return extra0 + (lmax + 1) * (lmax + 1) * channels; }

  bool operator==(const IrrepsLayout& o) const {
    return lmax == o.lmax && channels == o.channels && extra0 == o.extra0;
  }
  bool operator!=(const IrrepsLayout& o) const { return !(*this == o); }
};

struct IrrepsFeature {
  IrrepsLayout layout;
  std::vector<double> v;

  IrrepsFeature() = default;
  explicit IrrepsFeature(const IrrepsLayout& l)
      : layout(l), v(static_cast<std::size_t>(l.total()), 0.0) {}

  double& at(int L, int m, int c) { return v[static_cast<std::size_t>(index(L, m, c))]; }
  double at(int L, int m, int c) const { return v[static_cast<std::size_t>(index(L, m, c))]; }

  int index(int L, int m, int c) const {
    return layout.block_offset(L) + (m + L) * layout.ch(L) + c;
  }

  void fill_random(Rng& rng, double scale = 1.0) {
    for (double& x : v) x = scale * rng.gaussian();
  }
};

// Applies the block-diagonal Wigner action; blocks must cover layout.lmax.
IrrepsFeature rotate_feature(const IrrepsFeature& x, const std::vector<so3::WignerBlock>& d);
IrrepsFeature rotate_feature(const IrrepsFeature& x, const Rotation& r);

// Degree-wise linear map.  w[L] is a ch_out(L) x ch_in(L) row-major matrix;
// bias0 (size ch_out(0)) applies to degree 0 only.
struct LinearWeights {
  IrrepsLayout in, out;
  std::vector<std::vector<double>> w;
  std::vector<double> bias0;

  static LinearWeights make(const IrrepsLayout& in, const IrrepsLayout& out);
  static LinearWeights identity(const IrrepsLayout& layout);
  void init_random(Rng& rng);
};

IrrepsFeature equivariant_linear(const IrrepsFeature& x, const LinearWeights& w);

// Fixed basis mapping between Euclidean vectors and degree-1 components:
// (m=-1, 0, +1) <-> (x, y, z).
inline void vector_to_degree1(const Vec3& v, double out[3]) {
  out[0] = v.x;
  out[1] = v.y;
  out[2] = v.z;
}
inline Vec3 vector_from_degree1(const double d1[3]) { return {d1[0], d1[1], d1[2]}; }

}  // namespace equikernel

#endif  // EQUIKERNEL_IRREPS_HPP_
