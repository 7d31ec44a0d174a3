#ifndef EQUIKERNEL_SO3_HPP_
#define EQUIKERNEL_SO3_HPP_

#include <vector>

#include "equikernel/geometry.hpp"

namespace equikernel::so3 {

// Basis conventions used throughout the library
// ----------------------------------------------
// Real spherical harmonics with components ordered m = -L..L and the y axis as
// the principal ("alignment") axis:
//
//   Y^(L)_m(r^) :  m = 0 component rescaled so that Y^(L)_0(y^) = 1,
//                  m != 0 components carry the factor sqrt(2 (L-m)!/(L+m)!)
//                  so every component has the same norm over the sphere.
//
// Degree 1 is exactly the Euclidean vector: Y^(1)(r^) = (x, y, z) for
// m = (-1, 0, +1).  Wigner blocks satisfy Y(R r^) = D^(L)(R) Y(r^), so
// D^(1)(R) = R in the (x, y, z) ordering.
//
// Clebsch-Gordan tensors intertwine these blocks,
//   sum_{m1,m2} D^(L1)_{m1'm1} D^(L2)_{m2'm2} C_{m1,m2,m3}
//     = sum_{m3'} C_{m1',m2',m3'} D^(L3)_{m3',m3},
// are orthonormal over the (m1, m2) index pair (per-path constant = 1):
//   sum_{m1,m2} C_{m1,m2,m3} C_{m1,m2,m3'} = delta_{m3,m3'},
// and the global sign of each (L1,L2,L3) tensor is fixed by requiring the
// lexicographically first nonzero entry (m1-, then m2-, then m3-major) to be
// positive.

// One (2L+1)x(2L+1) orthogonal block of the block-diagonal rotation action.
struct WignerBlock {
  int degree = 0;
  std::vector<double> m;  // row-major, (2L+1)^2; row index m', column index m

  int dim() const { return 2 * degree + 1; }
  double& at(int mrow, int mcol) {
    return m[static_cast<std::size_t>((mrow + degree) * dim() + (mcol + degree))];
  }
  double at(int mrow, int mcol) const {
    return m[static_cast<std::size_t>((mrow + degree) * dim() + (mcol + degree))];
  }

  // inverse rotation block (the blocks are orthogonal)
  WignerBlock transposed() const {
    WignerBlock t;
    t.degree = degree;
    const int n = dim();
    t.m.resize(m.size());
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        t.m[static_cast<std::size_t>(c * n + r)] = m[static_cast<std::size_t>(r * n + c)];
    return t;
  }
};

// Dense Clebsch-Gordan tensor for one (L1, L2, L3) path plus its nonzero list.
struct CGTensor {
  int l1 = 0, l2 = 0, l3 = 0;
  std::vector<double> c;  // dense, index ((m1+l1)*(2l2+1) + (m2+l2))*(2l3+1) + (m3+l3)

  struct Entry {
    int m1, m2, m3;
    double value;
  };
  std::vector<Entry> nonzeros;

  double at(int m1, int m2, int m3) const {
    return c[static_cast<std::size_t>(((m1 + l1) * (2 * l2 + 1) + (m2 + l2)) * (2 * l3 + 1) +
                                      (m3 + l3))];
  }
};

// Y^(L) for all L <= lmax, stored degree-major with m = -L..L inside a degree.
struct SphericalSample {
  int lmax = 0;
  std::vector<double> v;  // (lmax+1)^2

  double at(int L, int m) const { return v[static_cast<std::size_t>(L * L + L + m)]; }
  double& at(int L, int m) { return v[static_cast<std::size_t>(L * L + L + m)]; }
};

// direction must be unit length within 1e-9; lmax in [0, 20].
SphericalSample spherical_harmonics(const Vec3& direction, int lmax);

// All blocks D^(0..lmax)(r).  D^(1) is seeded from the 3x3 matrix and higher
// degrees are built by projecting D^(L-1) (x) D^(1) through the CG tensors.
std::vector<WignerBlock> wigner_blocks(const Rotation& r, int lmax);
WignerBlock wigner_d(const Rotation& r, int degree);

// Cached behind a shared mutex (lazy fill, concurrent reads); the reference
// stays valid for the lifetime of the process.  All-zero tensor when
// |l1-l2| <= l3 <= l1+l2 fails.
const CGTensor& clebsch_gordan(int l1, int l2, int l3);

// R with R * direction = (0, 1, 0).  Minimal-angle rotation about
// direction x y^; the antipode -y^ maps to a half turn about the x axis.
Rotation alignment_rotation(const Vec3& direction);

namespace testing {
// Fault-injection hook for the equivariance audit: when enabled, newly built
// CG tensors for (1, 1, 2) come out perturbed.  Must be switched before the
// first clebsch_gordan call since tensors are cached.
void corrupt_cg(bool enable);
}  // namespace testing

}  // namespace equikernel::so3

#endif  // EQUIKERNEL_SO3_HPP_
