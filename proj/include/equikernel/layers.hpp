#ifndef EQUIKERNEL_LAYERS_HPP_
#define EQUIKERNEL_LAYERS_HPP_

#include <functional>
#include <vector>

#include "equikernel/irreps.hpp"

namespace equikernel {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Equiangular latitude-longitude sphere grid with Fejer latitude weights.
// Latitude nodes theta_j = (2j+1)pi/(2 n_lat) measured from the y axis;
// the quadrature integrates polynomials in cos(theta) up to degree
// n_lat - 1 and Fourier modes up to n_lon - 1 exactly, so projection is
// exact for signals band-limited to lmax when n_lat, n_lon >= 2*lmax + 1
// (asserted at construction).
class S2Grid {
 public:
  S2Grid(int n_lat, int n_lon, int lmax);

  int n_points() const { return n_lat_ * n_lon_; }
  int lmax() const { return lmax_; }
  const Vec3& point(int p) const { return points_[static_cast<std::size_t>(p)]; }
  double weight(int p) const { return weights_[static_cast<std::size_t>(p)]; }
  // SH table row for point p, (lmax+1)^2 values, degree-major
  const double* sh_row(int p) const {
    return &sh_[static_cast<std::size_t>(p) * n_sh_];
  }

 private:
  int n_lat_, n_lon_, lmax_;
  std::size_t n_sh_;
  std::vector<Vec3> points_;
  std::vector<double> weights_;
  std::vector<double> sh_;
};

// Point samples of all channels of a band-limited feature; point-major
// storage (samples[p * channels + c]).
std::vector<double> s2_project(const IrrepsFeature& x, const S2Grid& grid);
IrrepsFeature s2_reconstruct(const std::vector<double>& samples, const S2Grid& grid, int lmax,
                             int channels);

// Per-point function applied to the channel vector at one sphere point.
using PointFunction = std::function<void(double* values, int channels)>;

// y = G^-1(F(G(x))); exact for linear F, otherwise controlled by grid
// oversampling.
IrrepsFeature s2_activation(const IrrepsFeature& x, const PointFunction& f, const S2Grid& grid);

// SiLU on the first extra0 scalars; S^2 activation over the remaining
// uniform feature; the activated second scalar part is dropped.  Requires
// extra0 == channels (the default equal split).
//
// Relation to the gate: when the sphere signal is dominated by its constant
// (degree-0) part, F acts approximately as a per-channel scalar nonlinearity
// and the layer behaves like gating; with genuine higher-degree content it
// mixes degrees, which the gate never does.  Qualitative only -- the two are
// not equal on any nontrivial input.
IrrepsFeature separable_s2_activation(const IrrepsFeature& x, const PointFunction& f,
                                      const S2Grid& grid);

// SiLU on the leading scalars, sigmoid gates (one per degree >= 1 and
// channel) on the trailing lmax*channels scalars.
IrrepsFeature gate_activation(const IrrepsFeature& x);

struct NormParams {
  std::vector<double> gamma0, beta0;        // degree 0
  std::vector<std::vector<double>> gamma;   // degree 1..lmax, per channel

  static NormParams make(const IrrepsLayout& layout);  // gamma = 1, beta = 0
  void init_random(Rng& rng);
};

// Degree 0: standard layer norm.  Degree L > 0: divide by the RMS over
// channels of the type-L vector norms, independently per degree.
IrrepsFeature equivariant_layer_norm(const IrrepsFeature& x, const NormParams& p);

// Degree 0: standard layer norm.  Degrees L > 0: all divided by the single
// shared sigma^(L>0) = sqrt(1/lmax sum_L sigma_L^2) with
// sigma_L = sqrt(1/C sum_c 1/(2L+1) sum_m x^2).
IrrepsFeature separable_layer_norm(const IrrepsFeature& x, const NormParams& p);

// Plain scalar layer norm over a contiguous vector (radial MLP, attention
// re-normalization).
void scalar_layer_norm(double* x, int n, const double* gamma, const double* beta);

}  // namespace equikernel

#endif  // EQUIKERNEL_LAYERS_HPP_
