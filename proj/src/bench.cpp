#include "equikernel/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "equikernel/so2.hpp"
#include "equikernel/tensor_product.hpp"

namespace equikernel {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename F>
double time_reps(int reps, F&& body) {
  body();  // warmup (also fills the CG cache so setup cost stays out)
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    body();
    const auto t1 = Clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return median(times);
}

}  // namespace

std::vector<BenchRecord> run_bench(const std::vector<int>& lmax_values, int channels, int reps,
                                   std::uint64_t seed, int mmax) {
  if (reps < 3) throw std::invalid_argument("run_bench: reps must be at least 3");
  if (channels < 1) throw std::invalid_argument("run_bench: channels must be >= 1");
  if (lmax_values.empty()) throw std::invalid_argument("run_bench: empty L_max list");
  for (int l : lmax_values)
    if (l < 1 || l > 10) throw std::invalid_argument("run_bench: L_max values must be in [1, 10]");

  Rng rng(seed);
  std::vector<BenchRecord> records;
  volatile double sink = 0.0;  // keeps the optimizer from dropping the kernels

  for (int lmax : lmax_values) {
    const int m_used = mmax < 0 ? lmax : std::min(mmax, lmax);
    IrrepsFeature x(IrrepsLayout{lmax, channels, 0});
    x.fill_random(rng);
    const Vec3 rel{rng.gaussian(), rng.gaussian(), rng.gaussian()};

    PathWeights pw = PathWeights::make(lmax, 2 * lmax, lmax, channels);
    pw.init_random(rng);
    SO2LinearWeights sw = SO2LinearWeights::make(x.layout, x.layout, m_used);
    sw.init_random(rng);

    // oracle deviation of the timed eSCN configuration (truncation error
    // when m_used < lmax, rounding noise otherwise)
    IrrepsFeature full = so3_convolution(x, rel, pw, lmax);
    IrrepsFeature fast = escn_convolution(x, rel, reparametrize_weights(pw, lmax, m_used));
    double dev = 0.0;
    for (std::size_t i = 0; i < full.v.size(); ++i)
      dev = std::max(dev, std::abs(full.v[i] - fast.v[i]));

    const double t_full = time_reps(reps, [&] {
      IrrepsFeature y = so3_convolution(x, rel, pw, lmax);
      sink = sink + y.v[0];
    });
    records.push_back({"so3_full", lmax, lmax, channels, reps, t_full, 0.0});

    const double t_escn = time_reps(reps, [&] {
      IrrepsFeature y = escn_convolution(x, rel, sw);
      sink = sink + y.v[0];
    });
    records.push_back({"escn", lmax, m_used, channels, reps, t_escn, dev});
  }
  (void)sink;
  return records;
}

std::string bench_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream os;
  os << "kernel,L_max,M_max,channels,reps,median_s\n";
  os.precision(9);
  for (const auto& r : records)
    os << r.kernel << "," << r.l_max << "," << r.m_max << "," << r.channels << "," << r.reps
       << "," << r.median_s << "\n";
  return os.str();
}

double fitted_slope(const std::vector<BenchRecord>& records, const std::string& kernel) {
  std::vector<double> xs, ys;
  for (const auto& r : records)
    if (r.kernel == kernel && r.median_s > 0.0) {
      xs.push_back(std::log(static_cast<double>(r.l_max)));
      ys.push_back(std::log(r.median_s));
    }
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

}  // namespace equikernel
