#ifndef EQUIKERNEL_BENCH_HPP_
#define EQUIKERNEL_BENCH_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace equikernel {

struct BenchRecord {
  std::string kernel;
  int l_max = 0;
  int m_max = 0;
  int channels = 0;
  int reps = 0;
  double median_s = 0.0;
  // deviation of the timed eSCN configuration from the full SO(3) result
  // under reparametrized weights; zero for the oracle kernel itself and,
  // up to rounding, whenever m_max = l_max
  double max_dev = 0.0;
};

// Times one edge message through the full tensor-product convolution and the
// eSCN path for each requested degree; median of `reps` timings after one
// warmup call, monotonic clock.  mmax < 0 means M_max = L_max per degree.
std::vector<BenchRecord> run_bench(const std::vector<int>& lmax_values, int channels, int reps,
                                   std::uint64_t seed, int mmax = -1);

std::string bench_csv(const std::vector<BenchRecord>& records);

// Least-squares slope of log(median_s) vs log(l_max) for one kernel name;
// NaN when fewer than two points.
double fitted_slope(const std::vector<BenchRecord>& records, const std::string& kernel);

}  // namespace equikernel

#endif  // EQUIKERNEL_BENCH_HPP_
