#ifndef EQUIKERNEL_AUDIT_HPP_
#define EQUIKERNEL_AUDIT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "equikernel/graph.hpp"
#include "equikernel/model.hpp"

namespace equikernel {

// Random structure with pairwise separations >= min_sep, positions in a cube
// of the given half-width.
AtomicStructure random_structure(Rng& rng, int n_atoms, double half_width, double min_sep);

struct AuditEntry {
  std::string layer;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  bool all_pass = true;
};

// Rotate-commute checks for every layer plus whole-model symmetry under the
// given profile; n_trials random rotations per layer.  n_threads parallelizes
// the model-level forwards (results are bitwise identical either way).
AuditReport run_equivariance_audit(const ModelConfig& cfg, std::uint64_t seed, int n_trials,
                                   int n_threads = 1);
// tiny-profile convenience overload
AuditReport run_equivariance_audit(std::uint64_t seed, int n_trials, int n_threads = 1);
std::string audit_text(const AuditReport& r);

struct OracleReport {
  std::vector<int> lmax_values;
  int n_edges = 0;
  double max_abs_diff = 0.0;
  double tolerance = 1e-8;
  bool pass = false;
};

// escn_convolution with reparametrized weights against so3_convolution on
// random edges, M_max = L_max for each tested degree.
OracleReport run_oracle_check(int lmax_limit, std::uint64_t seed, int n_edges);
std::string oracle_text(const OracleReport& r);

}  // namespace equikernel

#endif  // EQUIKERNEL_AUDIT_HPP_
