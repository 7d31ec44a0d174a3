#ifndef EQUIKERNEL_RELAX_HPP_
#define EQUIKERNEL_RELAX_HPP_

#include <string>
#include <vector>

#include "equikernel/model.hpp"

namespace equikernel {

struct RelaxStep {
  int step = 0;                 // 1-based
  std::vector<Vec3> positions;  // before the update of this step
  double energy = 0.0;          // eV
  double fmax = 0.0;            // max per-atom force norm, eV/A
};

struct RelaxResult {
  std::vector<RelaxStep> trace;
  AtomicStructure final_structure;
  bool converged = false;
  bool aborted = false;          // NaN forces
  std::string abort_reason;
};

struct RelaxOptions {
  int max_steps = 300;
  double fmax_threshold = 0.02;  // eV/A
  double step_size = 0.01;       // A^2/eV (positions += step_size * force)
  double max_displacement = 0.2; // per-atom clip, A
  int n_threads = 1;
};

// Clipped steepest descent on predicted forces; stops at the force threshold
// or after max_steps force evaluations, whichever comes first.
RelaxResult relax(const ModelConfig& cfg, const ModelWeights& w, const AtomicStructure& start,
                  const RelaxOptions& opt);

std::string relax_trace_csv(const RelaxResult& r);

}  // namespace equikernel

#endif  // EQUIKERNEL_RELAX_HPP_
