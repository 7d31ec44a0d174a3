#include "equikernel/relax.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace equikernel {

RelaxResult relax(const ModelConfig& cfg, const ModelWeights& w, const AtomicStructure& start,
                  const RelaxOptions& opt) {
  if (opt.max_steps < 1) throw std::invalid_argument("relax: max_steps must be >= 1");
  if (opt.fmax_threshold <= 0.0) throw std::invalid_argument("relax: fmax threshold must be > 0");
  if (opt.step_size <= 0.0) throw std::invalid_argument("relax: step_size must be > 0");

  RelaxResult out;
  AtomicStructure s = start;

  for (int step = 1; step <= opt.max_steps; ++step) {
    AtomGraph g = build_graph(s, cfg.cutoff, cfg.max_neighbors);
    ForwardResult fr = forward(cfg, w, g, opt.n_threads);

    double fmax = 0.0;
    bool nan_force = !std::isfinite(fr.energy);
    for (const Vec3& f : fr.forces) {
      const double n = f.norm();
      if (!std::isfinite(n)) nan_force = true;
      fmax = std::max(fmax, n);
    }

    RelaxStep rec;
    rec.step = step;
    rec.positions = s.positions;
    rec.energy = fr.energy;
    rec.fmax = fmax;
    out.trace.push_back(rec);

    if (nan_force) {
      out.aborted = true;
      std::ostringstream os;
      os << "non-finite force or energy at step " << step;
      out.abort_reason = os.str();
      break;
    }
    if (fmax <= opt.fmax_threshold) {
      out.converged = true;
      break;
    }
    if (step == opt.max_steps) break;

    for (int i = 0; i < s.size(); ++i) {
      Vec3 d = fr.forces[static_cast<std::size_t>(i)] * opt.step_size;
      const double n = d.norm();
      if (n > opt.max_displacement) d = d * (opt.max_displacement / n);
      s.positions[static_cast<std::size_t>(i)] = s.positions[static_cast<std::size_t>(i)] + d;
    }
  }

  out.final_structure = s;
  std::ostringstream cm;
  cm << "relaxed: steps=" << out.trace.size()
     << (out.converged ? " converged" : out.aborted ? " aborted" : " step-limit");
  out.final_structure.comment = cm.str();
  return out;
}

std::string relax_trace_csv(const RelaxResult& r) {
  std::ostringstream os;
  os.precision(12);
  const int n = r.trace.empty() ? 0 : static_cast<int>(r.trace.front().positions.size());
  os << "step,energy_ev,fmax_ev_per_angstrom";
  for (int i = 0; i < n; ++i)
    os << ",x" << i << ",y" << i << ",z" << i;
  os << "\n";
  for (const auto& st : r.trace) {
    os << st.step << "," << st.energy << "," << st.fmax;
    for (const Vec3& p : st.positions) os << "," << p.x << "," << p.y << "," << p.z;
    os << "\n";
  }
  return os.str();
}

}  // namespace equikernel
