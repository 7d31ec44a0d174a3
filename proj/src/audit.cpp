#include "equikernel/audit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "equikernel/layers.hpp"
#include "equikernel/so2.hpp"
#include "equikernel/tensor_product.hpp"

namespace equikernel {

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double rotate_commute_error(const IrrepsFeature& x, const Rotation& r,
                            const std::function<IrrepsFeature(const IrrepsFeature&)>& op) {
  IrrepsFeature lhs = op(rotate_feature(x, r));
  IrrepsFeature rhs = rotate_feature(op(x), r);
  return max_abs_diff(lhs.v, rhs.v);
}

Vec3 random_unit(Rng& rng) {
  Vec3 v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
  while (v.norm() < 1e-3) v = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
  return v.normalized();
}

double check_spherical_harmonics(Rng& rng, int n_trials) {
  const int lmax = 8;
  double err = 0.0;
  for (int t = 0; t < n_trials; ++t) {
    const Vec3 dir = random_unit(rng);
    const Rotation r = Rotation::random(rng);
    const auto y = so3::spherical_harmonics(dir, lmax);
    const auto y_rot = so3::spherical_harmonics((r * dir).normalized(), lmax);
    const auto d = so3::wigner_blocks(r, lmax);
    for (int L = 0; L <= lmax; ++L)
      for (int mr = -L; mr <= L; ++mr) {
        double s = 0.0;
        for (int mc = -L; mc <= L; ++mc) s += d[static_cast<std::size_t>(L)].at(mr, mc) * y.at(L, mc);
        err = std::max(err, std::abs(s - y_rot.at(L, mr)));
      }
  }
  return err;
}

double check_wigner(Rng& rng, int n_trials) {
  const int lmax = 8;
  double err = 0.0;
  for (int t = 0; t < n_trials; ++t) {
    const Rotation r1 = Rotation::random(rng);
    const Rotation r2 = Rotation::random(rng);
    const auto d1 = so3::wigner_blocks(r1, lmax);
    const auto d2 = so3::wigner_blocks(r2, lmax);
    const auto d12 = so3::wigner_blocks(r1 * r2, lmax);
    for (int L = 0; L <= lmax; ++L) {
      const int n = 2 * L + 1;
      const auto& a = d1[static_cast<std::size_t>(L)];
      const auto& b = d2[static_cast<std::size_t>(L)];
      const auto& c = d12[static_cast<std::size_t>(L)];
      // homomorphism
      for (int i = -L; i <= L; ++i)
        for (int j = -L; j <= L; ++j) {
          double s = 0.0;
          for (int k = -L; k <= L; ++k) s += a.at(i, k) * b.at(k, j);
          err = std::max(err, std::abs(s - c.at(i, j)));
        }
      // orthogonality
      for (int i = -L; i <= L; ++i)
        for (int j = -L; j <= L; ++j) {
          double s = 0.0;
          for (int k = -L; k <= L; ++k) s += a.at(k, i) * a.at(k, j);
          err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
      (void)n;
    }
  }
  return err;
}

double check_cg_intertwiner(Rng& rng, int n_trials) {
  double err = 0.0;
  for (int t = 0; t < n_trials; ++t) {
    const Rotation r = Rotation::random(rng);
    const auto d = so3::wigner_blocks(r, 8);
    for (int l1 = 0; l1 <= 4; ++l1)
      for (int l2 = 0; l2 <= 4; ++l2)
        for (int l3 = std::abs(l1 - l2); l3 <= std::min(4, l1 + l2); ++l3) {
          const auto& cg = so3::clebsch_gordan(l1, l2, l3);
          const auto& d1 = d[static_cast<std::size_t>(l1)];
          const auto& d2 = d[static_cast<std::size_t>(l2)];
          const auto& d3 = d[static_cast<std::size_t>(l3)];
          for (int m1 = -l1; m1 <= l1; ++m1)
            for (int m2 = -l2; m2 <= l2; ++m2)
              for (int m3 = -l3; m3 <= l3; ++m3) {
                double lhs = 0.0;
                for (const auto& e : cg.nonzeros)
                  lhs += d1.at(m1, e.m1) * d2.at(m2, e.m2) * e.value *
                         d3.at(m3, e.m3);
                double rhs = cg.at(m1, m2, m3);
                // lhs = sum_{n1,n2,n3} D1 D2 C D3^T ... compare rotated tensor
                err = std::max(err, std::abs(lhs - rhs));
              }
        }
  }
  return err;
}

double relative_vec_error(const std::vector<Vec3>& got, const std::vector<Vec3>& want) {
  double num = 0.0, den = 1e-30;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num = std::max(num, (got[i] - want[i]).norm());
    den = std::max(den, want[i].norm());
  }
  return num / std::max(den, 1.0);
}

}  // namespace

AtomicStructure random_structure(Rng& rng, int n_atoms, double half_width, double min_sep) {
  AtomicStructure s;
  const int species_pool[4] = {1, 6, 8, 29};
  while (s.size() < n_atoms) {
    Vec3 p{rng.uniform(-half_width, half_width), rng.uniform(-half_width, half_width),
           rng.uniform(-half_width, half_width)};
    bool ok = true;
    for (const Vec3& q : s.positions)
      if ((p - q).norm() < min_sep) {
        ok = false;
        break;
      }
    if (!ok) continue;
    s.positions.push_back(p);
    s.species.push_back(species_pool[rng.index(4)]);
  }
  s.comment = "random structure";
  return s;
}

AuditReport run_equivariance_audit(std::uint64_t seed, int n_trials, int n_threads) {
  return run_equivariance_audit(ModelConfig::tiny(), seed, n_trials, n_threads);
}

AuditReport run_equivariance_audit(const ModelConfig& cfg, std::uint64_t seed, int n_trials,
                                   int n_threads) {
  if (n_trials < 1) throw std::invalid_argument("run_equivariance_audit: n_trials must be >= 1");
  Rng rng(seed);
  AuditReport rep;
  auto add = [&](const std::string& layer, double err, double tol) {
    rep.entries.push_back({layer, err, tol, err <= tol});
    if (err > tol) rep.all_pass = false;
  };

  add("spherical_harmonics", check_spherical_harmonics(rng, n_trials), 1e-10);
  add("wigner_d", check_wigner(rng, n_trials), 1e-10);
  add("clebsch_gordan_intertwiner", check_cg_intertwiner(rng, std::min(n_trials, 3)), 1e-10);

  // layer operations on a moderate layout
  {
    const IrrepsLayout layout{3, 6, 0};
    IrrepsFeature x(layout);
    LinearWeights lw = LinearWeights::make(layout, layout);
    Rng wrng(seed + 1);
    lw.init_random(wrng);
    for (double& b : lw.bias0) b = wrng.gaussian();
    double err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      x.fill_random(rng);
      err = std::max(err, rotate_commute_error(x, Rotation::random(rng), [&](const IrrepsFeature& f) {
                       return equivariant_linear(f, lw);
                     }));
    }
    add("equivariant_linear", err, 1e-10);
  }

  {
    const IrrepsLayout layout{2, 4, 0};
    PathWeights pw = PathWeights::make(2, 4, 2, 4);
    Rng wrng(seed + 2);
    pw.init_random(wrng);
    double err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(layout);
      x.fill_random(rng);
      const Vec3 rel = random_unit(rng) * rng.uniform(0.5, 2.0);
      const Rotation r = Rotation::random(rng);
      IrrepsFeature lhs = so3_convolution(rotate_feature(x, r), r * rel, pw, 2);
      IrrepsFeature rhs = rotate_feature(so3_convolution(x, rel, pw, 2), r);
      err = std::max(err, max_abs_diff(lhs.v, rhs.v));
    }
    add("so3_convolution", err, 1e-10);
  }

  {
    PathWeights pw = PathWeights::make(2, 3, 2, 4);
    Rng wrng(seed + 3);
    pw.init_random(wrng);
    double err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(IrrepsLayout{2, 4, 0});
      x.fill_random(rng);
      const Vec3 dir = random_unit(rng);
      const Rotation r = Rotation::random(rng);
      IrrepsFeature lhs = depthwise_tensor_product(
          rotate_feature(x, r), so3::spherical_harmonics((r * dir).normalized(), 3), pw, 2);
      IrrepsFeature rhs = rotate_feature(depthwise_tensor_product(
          x, so3::spherical_harmonics(dir, 3), pw, 2), r);
      err = std::max(err, max_abs_diff(lhs.v, rhs.v));
    }
    add("depthwise_tensor_product", err, 1e-10);
  }

  {
    const IrrepsLayout layout{3, 4, 0};
    SO2LinearWeights w = SO2LinearWeights::make(layout, layout, 3);
    Rng wrng(seed + 4);
    w.init_random(wrng);
    double gauge_err = 0.0, full_err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(layout);
      x.fill_random(rng);
      const Vec3 rel = random_unit(rng) * rng.uniform(0.5, 2.0);
      // gauge independence: extra y-rotation inside the aligned frame
      const Rotation g = Rotation::about_axis({0, 1, 0}, rng.uniform(0.0, 6.283185307179586));
      const Rotation align = so3::alignment_rotation(rel.normalized());
      IrrepsFeature base = rotate_feature(
          so2_linear(rotate_feature(x, align), w), align.inverse());
      const Rotation gauged = g * align;
      IrrepsFeature alt = rotate_feature(
          so2_linear(rotate_feature(x, gauged), w), gauged.inverse());
      gauge_err = std::max(gauge_err, max_abs_diff(base.v, alt.v));

      const Rotation r = Rotation::random(rng);
      IrrepsFeature lhs = escn_convolution(rotate_feature(x, r), r * rel, w);
      IrrepsFeature rhs = rotate_feature(escn_convolution(x, rel, w), r);
      full_err = std::max(full_err, max_abs_diff(lhs.v, rhs.v));
    }
    add("so2_gauge_independence", gauge_err, 1e-10);
    add("escn_convolution", full_err, 1e-9);
  }

  {
    double err = 0.0;
    const IrrepsLayout gate_in{2, 4, 2 * 4};
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(gate_in);
      x.fill_random(rng);
      err = std::max(err, rotate_commute_error(x, Rotation::random(rng), [](const IrrepsFeature& f) {
                       return gate_activation(f);
                     }));
    }
    add("gate_activation", err, 1e-10);
  }

  {
    const S2Grid grid(18, 18, 6);
    const IrrepsLayout layout{6, 3, 0};
    double rt_err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(layout);
      x.fill_random(rng);
      IrrepsFeature back = s2_reconstruct(s2_project(x, grid), grid, 6, 3);
      rt_err = std::max(rt_err, max_abs_diff(x.v, back.v));
    }
    add("s2_round_trip", rt_err, 1e-8);
  }

  {
    const S2Grid grid(48, 48, 2);
    const IrrepsLayout layout{2, 3, 0};
    auto act = [&](const IrrepsFeature& f) {
      return s2_activation(
          f, [](double* vals, int nc) {
            for (int c = 0; c < nc; ++c) vals[c] = silu(vals[c]);
          },
          grid);
    };
    double err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(layout);
      x.fill_random(rng, 0.5);
      err = std::max(err, rotate_commute_error(x, Rotation::random(rng), act));
    }
    add("s2_activation", err, 1e-6);
  }

  {
    const S2Grid grid(48, 48, 2);
    const IrrepsLayout layout{2, 3, 3};
    auto act = [&](const IrrepsFeature& f) {
      return separable_s2_activation(
          f, [](double* vals, int nc) {
            for (int c = 0; c < nc; ++c) vals[c] = silu(vals[c]);
          },
          grid);
    };
    double err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(layout);
      x.fill_random(rng, 0.5);
      err = std::max(err, rotate_commute_error(x, Rotation::random(rng), act));
    }
    add("separable_s2_activation", err, 1e-6);
  }

  {
    const IrrepsLayout layout{3, 5, 0};
    NormParams p = NormParams::make(layout);
    Rng wrng(seed + 5);
    p.init_random(wrng);
    double eln = 0.0, sln = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      IrrepsFeature x(layout);
      x.fill_random(rng);
      eln = std::max(eln, rotate_commute_error(x, Rotation::random(rng), [&](const IrrepsFeature& f) {
                       return equivariant_layer_norm(f, p);
                     }));
      sln = std::max(sln, rotate_commute_error(x, Rotation::random(rng), [&](const IrrepsFeature& f) {
                       return separable_layer_norm(f, p);
                     }));
    }
    add("equivariant_layer_norm", eln, 1e-10);
    add("separable_layer_norm", sln, 1e-10);
  }

  // model-level layers under the requested profile
  {
    ModelWeights w = ModelWeights::make(cfg);
    Rng wrng(seed + 6);
    w.init_random(wrng);
    const S2Grid grid(cfg.grid_resolution, cfg.grid_resolution, cfg.l_max);

    double ede_err = 0.0, attn_err = 0.0, ffn_err = 0.0, model_err = 0.0, force_err = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      AtomicStructure s = random_structure(rng, 8, 2.5, 0.8);
      AtomGraph g = build_graph(s, cfg.cutoff, cfg.max_neighbors);
      auto ed = build_edge_data(cfg, w, g);
      const Rotation r = Rotation::random(rng);

      AtomicStructure sr = s;
      for (Vec3& p : sr.positions) p = r * p;
      AtomGraph gr = build_graph(sr, cfg.cutoff, cfg.max_neighbors);
      auto edr = build_edge_data(cfg, w, gr);

      // edge-degree embedding
      auto e0 = edge_degree_embedding(cfg, w, g, ed);
      auto e1 = edge_degree_embedding(cfg, w, gr, edr);
      for (std::size_t i = 0; i < e0.size(); ++i)
        ede_err = std::max(ede_err, max_abs_diff(rotate_feature(e0[i], r).v, e1[i].v));

      // attention + ffn on random node features
      std::vector<IrrepsFeature> x(static_cast<std::size_t>(s.size()),
                                   IrrepsFeature(cfg.feature_layout()));
      for (auto& xi : x) xi.fill_random(rng, 0.5);
      std::vector<IrrepsFeature> xr(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) xr[i] = rotate_feature(x[i], r);

      auto a0 = graph_attention(cfg, w.blocks[0].attn, x, g, ed, grid, n_threads);
      auto a1 = graph_attention(cfg, w.blocks[0].attn, xr, gr, edr, grid, n_threads);
      for (std::size_t i = 0; i < a0.size(); ++i)
        attn_err = std::max(attn_err, max_abs_diff(rotate_feature(a0[i], r).v, a1[i].v));

      IrrepsFeature f0 = ffn(x[0], w.blocks[0].ffn, grid);
      IrrepsFeature f1 = ffn(xr[0], w.blocks[0].ffn, grid);
      ffn_err = std::max(ffn_err, max_abs_diff(rotate_feature(f0, r).v, f1.v));

      // whole model
      ForwardResult out0 = forward(cfg, w, g, n_threads);
      ForwardResult out1 = forward(cfg, w, gr, n_threads);
      model_err = std::max(model_err, std::abs(out0.energy - out1.energy) /
                                          std::max(1.0, std::abs(out0.energy)));
      std::vector<Vec3> rot_forces(out0.forces.size());
      for (std::size_t i = 0; i < out0.forces.size(); ++i) rot_forces[i] = r * out0.forces[i];
      force_err = std::max(force_err, relative_vec_error(out1.forces, rot_forces));
    }
    add("edge_degree_embedding", ede_err, 1e-9);
    add("graph_attention", attn_err, 1e-8);
    add("ffn", ffn_err, 1e-8);
    add("model_energy_invariance", model_err, 1e-6);
    add("model_force_equivariance", force_err, 1e-6);
  }

  return rep;
}

std::string audit_text(const AuditReport& r) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific;
  for (const auto& e : r.entries)
    os << (e.pass ? "PASS" : "FAIL") << "  " << e.layer << "  max_error=" << e.max_error
       << "  tolerance=" << e.tolerance << "\n";
  os << (r.all_pass ? "all layers pass" : "equivariance audit FAILED") << "\n";
  return os.str();
}

OracleReport run_oracle_check(int lmax_limit, std::uint64_t seed, int n_edges) {
  if (lmax_limit < 1 || lmax_limit > 3)
    throw std::invalid_argument("run_oracle_check: lmax_limit must be in [1, 3]");
  if (n_edges < 1) throw std::invalid_argument("run_oracle_check: n_edges must be >= 1");
  Rng rng(seed);
  OracleReport rep;
  rep.n_edges = n_edges;
  for (int lmax = 1; lmax <= lmax_limit; ++lmax) {
    rep.lmax_values.push_back(lmax);
    PathWeights pw = PathWeights::make(lmax, 2 * lmax, lmax, 4);
    pw.init_random(rng);
    SO2LinearWeights sw = reparametrize_weights(pw, lmax, lmax);
    for (int e = 0; e < n_edges; ++e) {
      IrrepsFeature x(IrrepsLayout{lmax, 4, 0});
      x.fill_random(rng);
      const Vec3 rel = random_unit(rng) * rng.uniform(0.3, 3.0);
      IrrepsFeature full = so3_convolution(x, rel, pw, lmax);
      IrrepsFeature fast = escn_convolution(x, rel, sw);
      rep.max_abs_diff = std::max(rep.max_abs_diff, max_abs_diff(full.v, fast.v));
    }
  }
  rep.pass = rep.max_abs_diff <= rep.tolerance;
  return rep;
}

std::string oracle_text(const OracleReport& r) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific;
  os << "oracle check: max |escn - so3| = " << r.max_abs_diff << " over " << r.n_edges
     << " edges per L_max, tolerance " << r.tolerance << "\n"
     << (r.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace equikernel
