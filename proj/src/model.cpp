#include "equikernel/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace equikernel {

namespace {

void parallel_for(int n, int n_threads, const std::function<void(int)>& body) {
  if (n_threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  const int nt = std::min(n_threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += nt) body(i);
    });
  for (auto& th : pool) th.join();
}

double leaky_relu(double x) { return x > 0.0 ? x : 0.2 * x; }

// y = W x + b, W row-major n_out x n_in
void affine(const std::vector<double>& w, const std::vector<double>& b,
            const std::vector<double>& x, std::vector<double>& y) {
  const int n_out = static_cast<int>(b.size());
  const int n_in = static_cast<int>(x.size());
  y.assign(b.begin(), b.end());
  for (int o = 0; o < n_out; ++o) {
    const double* row = &w[static_cast<std::size_t>(o) * n_in];
    double s = 0.0;
    for (int i = 0; i < n_in; ++i) s += row[i] * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(o)] += s;
  }
}

void init_affine(std::vector<double>& w, std::vector<double>* b, int n_in, Rng& rng) {
  const double bound = std::sqrt(3.0 / n_in);
  for (double& x : w) x = rng.uniform(-bound, bound);
  if (b)
    for (double& x : *b) x = 0.0;
}

}  // namespace

ModelConfig ModelConfig::base() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.l_max = 2;
  c.m_max = 2;
  c.n_blocks = 2;
  c.channels = 16;
  c.d_attn_hidden = 8;
  c.n_heads = 2;
  c.d_attn_alpha = 8;
  c.d_attn_value = 4;
  c.d_ffn = 16;
  c.grid_resolution = 48;
  c.n_radial_bases = 32;
  c.d_edge = 16;
  c.cutoff = 6.0;
  c.max_neighbors = 12;
  c.n_species = 118;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("ModelConfig: ") + name + " must be positive");
  };
  positive(l_max + 1, "l_max");
  positive(m_max + 1, "m_max");
  positive(n_blocks, "n_blocks");
  positive(channels, "channels");
  positive(d_attn_hidden, "d_attn_hidden");
  positive(n_heads, "n_heads");
  positive(d_attn_alpha, "d_attn_alpha");
  positive(d_attn_value, "d_attn_value");
  positive(d_ffn, "d_ffn");
  positive(grid_resolution, "grid_resolution");
  positive(n_radial_bases - 1, "n_radial_bases");
  positive(d_edge, "d_edge");
  positive(max_neighbors, "max_neighbors");
  positive(n_species, "n_species");
  if (m_max > l_max) throw std::invalid_argument("ModelConfig: m_max must not exceed l_max");
  if (cutoff <= 0.0) throw std::invalid_argument("ModelConfig: cutoff must be positive");
  if (grid_resolution < 2 * l_max + 1)
    throw std::invalid_argument("ModelConfig: grid_resolution below 2*l_max+1");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["l_max"] = l_max;
  j["m_max"] = m_max;
  j["n_blocks"] = n_blocks;
  j["channels"] = channels;
  j["d_attn_hidden"] = d_attn_hidden;
  j["n_heads"] = n_heads;
  j["d_attn_alpha"] = d_attn_alpha;
  j["d_attn_value"] = d_attn_value;
  j["d_ffn"] = d_ffn;
  j["grid_resolution"] = grid_resolution;
  j["n_radial_bases"] = n_radial_bases;
  j["d_edge"] = d_edge;
  j["cutoff"] = cutoff;
  j["max_neighbors"] = max_neighbors;
  j["n_species"] = n_species;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c = ModelConfig::base();
  c.l_max = j.value("l_max", c.l_max);
  c.m_max = j.value("m_max", c.m_max);
  c.n_blocks = j.value("n_blocks", c.n_blocks);
  c.channels = j.value("channels", c.channels);
  c.d_attn_hidden = j.value("d_attn_hidden", c.d_attn_hidden);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_attn_alpha = j.value("d_attn_alpha", c.d_attn_alpha);
  c.d_attn_value = j.value("d_attn_value", c.d_attn_value);
  c.d_ffn = j.value("d_ffn", c.d_ffn);
  c.grid_resolution = j.value("grid_resolution", c.grid_resolution);
  c.n_radial_bases = j.value("n_radial_bases", c.n_radial_bases);
  c.d_edge = j.value("d_edge", c.d_edge);
  c.cutoff = j.value("cutoff", c.cutoff);
  c.max_neighbors = j.value("max_neighbors", c.max_neighbors);
  c.n_species = j.value("n_species", c.n_species);
  c.validate();
  return c;
}

std::vector<double> gaussian_radial_basis(double distance, int n_bases, double cutoff) {
  if (n_bases < 2) throw std::invalid_argument("gaussian_radial_basis: need at least 2 bases");
  if (cutoff <= 0.0) throw std::invalid_argument("gaussian_radial_basis: cutoff must be positive");
  if (!(distance > 0.0) || distance > cutoff)
    throw std::invalid_argument("gaussian_radial_basis: distance outside (0, cutoff]");
  const double spacing = cutoff / (n_bases - 1);
  std::vector<double> out(static_cast<std::size_t>(n_bases));
  for (int k = 0; k < n_bases; ++k) {
    const double d = (distance - k * spacing) / spacing;
    out[static_cast<std::size_t>(k)] = std::exp(-0.5 * d * d);
  }
  return out;
}

RadialWeights RadialWeights::make(int n_in, int d_edge) {
  RadialWeights w;
  w.n_in = n_in;
  w.d_edge = d_edge;
  w.w1.assign(static_cast<std::size_t>(d_edge) * n_in, 0.0);
  w.b1.assign(static_cast<std::size_t>(d_edge), 0.0);
  w.g1.assign(static_cast<std::size_t>(d_edge), 1.0);
  w.be1.assign(static_cast<std::size_t>(d_edge), 0.0);
  w.w2.assign(static_cast<std::size_t>(d_edge) * d_edge, 0.0);
  w.b2 = w.b1;
  w.g2 = w.g1;
  w.be2 = w.be1;
  w.w3 = w.w2;
  w.b3 = w.b1;
  return w;
}

void RadialWeights::init_random(Rng& rng) {
  init_affine(w1, &b1, n_in, rng);
  init_affine(w2, &b2, d_edge, rng);
  init_affine(w3, &b3, d_edge, rng);
}

std::vector<double> radial_function(const std::vector<double>& basis,
                                    const std::vector<double>& source_embed,
                                    const std::vector<double>& target_embed,
                                    const RadialWeights& w) {
  if (static_cast<int>(basis.size() + source_embed.size() + target_embed.size()) != w.n_in)
    throw std::invalid_argument("radial_function: input size mismatch");
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(w.n_in));
  x.insert(x.end(), basis.begin(), basis.end());
  x.insert(x.end(), source_embed.begin(), source_embed.end());
  x.insert(x.end(), target_embed.begin(), target_embed.end());

  std::vector<double> h;
  affine(w.w1, w.b1, x, h);
  scalar_layer_norm(h.data(), w.d_edge, w.g1.data(), w.be1.data());
  for (double& v : h) v = silu(v);
  std::vector<double> h2;
  affine(w.w2, w.b2, h, h2);
  scalar_layer_norm(h2.data(), w.d_edge, w.g2.data(), w.be2.data());
  for (double& v : h2) v = silu(v);
  std::vector<double> out;
  affine(w.w3, w.b3, h2, out);
  return out;
}

EdgeDegreeWeights EdgeDegreeWeights::make(const ModelConfig& cfg) {
  EdgeDegreeWeights w;
  w.edge_proj.assign(static_cast<std::size_t>(cfg.channels) * cfg.d_edge, 0.0);
  w.so2 = SO2LinearWeights::make(IrrepsLayout{0, cfg.channels, 0}, cfg.feature_layout(),
                                 cfg.m_max);
  return w;
}

void EdgeDegreeWeights::init_random(Rng& rng) {
  const int d_edge = static_cast<int>(edge_proj.size()) / so2.in.channels;
  init_affine(edge_proj, nullptr, d_edge, rng);
  so2.init_random(rng);
}

AttentionWeights AttentionWeights::make(const ModelConfig& cfg, const IrrepsLayout& out_layout) {
  AttentionWeights w;
  w.n_heads = cfg.n_heads;
  w.d_alpha = cfg.d_attn_alpha;
  w.d_value = cfg.d_attn_value;
  w.d_hidden = cfg.d_attn_hidden;

  const IrrepsLayout cat{cfg.l_max, 2 * cfg.channels, 0};
  const IrrepsLayout hidden{cfg.l_max, cfg.d_attn_hidden,
                            cfg.n_heads * cfg.d_attn_alpha + cfg.d_attn_hidden};
  const IrrepsLayout value_out{cfg.l_max, cfg.n_heads * cfg.d_attn_value, 0};

  w.edge_proj.assign(static_cast<std::size_t>(2 * cfg.channels) * cfg.d_edge, 0.0);
  w.so2_first = SO2LinearWeights::make(cat, hidden, cfg.m_max);
  w.ln_alpha_gamma.assign(static_cast<std::size_t>(cfg.n_heads * cfg.d_attn_alpha), 1.0);
  w.ln_alpha_beta.assign(w.ln_alpha_gamma.size(), 0.0);
  w.alpha.assign(static_cast<std::size_t>(cfg.n_heads) * cfg.d_attn_alpha, 0.0);
  w.so2_second =
      SO2LinearWeights::make(IrrepsLayout{cfg.l_max, cfg.d_attn_hidden, 0}, value_out, cfg.m_max);
  w.out_proj = LinearWeights::make(value_out, out_layout);
  return w;
}

void AttentionWeights::init_random(Rng& rng) {
  const int d_edge = static_cast<int>(edge_proj.size()) / so2_first.in.channels;
  init_affine(edge_proj, nullptr, d_edge, rng);
  so2_first.init_random(rng);
  const double ab = std::sqrt(3.0 / d_alpha);
  for (double& x : alpha) x = rng.uniform(-ab, ab);
  so2_second.init_random(rng);
  out_proj.init_random(rng);
}

FFNWeights FFNWeights::make(const ModelConfig& cfg, const IrrepsLayout& in_layout,
                            const IrrepsLayout& out_layout) {
  FFNWeights w;
  const IrrepsLayout mid{cfg.l_max, cfg.d_ffn, cfg.d_ffn};
  w.lin1 = LinearWeights::make(in_layout, mid);
  w.mw1.assign(static_cast<std::size_t>(cfg.d_ffn) * cfg.d_ffn, 0.0);
  w.mb1.assign(static_cast<std::size_t>(cfg.d_ffn), 0.0);
  w.mw2 = w.mw1;
  w.mb2 = w.mb1;
  w.mw3 = w.mw1;
  w.mb3 = w.mb1;
  w.lin2 = LinearWeights::make(IrrepsLayout{cfg.l_max, cfg.d_ffn, 0}, out_layout);
  return w;
}

void FFNWeights::init_random(Rng& rng) {
  lin1.init_random(rng);
  const int d = static_cast<int>(mb1.size());
  init_affine(mw1, &mb1, d, rng);
  init_affine(mw2, &mb2, d, rng);
  init_affine(mw3, &mb3, d, rng);
  lin2.init_random(rng);
}

ModelWeights ModelWeights::make(const ModelConfig& cfg) {
  cfg.validate();
  ModelWeights w;
  w.atom_embed.assign(static_cast<std::size_t>(cfg.n_species) * cfg.channels, 0.0);
  w.src_species_embed.assign(static_cast<std::size_t>(cfg.n_species) * cfg.d_edge, 0.0);
  w.tgt_species_embed = w.src_species_embed;
  w.radial = RadialWeights::make(cfg.n_radial_bases + 2 * cfg.d_edge, cfg.d_edge);
  w.edge_degree = EdgeDegreeWeights::make(cfg);
  w.blocks.resize(static_cast<std::size_t>(cfg.n_blocks));
  for (auto& b : w.blocks) {
    b.norm_attn = NormParams::make(cfg.feature_layout());
    b.attn = AttentionWeights::make(cfg, cfg.feature_layout());
    b.norm_ffn = NormParams::make(cfg.feature_layout());
    b.ffn = FFNWeights::make(cfg, cfg.feature_layout(), cfg.feature_layout());
  }
  w.final_norm = NormParams::make(cfg.feature_layout());
  w.energy_head = FFNWeights::make(cfg, cfg.feature_layout(), IrrepsLayout{0, 1, 0});
  w.force_head = AttentionWeights::make(cfg, IrrepsLayout{1, 1, 0});
  return w;
}

void ModelWeights::init_random(Rng& rng) {
  for (double& x : atom_embed) x = rng.gaussian();
  for (double& x : src_species_embed) x = rng.gaussian();
  for (double& x : tgt_species_embed) x = rng.gaussian();
  radial.init_random(rng);
  edge_degree.init_random(rng);
  for (auto& b : blocks) {
    b.attn.init_random(rng);
    b.ffn.init_random(rng);
  }
  energy_head.init_random(rng);
  force_head.init_random(rng);
}

namespace {

void visit_vec(const std::string& name, const std::vector<int>& shape, std::vector<double>& d,
               const ModelWeights::TensorVisitor& v) {
  v(name, shape, d);
}

void visit_so2(const std::string& prefix, SO2LinearWeights& w,
               const ModelWeights::TensorVisitor& v) {
  for (int li = 0; li <= w.in.lmax; ++li)
    for (int lo = 0; lo <= w.out.lmax; ++lo)
      visit_vec(prefix + ".w0.l" + std::to_string(li) + ".l" + std::to_string(lo),
                {w.out.ch(lo), w.in.ch(li)}, w.mat0(li, lo), v);
  for (int m = 1; m < static_cast<int>(w.wp.size()); ++m)
    for (int li = m; li <= w.in.lmax; ++li)
      for (int lo = m; lo <= w.out.lmax; ++lo) {
        const std::string tag =
            ".m" + std::to_string(m) + ".l" + std::to_string(li) + ".l" + std::to_string(lo);
        visit_vec(prefix + ".wp" + tag, {w.out.ch(lo), w.in.ch(li)},
                  w.wp[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
                      [static_cast<std::size_t>(lo)],
                  v);
        visit_vec(prefix + ".wn" + tag, {w.out.ch(lo), w.in.ch(li)},
                  w.wn[static_cast<std::size_t>(m)][static_cast<std::size_t>(li)]
                      [static_cast<std::size_t>(lo)],
                  v);
      }
}

void visit_linear(const std::string& prefix, LinearWeights& w,
                  const ModelWeights::TensorVisitor& v) {
  for (int L = 0; L <= w.out.lmax; ++L)
    visit_vec(prefix + ".w.l" + std::to_string(L), {w.out.ch(L), w.in.ch(L)},
              w.w[static_cast<std::size_t>(L)], v);
  visit_vec(prefix + ".bias0", {static_cast<int>(w.bias0.size())}, w.bias0, v);
}

void visit_norm(const std::string& prefix, NormParams& p, const ModelWeights::TensorVisitor& v) {
  visit_vec(prefix + ".gamma0", {static_cast<int>(p.gamma0.size())}, p.gamma0, v);
  visit_vec(prefix + ".beta0", {static_cast<int>(p.beta0.size())}, p.beta0, v);
  for (std::size_t L = 0; L < p.gamma.size(); ++L)
    visit_vec(prefix + ".gamma.l" + std::to_string(L + 1),
              {static_cast<int>(p.gamma[L].size())}, p.gamma[L], v);
}

void visit_radial(const std::string& prefix, RadialWeights& w,
                  const ModelWeights::TensorVisitor& v) {
  visit_vec(prefix + ".w1", {w.d_edge, w.n_in}, w.w1, v);
  visit_vec(prefix + ".b1", {w.d_edge}, w.b1, v);
  visit_vec(prefix + ".ln1.gamma", {w.d_edge}, w.g1, v);
  visit_vec(prefix + ".ln1.beta", {w.d_edge}, w.be1, v);
  visit_vec(prefix + ".w2", {w.d_edge, w.d_edge}, w.w2, v);
  visit_vec(prefix + ".b2", {w.d_edge}, w.b2, v);
  visit_vec(prefix + ".ln2.gamma", {w.d_edge}, w.g2, v);
  visit_vec(prefix + ".ln2.beta", {w.d_edge}, w.be2, v);
  visit_vec(prefix + ".w3", {w.d_edge, w.d_edge}, w.w3, v);
  visit_vec(prefix + ".b3", {w.d_edge}, w.b3, v);
}

void visit_attention(const std::string& prefix, AttentionWeights& w, int d_edge,
                     const ModelWeights::TensorVisitor& v) {
  visit_vec(prefix + ".edge_proj", {w.so2_first.in.channels, d_edge}, w.edge_proj, v);
  visit_so2(prefix + ".so2_first", w.so2_first, v);
  visit_vec(prefix + ".ln_alpha.gamma", {static_cast<int>(w.ln_alpha_gamma.size())},
            w.ln_alpha_gamma, v);
  visit_vec(prefix + ".ln_alpha.beta", {static_cast<int>(w.ln_alpha_beta.size())},
            w.ln_alpha_beta, v);
  visit_vec(prefix + ".alpha", {w.n_heads, w.d_alpha}, w.alpha, v);
  visit_so2(prefix + ".so2_second", w.so2_second, v);
  visit_linear(prefix + ".out_proj", w.out_proj, v);
}

void visit_ffn(const std::string& prefix, FFNWeights& w, const ModelWeights::TensorVisitor& v) {
  const int d = static_cast<int>(w.mb1.size());
  visit_linear(prefix + ".lin1", w.lin1, v);
  visit_vec(prefix + ".mlp.w1", {d, d}, w.mw1, v);
  visit_vec(prefix + ".mlp.b1", {d}, w.mb1, v);
  visit_vec(prefix + ".mlp.w2", {d, d}, w.mw2, v);
  visit_vec(prefix + ".mlp.b2", {d}, w.mb2, v);
  visit_vec(prefix + ".mlp.w3", {d, d}, w.mw3, v);
  visit_vec(prefix + ".mlp.b3", {d}, w.mb3, v);
  visit_linear(prefix + ".lin2", w.lin2, v);
}

}  // namespace

void ModelWeights::visit(const ModelConfig& cfg, const TensorVisitor& v) {
  visit_vec("atom_embed", {cfg.n_species, cfg.channels}, atom_embed, v);
  visit_vec("radial.src_species_embed", {cfg.n_species, cfg.d_edge}, src_species_embed, v);
  visit_vec("radial.tgt_species_embed", {cfg.n_species, cfg.d_edge}, tgt_species_embed, v);
  visit_radial("radial", radial, v);
  visit_vec("edge_degree.edge_proj", {cfg.channels, cfg.d_edge}, edge_degree.edge_proj, v);
  visit_so2("edge_degree.so2", edge_degree.so2, v);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string p = "block" + std::to_string(b);
    visit_norm(p + ".norm_attn", blocks[b].norm_attn, v);
    visit_attention(p + ".attn", blocks[b].attn, cfg.d_edge, v);
    visit_norm(p + ".norm_ffn", blocks[b].norm_ffn, v);
    visit_ffn(p + ".ffn", blocks[b].ffn, v);
  }
  visit_norm("final_norm", final_norm, v);
  visit_ffn("energy_head", energy_head, v);
  visit_attention("force_head", force_head, cfg.d_edge, v);
}

std::vector<EdgeData> build_edge_data(const ModelConfig& cfg, const ModelWeights& w,
                                      const AtomGraph& g) {
  std::vector<EdgeData> ed(g.edges.size());
  const AtomicStructure& s = *g.structure;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& edge = g.edges[e];
    const int zs = s.species[static_cast<std::size_t>(edge.source)];
    const int zt = s.species[static_cast<std::size_t>(edge.target)];
    if (zs > cfg.n_species || zt > cfg.n_species)
      throw std::invalid_argument("species id beyond the configured embedding table");
    std::vector<double> basis = gaussian_radial_basis(edge.dist, cfg.n_radial_bases, cfg.cutoff);
    std::vector<double> se(w.src_species_embed.begin() + static_cast<long>(zs - 1) * cfg.d_edge,
                           w.src_species_embed.begin() + static_cast<long>(zs) * cfg.d_edge);
    std::vector<double> te(w.tgt_species_embed.begin() + static_cast<long>(zt - 1) * cfg.d_edge,
                           w.tgt_species_embed.begin() + static_cast<long>(zt) * cfg.d_edge);
    ed[e].embed = radial_function(basis, se, te, w.radial);
    ed[e].rot = so3::wigner_blocks(edge.align, cfg.l_max);
    ed[e].rot_inv.resize(ed[e].rot.size());
    for (std::size_t i = 0; i < ed[e].rot.size(); ++i)
      ed[e].rot_inv[i] = ed[e].rot[i].transposed();
  }
  return ed;
}

IrrepsFeature atom_embedding(const ModelConfig& cfg, const ModelWeights& w, int species) {
  if (species < 1 || species > cfg.n_species)
    throw std::invalid_argument("atom_embedding: species id out of range");
  IrrepsFeature f(cfg.feature_layout());
  for (int c = 0; c < cfg.channels; ++c)
    f.at(0, 0, c) = w.atom_embed[static_cast<std::size_t>(species - 1) * cfg.channels + c];
  return f;
}

std::vector<IrrepsFeature> edge_degree_embedding(const ModelConfig& cfg, const ModelWeights& w,
                                                 const AtomGraph& g,
                                                 const std::vector<EdgeData>& ed) {
  const int n = g.structure->size();
  std::vector<IrrepsFeature> out(static_cast<std::size_t>(n),
                                 IrrepsFeature(cfg.feature_layout()));
  const IrrepsLayout scalar_in{0, cfg.channels, 0};
  for (int i = 0; i < n; ++i) {
    for (int k = g.first_edge[static_cast<std::size_t>(i)];
         k < g.first_edge[static_cast<std::size_t>(i + 1)]; ++k) {
      const Edge& edge = g.edges[static_cast<std::size_t>(k)];
      const EdgeData& data = ed[static_cast<std::size_t>(k)];
      // source scalars are rotation-invariant, so no forward rotation needed
      IrrepsFeature src(scalar_in);
      const int zs = g.structure->species[static_cast<std::size_t>(edge.source)];
      for (int c = 0; c < cfg.channels; ++c)
        src.v[static_cast<std::size_t>(c)] =
            w.atom_embed[static_cast<std::size_t>(zs - 1) * cfg.channels + c];
      IrrepsFeature msg = so2_linear(src, w.edge_degree.so2);
      // distance information enters as a channel-wise scale
      for (int c = 0; c < cfg.channels; ++c) {
        double s = 0.0;
        const double* row = &w.edge_degree.edge_proj[static_cast<std::size_t>(c) * cfg.d_edge];
        for (int q = 0; q < cfg.d_edge; ++q) s += row[q] * data.embed[static_cast<std::size_t>(q)];
        for (int L = 0; L <= cfg.l_max; ++L)
          for (int m = -L; m <= L; ++m) msg.at(L, m, c) *= s;
      }
      IrrepsFeature back = rotate_feature(msg, data.rot_inv);
      for (std::size_t q = 0; q < back.v.size(); ++q)
        out[static_cast<std::size_t>(i)].v[q] += back.v[q];
    }
  }
  return out;
}

std::vector<IrrepsFeature> graph_attention(const ModelConfig& cfg, const AttentionWeights& w,
                                           const std::vector<IrrepsFeature>& x,
                                           const AtomGraph& g, const std::vector<EdgeData>& ed,
                                           const S2Grid& grid, int n_threads,
                                           AttentionTrace* trace) {
  const int n = g.structure->size();
  const int n_alpha = w.n_heads * w.d_alpha;
  const IrrepsLayout cat_layout = w.so2_first.in;
  const IrrepsLayout value_in{cfg.l_max, w.d_hidden, w.d_hidden};
  const IrrepsLayout value_out = w.so2_second.out;
  const int cat_ch = cat_layout.channels;

  if (trace) {
    trace->f0_ln.assign(g.edges.size(), {});
    trace->logits.assign(g.edges.size(), {});
    trace->weights.assign(g.edges.size(), {});
    trace->values.assign(g.edges.size(), IrrepsFeature{});
  }

  std::vector<IrrepsFeature> out(static_cast<std::size_t>(n),
                                 IrrepsFeature(w.out_proj.out));

  parallel_for(n, n_threads, [&](int i) {
    const int e0 = g.first_edge[static_cast<std::size_t>(i)];
    const int e1 = g.first_edge[static_cast<std::size_t>(i + 1)];
    const int ne = e1 - e0;
    if (ne == 0) return;  // zero-neighbor node: attention output stays zero

    std::vector<IrrepsFeature> values(static_cast<std::size_t>(ne));
    std::vector<std::vector<double>> logits(static_cast<std::size_t>(ne));

    for (int k = 0; k < ne; ++k) {
      const Edge& edge = g.edges[static_cast<std::size_t>(e0 + k)];
      const EdgeData& data = ed[static_cast<std::size_t>(e0 + k)];
      const IrrepsFeature& xi = x[static_cast<std::size_t>(edge.target)];
      const IrrepsFeature& xj = x[static_cast<std::size_t>(edge.source)];

      IrrepsFeature cat(cat_layout);
      for (int L = 0; L <= cfg.l_max; ++L)
        for (int m = -L; m <= L; ++m) {
          double* dst = &cat.v[static_cast<std::size_t>(cat.index(L, m, 0))];
          const double* a = &xi.v[static_cast<std::size_t>(xi.index(L, m, 0))];
          const double* b = &xj.v[static_cast<std::size_t>(xj.index(L, m, 0))];
          for (int c = 0; c < cfg.channels; ++c) {
            dst[c] = a[c];
            dst[cfg.channels + c] = b[c];
          }
        }
      IrrepsFeature aligned = rotate_feature(cat, data.rot);

      // channel-wise distance scaling before the first SO(2) layer
      for (int c = 0; c < cat_ch; ++c) {
        double s = 0.0;
        const double* row = &w.edge_proj[static_cast<std::size_t>(c) * cfg.d_edge];
        for (int q = 0; q < cfg.d_edge; ++q) s += row[q] * data.embed[static_cast<std::size_t>(q)];
        for (int L = 0; L <= cfg.l_max; ++L)
          for (int m = -L; m <= L; ++m) aligned.at(L, m, c) *= s;
      }

      IrrepsFeature f = so2_linear(aligned, w.so2_first);

      // scalar part: LN -> LeakyReLU -> per-head dot product
      std::vector<double> f0(f.v.begin(), f.v.begin() + n_alpha);
      scalar_layer_norm(f0.data(), n_alpha, w.ln_alpha_gamma.data(), w.ln_alpha_beta.data());
      if (trace) trace->f0_ln[static_cast<std::size_t>(e0 + k)] = f0;
      std::vector<double> z(static_cast<std::size_t>(w.n_heads), 0.0);
      for (int h = 0; h < w.n_heads; ++h) {
        double s = 0.0;
        for (int q = 0; q < w.d_alpha; ++q)
          s += w.alpha[static_cast<std::size_t>(h * w.d_alpha + q)] *
               leaky_relu(f0[static_cast<std::size_t>(h * w.d_alpha + q)]);
        z[static_cast<std::size_t>(h)] = s;
      }
      logits[static_cast<std::size_t>(k)] = z;
      if (trace) trace->logits[static_cast<std::size_t>(e0 + k)] = z;

      // value branch: separable S^2 with a single SiLU, then second SO(2)
      IrrepsFeature vin(value_in);
      std::copy(f.v.begin() + n_alpha, f.v.end(), vin.v.begin());
      IrrepsFeature act = separable_s2_activation(
          vin, [](double* vals, int nc) {
            for (int c = 0; c < nc; ++c) vals[c] = silu(vals[c]);
          },
          grid);
      values[static_cast<std::size_t>(k)] = so2_linear(act, w.so2_second);
      if (trace) trace->values[static_cast<std::size_t>(e0 + k)] = values[static_cast<std::size_t>(k)];
    }

    // softmax over neighbors, per head
    std::vector<std::vector<double>> a(static_cast<std::size_t>(ne),
                                       std::vector<double>(static_cast<std::size_t>(w.n_heads)));
    for (int h = 0; h < w.n_heads; ++h) {
      double zmax = logits[0][static_cast<std::size_t>(h)];
      for (int k = 1; k < ne; ++k)
        zmax = std::max(zmax, logits[static_cast<std::size_t>(k)][static_cast<std::size_t>(h)]);
      double denom = 0.0;
      for (int k = 0; k < ne; ++k) {
        const double ez =
            std::exp(logits[static_cast<std::size_t>(k)][static_cast<std::size_t>(h)] - zmax);
        a[static_cast<std::size_t>(k)][static_cast<std::size_t>(h)] = ez;
        denom += ez;
      }
      for (int k = 0; k < ne; ++k)
        a[static_cast<std::size_t>(k)][static_cast<std::size_t>(h)] /= denom;
    }
    if (trace)
      for (int k = 0; k < ne; ++k)
        trace->weights[static_cast<std::size_t>(e0 + k)] = a[static_cast<std::size_t>(k)];

    // message = D^-1 (a * v), summed over neighbors
    IrrepsFeature acc(value_out);
    for (int k = 0; k < ne; ++k) {
      IrrepsFeature& val = values[static_cast<std::size_t>(k)];
      for (int h = 0; h < w.n_heads; ++h) {
        const double ah = a[static_cast<std::size_t>(k)][static_cast<std::size_t>(h)];
        for (int L = 0; L <= cfg.l_max; ++L)
          for (int m = -L; m <= L; ++m)
            for (int c = 0; c < w.d_value; ++c) val.at(L, m, h * w.d_value + c) *= ah;
      }
      IrrepsFeature back =
          rotate_feature(val, ed[static_cast<std::size_t>(e0 + k)].rot_inv);
      for (std::size_t q = 0; q < acc.v.size(); ++q) acc.v[q] += back.v[q];
    }
    out[static_cast<std::size_t>(i)] = equivariant_linear(acc, w.out_proj);
  });

  return out;
}

IrrepsFeature ffn(const IrrepsFeature& x, const FFNWeights& w, const S2Grid& grid) {
  IrrepsFeature mid = equivariant_linear(x, w.lin1);
  IrrepsFeature act = separable_s2_activation(
      mid,
      [&](double* vals, int nc) {
        std::vector<double> in(vals, vals + nc), h, h2, o;
        affine(w.mw1, w.mb1, in, h);
        for (double& v : h) v = silu(v);
        affine(w.mw2, w.mb2, h, h2);
        for (double& v : h2) v = silu(v);
        affine(w.mw3, w.mb3, h2, o);
        for (int c = 0; c < nc; ++c) vals[c] = o[static_cast<std::size_t>(c)];
      },
      grid);
  return equivariant_linear(act, w.lin2);
}

std::vector<IrrepsFeature> transformer_block(const ModelConfig& cfg, const BlockWeights& w,
                                             const std::vector<IrrepsFeature>& x,
                                             const AtomGraph& g, const std::vector<EdgeData>& ed,
                                             const S2Grid& grid, int n_threads) {
  const int n = static_cast<int>(x.size());
  std::vector<IrrepsFeature> normed(x.size());
  for (int i = 0; i < n; ++i)
    normed[static_cast<std::size_t>(i)] =
        separable_layer_norm(x[static_cast<std::size_t>(i)], w.norm_attn);
  std::vector<IrrepsFeature> attn_out =
      graph_attention(cfg, w.attn, normed, g, ed, grid, n_threads);

  std::vector<IrrepsFeature> y(x.size());
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
    for (std::size_t q = 0; q < y[static_cast<std::size_t>(i)].v.size(); ++q)
      y[static_cast<std::size_t>(i)].v[q] += attn_out[static_cast<std::size_t>(i)].v[q];
  }

  parallel_for(n, n_threads, [&](int i) {
    IrrepsFeature f =
        ffn(separable_layer_norm(y[static_cast<std::size_t>(i)], w.norm_ffn), w.ffn, grid);
    for (std::size_t q = 0; q < y[static_cast<std::size_t>(i)].v.size(); ++q)
      y[static_cast<std::size_t>(i)].v[q] += f.v[q];
  });
  return y;
}

double energy_head(const ModelConfig& cfg, const ModelWeights& w,
                   const std::vector<IrrepsFeature>& x, const S2Grid& grid) {
  (void)cfg;
  double e = 0.0;
  for (const IrrepsFeature& xi : x) e += ffn(xi, w.energy_head, grid).v[0];
  return e;
}

std::vector<Vec3> force_head(const ModelConfig& cfg, const ModelWeights& w,
                             const std::vector<IrrepsFeature>& x, const AtomGraph& g,
                             const std::vector<EdgeData>& ed, const S2Grid& grid,
                             int n_threads) {
  std::vector<IrrepsFeature> v =
      graph_attention(cfg, w.force_head, x, g, ed, grid, n_threads);
  std::vector<Vec3> forces(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d1[3] = {v[i].at(1, -1, 0), v[i].at(1, 0, 0), v[i].at(1, 1, 0)};
    forces[i] = vector_from_degree1(d1);
  }
  return forces;
}

ForwardResult forward(const ModelConfig& cfg, const ModelWeights& w, const AtomGraph& g,
                      int n_threads) {
  const S2Grid grid(cfg.grid_resolution, cfg.grid_resolution, cfg.l_max);
  const std::vector<EdgeData> ed = build_edge_data(cfg, w, g);
  const int n = g.structure->size();

  std::vector<IrrepsFeature> x = edge_degree_embedding(cfg, w, g, ed);
  for (int i = 0; i < n; ++i) {
    IrrepsFeature emb =
        atom_embedding(cfg, w, g.structure->species[static_cast<std::size_t>(i)]);
    for (std::size_t q = 0; q < emb.v.size(); ++q) x[static_cast<std::size_t>(i)].v[q] += emb.v[q];
  }

  for (const BlockWeights& b : w.blocks) x = transformer_block(cfg, b, x, g, ed, grid, n_threads);

  for (int i = 0; i < n; ++i)
    x[static_cast<std::size_t>(i)] = separable_layer_norm(x[static_cast<std::size_t>(i)], w.final_norm);

  ForwardResult r;
  r.energy = energy_head(cfg, w, x, grid);
  r.forces = force_head(cfg, w, x, g, ed, grid, n_threads);
  return r;
}

}  // namespace equikernel
