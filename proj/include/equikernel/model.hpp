#ifndef EQUIKERNEL_MODEL_HPP_
#define EQUIKERNEL_MODEL_HPP_

#include <functional>
#include <string>
#include <vector>

#include "equikernel/graph.hpp"
#include "equikernel/layers.hpp"
#include "equikernel/so2.hpp"

namespace equikernel {

struct ModelConfig {
  int l_max = 6;
  int m_max = 2;
  int n_blocks = 12;
  int channels = 128;       // d_embed
  int d_attn_hidden = 64;
  int n_heads = 8;
  int d_attn_alpha = 64;    // per head
  int d_attn_value = 16;    // per head
  int d_ffn = 128;
  int grid_resolution = 18; // R x R sphere grid
  int n_radial_bases = 600;
  int d_edge = 128;
  double cutoff = 12.0;     // Angstrom
  int max_neighbors = 20;
  int n_species = 118;

  // base model column of the canonical configuration table
  static ModelConfig base();
  // small profile for tests and desk-scale runs
  static ModelConfig tiny();

  void validate() const;
  IrrepsLayout feature_layout() const { return {l_max, channels, 0}; }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// 0 < distance <= cutoff; centers uniform on [0, cutoff], width = spacing.
std::vector<double> gaussian_radial_basis(double distance, int n_bases, double cutoff);

struct RadialWeights {
  int n_in = 0, d_edge = 0;
  std::vector<double> w1, b1, g1, be1;  // linear + LN
  std::vector<double> w2, b2, g2, be2;
  std::vector<double> w3, b3;           // final linear

  static RadialWeights make(int n_in, int d_edge);
  void init_random(Rng& rng);
};

// Scalar MLP: (basis, source embed, target embed) -> edge distance embedding.
std::vector<double> radial_function(const std::vector<double>& basis,
                                    const std::vector<double>& source_embed,
                                    const std::vector<double>& target_embed,
                                    const RadialWeights& w);

struct EdgeDegreeWeights {
  std::vector<double> edge_proj;  // channels x d_edge, bias-free
  SO2LinearWeights so2;           // scalars -> full layout, m = 0 blocks only

  static EdgeDegreeWeights make(const ModelConfig& cfg);
  void init_random(Rng& rng);
};

struct AttentionWeights {
  int n_heads = 0, d_alpha = 0, d_value = 0, d_hidden = 0;
  std::vector<double> edge_proj;  // 2*channels x d_edge, bias-free
  SO2LinearWeights so2_first;
  std::vector<double> ln_alpha_gamma, ln_alpha_beta;  // shared over heads
  std::vector<double> alpha;                          // n_heads x d_alpha
  SO2LinearWeights so2_second;
  LinearWeights out_proj;

  static AttentionWeights make(const ModelConfig& cfg, const IrrepsLayout& out_layout);
  void init_random(Rng& rng);
};

struct FFNWeights {
  LinearWeights lin1;
  std::vector<double> mw1, mb1, mw2, mb2, mw3, mb3;  // point-wise channel MLP (F)
  LinearWeights lin2;

  static FFNWeights make(const ModelConfig& cfg, const IrrepsLayout& in_layout,
                         const IrrepsLayout& out_layout);
  void init_random(Rng& rng);
};

struct BlockWeights {
  NormParams norm_attn;
  AttentionWeights attn;
  NormParams norm_ffn;
  FFNWeights ffn;
};

struct ModelWeights {
  std::vector<double> atom_embed;                 // n_species x channels
  std::vector<double> src_species_embed;          // n_species x d_edge
  std::vector<double> tgt_species_embed;          // n_species x d_edge
  RadialWeights radial;
  EdgeDegreeWeights edge_degree;
  std::vector<BlockWeights> blocks;
  NormParams final_norm;
  FFNWeights energy_head;
  AttentionWeights force_head;

  static ModelWeights make(const ModelConfig& cfg);
  void init_random(Rng& rng);

  // deterministic enumeration of every tensor; used by the checkpoint codec
  using TensorVisitor =
      std::function<void(const std::string& name, const std::vector<int>& shape,
                         std::vector<double>& data)>;
  void visit(const ModelConfig& cfg, const TensorVisitor& v);
};

// Optional per-edge attention internals for audits.
struct AttentionTrace {
  // indexed by edge id as in AtomGraph::edges
  std::vector<std::vector<double>> f0_ln;   // post-LN scalars
  std::vector<std::vector<double>> logits;  // per head
  std::vector<std::vector<double>> weights; // per head, softmax-normalized
  std::vector<IrrepsFeature> values;        // aligned-frame values, pre-weighting
};

// Per-edge quantities shared by the embedding and all blocks.
struct EdgeData {
  std::vector<double> embed;                 // edge distance embedding
  std::vector<so3::WignerBlock> rot;         // alignment rotation blocks
  std::vector<so3::WignerBlock> rot_inv;
};

std::vector<EdgeData> build_edge_data(const ModelConfig& cfg, const ModelWeights& w,
                                      const AtomGraph& g);

IrrepsFeature atom_embedding(const ModelConfig& cfg, const ModelWeights& w, int species);

// Sum over incoming edges of rotated, distance-scaled SO(2) projections of
// the source atom scalars; zero for isolated nodes.
std::vector<IrrepsFeature> edge_degree_embedding(const ModelConfig& cfg, const ModelWeights& w,
                                                 const AtomGraph& g,
                                                 const std::vector<EdgeData>& ed);

std::vector<IrrepsFeature> graph_attention(const ModelConfig& cfg, const AttentionWeights& w,
                                           const std::vector<IrrepsFeature>& x,
                                           const AtomGraph& g, const std::vector<EdgeData>& ed,
                                           const S2Grid& grid, int n_threads = 1,
                                           AttentionTrace* trace = nullptr);

IrrepsFeature ffn(const IrrepsFeature& x, const FFNWeights& w, const S2Grid& grid);

// Pre-norm residual block: x + attn(SLN(x)), then x + ffn(SLN(x)).
std::vector<IrrepsFeature> transformer_block(const ModelConfig& cfg, const BlockWeights& w,
                                             const std::vector<IrrepsFeature>& x,
                                             const AtomGraph& g, const std::vector<EdgeData>& ed,
                                             const S2Grid& grid, int n_threads = 1);

double energy_head(const ModelConfig& cfg, const ModelWeights& w,
                   const std::vector<IrrepsFeature>& x, const S2Grid& grid);

std::vector<Vec3> force_head(const ModelConfig& cfg, const ModelWeights& w,
                             const std::vector<IrrepsFeature>& x, const AtomGraph& g,
                             const std::vector<EdgeData>& ed, const S2Grid& grid,
                             int n_threads = 1);

struct ForwardResult {
  double energy = 0.0;            // eV
  std::vector<Vec3> forces;       // eV / Angstrom
};

ForwardResult forward(const ModelConfig& cfg, const ModelWeights& w, const AtomGraph& g,
                      int n_threads = 1);

}  // namespace equikernel

#endif  // EQUIKERNEL_MODEL_HPP_
