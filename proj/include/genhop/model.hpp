#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "genhop/autodiff.hpp"
#include "genhop/centrality.hpp"
#include "genhop/graph.hpp"
#include "genhop/spectral.hpp"

namespace genhop {

struct ModelConfig {
  int layers = 2;        // message-passing layers per branch
  int hops = 3;          // K, maximum hop for walk/k-hop terms
  int hidden_dim = 64;   // d
  int pe_dim = 6;        // p
  int mlp_depth = 2;
  int node_feature_dim = 1;  // d'
  int edge_attr_dim = 0;     // raw edge feature width; 0 = none

  // variant switches (ablations toggle these)
  bool use_structural = true;
  bool use_local_pat = true;
  bool use_closed_walks = true;
  bool use_high_order = true;
  bool use_positional = true;
  bool use_edge_centrality = true;
  bool use_raw_edge_features = true;

  // numeric choices
  bool log_scale_closed_walks = true;  // log(1 + A^k_vv) coefficients
  bool use_batch_norm = true;
  KHopDenominator khop_denominator = KHopDenominator::kHopNeighborhood;

  void validate() const;
  /// Output width of the concatenated graph embedding.
  int graph_embedding_dim() const;
};

/// Learnable weights plus batch-norm running statistics, keyed by name.
struct ModelParams {
  std::map<std::string, Matrix> weights;
  std::map<std::string, Matrix> state;
};

/// Uniform init scaled by 1/sqrt(fan_in); epsilons start at 0, batch-norm
/// at gamma=1, beta=0, running mean 0 / var 1. Deterministic per seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Everything the forward pass needs, precomputed once per graph.
struct GraphFeatures {
  Graph graph;
  WalkProfile walks;
  KHopWeights khop;
  Matrix centrality_std;   // e x 3, per-graph standardized
  PositionalEncoding pe;
};

GraphFeatures featurize(const Graph& g, const ModelConfig& config);

enum class RunMode { kTrain, kEval };

struct GraphEmbeddingOutput {
  Matrix node_struct;      // m x d (projected structural node embeddings)
  Matrix node_pos;         // m x d (projected positional node embeddings)
  Matrix node_concat;      // m x d-dagger
  Matrix graph_embedding;  // 1 x d-dagger
};

/// Constant graph operators placed on a tape: dense adjacency, the summed
/// normalized k-hop operator, closed-walk coefficient column, and the
/// node-edge incidence matrix.
struct GraphOperators {
  ad::Var adjacency;
  ad::Var high_order;
  ad::Var closed_walk;  // m x 1
  ad::Var incidence;    // m x e
  int node_count = 0;
  int edge_count = 0;
};

GraphOperators make_graph_operators(ad::Tape& tape, const GraphFeatures& features,
                                    const ModelConfig& config);

/// Pre-MLP aggregation of one structural layer:
///   (1+eps) h + [local] (A h + edge_message) + [cw] cw .* h + [ho] HO h.
/// Exposed separately so exactness tests can check the hand-expanded value.
ad::Var genhop_layer_preactivation(ad::Tape& tape, const GraphOperators& ops, ad::Var h,
                                   ad::Var epsilon, std::optional<ad::Var> edge_message,
                                   const ModelConfig& config);

/// Same aggregation with the two k-hop terms removed (positional branch).
ad::Var pos_layer_preactivation(ad::Tape& tape, const GraphOperators& ops, ad::Var h,
                                ad::Var epsilon, std::optional<ad::Var> edge_message,
                                const ModelConfig& config);

struct ParamVars {
  std::map<std::string, ad::Var> vars;
  ad::Var at(const std::string& name) const;
};

ParamVars params_to_tape(ad::Tape& tape, const ModelParams& params, bool requires_grad);

struct ForwardVars {
  ad::Var node_struct;
  ad::Var node_pos;
  ad::Var node_concat;
  ad::Var graph_embedding;
};

/// Full two-branch forward on a tape. Train mode applies seeded random PE
/// sign flips and batch statistics (updating the running statistics held in
/// `params`); eval mode uses canonical PE signs and running statistics.
ForwardVars forward_on_tape(ad::Tape& tape, const GraphFeatures& features, const ParamVars& pv,
                            ModelParams& params, const ModelConfig& config, RunMode mode,
                            std::uint64_t seed);

GraphEmbeddingOutput forward_embed(const GraphFeatures& features, ModelParams& params,
                                   const ModelConfig& config, RunMode mode, std::uint64_t seed);
GraphEmbeddingOutput forward_embed(const Graph& g, ModelParams& params, const ModelConfig& config,
                                   RunMode mode, std::uint64_t seed);

/// Versioned JSON checkpoint: config, all weight tensors, batch-norm state.
void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::string& path);
std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path);

}  // namespace genhop
