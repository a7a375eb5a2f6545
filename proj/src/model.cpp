#include "genhop/model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "genhop/rng.hpp"

namespace genhop {

void ModelConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("ModelConfig: layers must be >= 1");
  if (hidden_dim < 1 || pe_dim < 1 || mlp_depth < 1 || node_feature_dim < 1)
    throw std::invalid_argument("ModelConfig: dims must be positive");
  if ((use_closed_walks || use_high_order) && hops < 2)
    throw std::invalid_argument("ModelConfig: hops must be >= 2 when k-hop terms are enabled");
  if (!use_structural && !use_positional)
    throw std::invalid_argument("ModelConfig: at least one branch must be enabled");
}

int ModelConfig::graph_embedding_dim() const {
  return ((use_structural ? 1 : 0) + (use_positional ? 1 : 0)) * hidden_dim;
}

namespace {

bool has_edge_terms(const ModelConfig& c) {
  return c.use_local_pat && (c.use_edge_centrality ||
                             (c.use_raw_edge_features && c.edge_attr_dim > 0));
}

// Ordered parameter inventory; initialization and tape registration both
// walk this list so the RNG stream is stable.
struct ParamSpec {
  std::string name;
  std::size_t rows, cols;
  enum class Init { kUniformFanIn, kZero, kOne } init;
};

std::vector<ParamSpec> weight_inventory(const ModelConfig& c) {
  using Init = ParamSpec::Init;
  std::vector<ParamSpec> specs;
  const std::size_t d = c.hidden_dim;
  auto mlp = [&](const std::string& prefix, std::size_t in_dim) {
    for (int s = 0; s < c.mlp_depth; ++s) {
      const std::size_t rows = s == 0 ? in_dim : d;
      specs.push_back({prefix + ".mlp" + std::to_string(s) + ".w", rows, d, Init::kUniformFanIn});
      specs.push_back({prefix + ".mlp" + std::to_string(s) + ".b", 1, d, Init::kZero});
      if (c.use_batch_norm) {
        specs.push_back({prefix + ".mlp" + std::to_string(s) + ".bn.gamma", 1, d, Init::kOne});
        specs.push_back({prefix + ".mlp" + std::to_string(s) + ".bn.beta", 1, d, Init::kZero});
      }
    }
  };
  auto head = [&](const std::string& prefix, std::size_t in_dim) {
    specs.push_back({prefix + ".0.w", in_dim, d, Init::kUniformFanIn});
    specs.push_back({prefix + ".0.b", 1, d, Init::kZero});
    specs.push_back({prefix + ".1.w", d, d, Init::kUniformFanIn});
    specs.push_back({prefix + ".1.b", 1, d, Init::kZero});
  };

  if (c.use_structural) {
    specs.push_back({"input.node_proj.w", static_cast<std::size_t>(c.node_feature_dim), d,
                     Init::kUniformFanIn});
    specs.push_back({"input.node_proj.b", 1, d, Init::kZero});
  }
  if (c.use_positional) {
    specs.push_back({"input.pos_proj.w", static_cast<std::size_t>(c.pe_dim), d,
                     Init::kUniformFanIn});
    specs.push_back({"input.pos_proj.b", 1, d, Init::kZero});
  }
  for (int l = 0; l < c.layers; ++l) {
    const std::string ls = std::to_string(l);
    if (c.use_structural) {
      specs.push_back({"struct.l" + ls + ".eps", 1, 1, Init::kZero});
      mlp("struct.l" + ls, d);
    }
    if (c.use_positional) {
      specs.push_back({"pos.l" + ls + ".eps", 1, 1, Init::kZero});
      mlp("pos.l" + ls, d);
    }
    if (c.use_local_pat && c.use_edge_centrality) {
      specs.push_back({"edge_c.l" + ls + ".0.w", 3, d, Init::kUniformFanIn});
      specs.push_back({"edge_c.l" + ls + ".0.b", 1, d, Init::kZero});
      specs.push_back({"edge_c.l" + ls + ".1.w", d, d, Init::kUniformFanIn});
      specs.push_back({"edge_c.l" + ls + ".1.b", 1, d, Init::kZero});
    }
    if (c.use_local_pat && c.use_raw_edge_features && c.edge_attr_dim > 0) {
      specs.push_back({"edge_b.l" + ls + ".0.w", static_cast<std::size_t>(c.edge_attr_dim), d,
                       Init::kUniformFanIn});
      specs.push_back({"edge_b.l" + ls + ".0.b", 1, d, Init::kZero});
      specs.push_back({"edge_b.l" + ls + ".1.w", d, d, Init::kUniformFanIn});
      specs.push_back({"edge_b.l" + ls + ".1.b", 1, d, Init::kZero});
    }
  }
  if (c.use_structural) {
    head("head.graph.struct", static_cast<std::size_t>(c.layers) * d);
    head("head.node.struct", d);
  }
  if (c.use_positional) {
    head("head.graph.pos", static_cast<std::size_t>(c.layers) * d);
    head("head.node.pos", d);
  }
  return specs;
}

std::vector<ParamSpec> state_inventory(const ModelConfig& c) {
  using Init = ParamSpec::Init;
  std::vector<ParamSpec> specs;
  if (!c.use_batch_norm) return specs;
  const std::size_t d = c.hidden_dim;
  for (int l = 0; l < c.layers; ++l) {
    const std::string ls = std::to_string(l);
    for (int s = 0; s < c.mlp_depth; ++s) {
      if (c.use_structural) {
        specs.push_back({"struct.l" + ls + ".mlp" + std::to_string(s) + ".bn.mean", 1, d,
                         Init::kZero});
        specs.push_back({"struct.l" + ls + ".mlp" + std::to_string(s) + ".bn.var", 1, d,
                         Init::kOne});
      }
      if (c.use_positional) {
        specs.push_back({"pos.l" + ls + ".mlp" + std::to_string(s) + ".bn.mean", 1, d,
                         Init::kZero});
        specs.push_back({"pos.l" + ls + ".mlp" + std::to_string(s) + ".bn.var", 1, d,
                         Init::kOne});
      }
    }
  }
  return specs;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams params;
  Rng rng(mix_seed(seed, 0x70617261));
  for (const ParamSpec& spec : weight_inventory(config)) {
    Matrix m(spec.rows, spec.cols);
    switch (spec.init) {
      case ParamSpec::Init::kUniformFanIn: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.rows));
        for (double& x : m.data) x = rng.uniform(-bound, bound);
        break;
      }
      case ParamSpec::Init::kZero:
        break;
      case ParamSpec::Init::kOne:
        for (double& x : m.data) x = 1.0;
        break;
    }
    params.weights.emplace(spec.name, std::move(m));
  }
  for (const ParamSpec& spec : state_inventory(config)) {
    Matrix m(spec.rows, spec.cols, spec.init == ParamSpec::Init::kOne ? 1.0 : 0.0);
    params.state.emplace(spec.name, std::move(m));
  }
  return params;
}

GraphFeatures featurize(const Graph& g, const ModelConfig& config) {
  GraphFeatures f;
  f.graph = g;
  if (config.use_closed_walks || config.use_high_order) {
    f.walks = closed_walk_profile(g, config.hops);
    f.khop = normalized_khop_weights(g, config.hops, config.khop_denominator);
  }
  if (config.use_edge_centrality) f.centrality_std = edge_feature_table(g).standardized();
  if (config.use_positional) f.pe = laplacian_pe(g, config.pe_dim);
  return f;
}

GraphOperators make_graph_operators(ad::Tape& tape, const GraphFeatures& features,
                                    const ModelConfig& config) {
  const Graph& g = features.graph;
  const int m = g.node_count();
  GraphOperators ops;
  ops.node_count = m;
  ops.edge_count = g.edge_count();

  Matrix adj(m, m);
  for (const auto& [u, v] : g.edges()) {
    adj(u, v) = 1.0;
    adj(v, u) = 1.0;
  }
  ops.adjacency = tape.constant(std::move(adj));

  if (config.use_high_order) {
    Matrix ho(m, m);
    for (int k = 2; k <= features.khop.max_hop; ++k)
      for (int v = 0; v < m; ++v)
        for (const auto& [u, w] : features.khop.at(k, v)) ho(v, u) += w;
    ops.high_order = tape.constant(std::move(ho));
  }
  if (config.use_closed_walks) {
    Matrix cw(m, 1);
    for (int v = 0; v < m; ++v) {
      double total = 0.0;
      for (int k = 2; k <= features.walks.max_hop; ++k) {
        const double count = static_cast<double>(features.walks.values(v, k - 2));
        total += config.log_scale_closed_walks ? std::log1p(count) : count;
      }
      cw(v, 0) = total;
    }
    ops.closed_walk = tape.constant(std::move(cw));
  }
  if (has_edge_terms(config)) {
    Matrix inc(m, g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) {
      inc(g.edges()[e].first, e) = 1.0;
      inc(g.edges()[e].second, e) = 1.0;
    }
    ops.incidence = tape.constant(std::move(inc));
  }
  return ops;
}

ad::Var genhop_layer_preactivation(ad::Tape& tape, const GraphOperators& ops, ad::Var h,
                                   ad::Var epsilon, std::optional<ad::Var> edge_message,
                                   const ModelConfig& config) {
  ad::Var agg = tape.add(h, tape.scale_by(epsilon, h));  // (1 + eps) h
  if (config.use_local_pat) {
    ad::Var msg = tape.matmul(ops.adjacency, h);
    if (edge_message) msg = tape.add(msg, *edge_message);
    agg = tape.add(agg, msg);
  }
  if (config.use_closed_walks) {
    const std::size_t d = tape.value(h).cols;
    agg = tape.add(agg, tape.mul(tape.broadcast_col(ops.closed_walk, d), h));
  }
  if (config.use_high_order) agg = tape.add(agg, tape.matmul(ops.high_order, h));
  return agg;
}

ad::Var pos_layer_preactivation(ad::Tape& tape, const GraphOperators& ops, ad::Var h,
                                ad::Var epsilon, std::optional<ad::Var> edge_message,
                                const ModelConfig& config) {
  ad::Var agg = tape.add(h, tape.scale_by(epsilon, h));
  if (config.use_local_pat) {
    ad::Var msg = tape.matmul(ops.adjacency, h);
    if (edge_message) msg = tape.add(msg, *edge_message);
    agg = tape.add(agg, msg);
  }
  return agg;
}

ad::Var ParamVars::at(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw std::invalid_argument("ParamVars: unknown parameter " + name);
  return it->second;
}

ParamVars params_to_tape(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  ParamVars pv;
  for (const auto& [name, value] : params.weights)
    pv.vars.emplace(name, tape.input(value, requires_grad));
  return pv;
}

namespace {

// Linear -> (BatchNorm) -> ReLU, repeated mlp_depth times.
ad::Var apply_node_mlp(ad::Tape& tape, ad::Var x, const std::string& prefix,
                       const ParamVars& pv, ModelParams& params, const ModelConfig& config,
                       RunMode mode) {
  ad::Var h = x;
  for (int s = 0; s < config.mlp_depth; ++s) {
    const std::string p = prefix + ".mlp" + std::to_string(s);
    h = tape.linear(h, pv.at(p + ".w"), pv.at(p + ".b"));
    if (config.use_batch_norm) {
      h = tape.batch_norm(h, pv.at(p + ".bn.gamma"), pv.at(p + ".bn.beta"),
                          params.state.at(p + ".bn.mean"), params.state.at(p + ".bn.var"),
                          mode == RunMode::kTrain);
    }
    h = tape.relu(h);
  }
  return h;
}

// Linear -> ReLU -> Linear projection head.
ad::Var apply_head(ad::Tape& tape, ad::Var x, const std::string& prefix, const ParamVars& pv) {
  ad::Var h = tape.relu(tape.linear(x, pv.at(prefix + ".0.w"), pv.at(prefix + ".0.b")));
  return tape.linear(h, pv.at(prefix + ".1.w"), pv.at(prefix + ".1.b"));
}

}  // namespace

ForwardVars forward_on_tape(ad::Tape& tape, const GraphFeatures& features, const ParamVars& pv,
                            ModelParams& params, const ModelConfig& config, RunMode mode,
                            std::uint64_t seed) {
  config.validate();
  const Graph& g = features.graph;
  const int m = g.node_count();
  if (m == 0) throw std::invalid_argument("forward_on_tape: empty graph");
  GraphOperators ops = make_graph_operators(tape, features, config);

  ForwardVars out;
  std::vector<ad::Var> struct_layers, pos_layers;

  ad::Var h_struct, h_pos;
  if (config.use_structural)
    h_struct = tape.linear(tape.constant(g.node_features()), pv.at("input.node_proj.w"),
                           pv.at("input.node_proj.b"));
  if (config.use_positional) {
    Matrix pe = features.pe.pe;
    if (mode == RunMode::kTrain)
      pe = random_sign_flip(features.pe, mix_seed(seed, 0x7065666c)).pe;
    h_pos = tape.linear(tape.constant(std::move(pe)), pv.at("input.pos_proj.w"),
                        pv.at("input.pos_proj.b"));
  }

  for (int l = 0; l < config.layers; ++l) {
    const std::string ls = std::to_string(l);
    // shared edge-attribute message for this layer
    std::optional<ad::Var> edge_message;
    if (has_edge_terms(config) && ops.edge_count > 0) {
      std::optional<ad::Var> per_edge;
      if (config.use_edge_centrality) {
        ad::Var e_c = tape.relu(tape.linear(tape.constant(features.centrality_std),
                                            pv.at("edge_c.l" + ls + ".0.w"),
                                            pv.at("edge_c.l" + ls + ".0.b")));
        e_c = tape.linear(e_c, pv.at("edge_c.l" + ls + ".1.w"), pv.at("edge_c.l" + ls + ".1.b"));
        per_edge = e_c;
      }
      if (config.use_raw_edge_features && config.edge_attr_dim > 0 &&
          g.edge_features_raw().has_value()) {
        ad::Var e_b = tape.relu(tape.linear(tape.constant(*g.edge_features_raw()),
                                            pv.at("edge_b.l" + ls + ".0.w"),
                                            pv.at("edge_b.l" + ls + ".0.b")));
        e_b = tape.linear(e_b, pv.at("edge_b.l" + ls + ".1.w"), pv.at("edge_b.l" + ls + ".1.b"));
        per_edge = per_edge ? tape.add(*per_edge, e_b) : e_b;
      }
      if (per_edge) edge_message = tape.matmul(ops.incidence, *per_edge);
    }

    if (config.use_structural) {
      ad::Var agg = genhop_layer_preactivation(tape, ops, h_struct,
                                               pv.at("struct.l" + ls + ".eps"), edge_message,
                                               config);
      h_struct = apply_node_mlp(tape, agg, "struct.l" + ls, pv, params, config, mode);
      struct_layers.push_back(h_struct);
    }
    if (config.use_positional) {
      ad::Var agg = pos_layer_preactivation(tape, ops, h_pos, pv.at("pos.l" + ls + ".eps"),
                                            edge_message, config);
      h_pos = apply_node_mlp(tape, agg, "pos.l" + ls, pv, params, config, mode);
      pos_layers.push_back(h_pos);
    }
  }

  auto branch_outputs = [&](const std::vector<ad::Var>& layer_outputs,
                            const std::string& graph_head, const std::string& node_head,
                            ad::Var& node_out) -> ad::Var {
    ad::Var concat = layer_outputs[0];
    for (std::size_t l = 1; l < layer_outputs.size(); ++l)
      concat = tape.concat_cols(concat, layer_outputs[l]);
    ad::Var pooled = tape.col_sum(concat);  // sum over nodes, fixed order
    ad::Var z = apply_head(tape, pooled, graph_head, pv);
    node_out = apply_head(tape, layer_outputs.back(), node_head, pv);
    return z;
  };

  std::optional<ad::Var> z_struct, z_pos;
  if (config.use_structural)
    z_struct = branch_outputs(struct_layers, "head.graph.struct", "head.node.struct",
                              out.node_struct);
  if (config.use_positional)
    z_pos = branch_outputs(pos_layers, "head.graph.pos", "head.node.pos", out.node_pos);

  if (z_struct && z_pos) {
    out.node_concat = tape.concat_cols(out.node_struct, out.node_pos);
    out.graph_embedding = tape.concat_cols(*z_struct, *z_pos);
  } else if (z_struct) {
    out.node_concat = out.node_struct;
    out.graph_embedding = *z_struct;
  } else {
    out.node_concat = out.node_pos;
    out.graph_embedding = *z_pos;
  }
  return out;
}

GraphEmbeddingOutput forward_embed(const GraphFeatures& features, ModelParams& params,
                                   const ModelConfig& config, RunMode mode, std::uint64_t seed) {
  ad::Tape tape;
  ParamVars pv = params_to_tape(tape, params, false);
  ForwardVars vars = forward_on_tape(tape, features, pv, params, config, mode, seed);
  const int m = features.graph.node_count();
  GraphEmbeddingOutput out;
  out.node_struct =
      config.use_structural ? tape.value(vars.node_struct) : Matrix(m, config.hidden_dim);
  out.node_pos = config.use_positional ? tape.value(vars.node_pos) : Matrix(m, config.hidden_dim);
  out.node_concat = tape.value(vars.node_concat);
  out.graph_embedding = tape.value(vars.graph_embedding);
  return out;
}

GraphEmbeddingOutput forward_embed(const Graph& g, ModelParams& params, const ModelConfig& config,
                                   RunMode mode, std::uint64_t seed) {
  GraphFeatures features = featurize(g, config);
  return forward_embed(features, params, config, mode, seed);
}

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"layers", c.layers},
                        {"hops", c.hops},
                        {"hidden_dim", c.hidden_dim},
                        {"pe_dim", c.pe_dim},
                        {"mlp_depth", c.mlp_depth},
                        {"node_feature_dim", c.node_feature_dim},
                        {"edge_attr_dim", c.edge_attr_dim},
                        {"use_structural", c.use_structural},
                        {"use_local_pat", c.use_local_pat},
                        {"use_closed_walks", c.use_closed_walks},
                        {"use_high_order", c.use_high_order},
                        {"use_positional", c.use_positional},
                        {"use_edge_centrality", c.use_edge_centrality},
                        {"use_raw_edge_features", c.use_raw_edge_features},
                        {"log_scale_closed_walks", c.log_scale_closed_walks},
                        {"use_batch_norm", c.use_batch_norm},
                        {"khop_denominator",
                         c.khop_denominator == KHopDenominator::kHopNeighborhood ? "khop"
                                                                                 : "one_hop"}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.hops = j.at("hops").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.pe_dim = j.at("pe_dim").get<int>();
  c.mlp_depth = j.at("mlp_depth").get<int>();
  c.node_feature_dim = j.at("node_feature_dim").get<int>();
  c.edge_attr_dim = j.at("edge_attr_dim").get<int>();
  c.use_structural = j.at("use_structural").get<bool>();
  c.use_local_pat = j.at("use_local_pat").get<bool>();
  c.use_closed_walks = j.at("use_closed_walks").get<bool>();
  c.use_high_order = j.at("use_high_order").get<bool>();
  c.use_positional = j.at("use_positional").get<bool>();
  c.use_edge_centrality = j.at("use_edge_centrality").get<bool>();
  c.use_raw_edge_features = j.at("use_raw_edge_features").get<bool>();
  c.log_scale_closed_walks = j.at("log_scale_closed_walks").get<bool>();
  c.use_batch_norm = j.at("use_batch_norm").get<bool>();
  c.khop_denominator = j.at("khop_denominator").get<std::string>() == "one_hop"
                           ? KHopDenominator::kOneHopNeighborhood
                           : KHopDenominator::kHopNeighborhood;
  return c;
}

nlohmann::json tensors_to_json(const std::map<std::string, Matrix>& tensors) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, m] : tensors)
    j[name] = {{"shape", {m.rows, m.cols}}, {"data", m.data}};
  return j;
}

std::map<std::string, Matrix> tensors_from_json(const nlohmann::json& j) {
  std::map<std::string, Matrix> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& tj = it.value();
    Matrix m(tj.at("shape")[0].get<std::size_t>(), tj.at("shape")[1].get<std::size_t>());
    const auto& data = tj.at("data");
    if (data.size() != m.data.size())
      throw std::runtime_error("checkpoint: tensor size mismatch for " + it.key());
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = data[i].get<double>();
    out.emplace(it.key(), std::move(m));
  }
  return out;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::string& path) {
  nlohmann::json j;
  j["format"] = "genhop-checkpoint";
  j["version"] = 1;
  j["config"] = config_to_json(config);
  j["weights"] = tensors_to_json(params.weights);
  j["state"] = tensors_to_json(params.state);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << j.dump() << "\n";
}

std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "genhop-checkpoint")
    throw std::runtime_error("load_checkpoint: not a checkpoint file");
  if (j.value("version", 0) != 1)
    throw std::runtime_error("load_checkpoint: unsupported checkpoint version");
  ModelParams params;
  params.weights = tensors_from_json(j.at("weights"));
  params.state = tensors_from_json(j.at("state"));
  return {std::move(params), config_from_json(j.at("config"))};
}

}  // namespace genhop
