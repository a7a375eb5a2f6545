#include "genhop/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "genhop/rng.hpp"

namespace genhop {

ViewMode view_mode_from_string(const std::string& name) {
  if (name == "split") return ViewMode::kSplit;
  if (name == "sa" || name == "structural") return ViewMode::kStructural;
  if (name == "fa" || name == "feature") return ViewMode::kFeature;
  throw std::invalid_argument("unknown view mode: " + name);
}

std::string to_string(ViewMode mode) {
  switch (mode) {
    case ViewMode::kSplit: return "split";
    case ViewMode::kStructural: return "sa";
    case ViewMode::kFeature: return "fa";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (tau <= 0.0) throw std::invalid_argument("TrainConfig: tau must be > 0");
  if (lambda_inv < 0.0 || lambda_var < 0.0 || lambda_cov < 0.0 || alpha < 0.0)
    throw std::invalid_argument("TrainConfig: loss weights must be >= 0");
  if (gamma <= 0.0 || eps_std <= 0.0)
    throw std::invalid_argument("TrainConfig: gamma and eps_std must be > 0");
  if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight decay must be >= 0");
  if (batch_size < 1 || epochs < 0)
    throw std::invalid_argument("TrainConfig: batch_size/epochs out of range");
  structural_view.validate();
  feature_view.validate();
}

VicregWeights TrainConfig::vicreg_weights() const {
  return {lambda_inv, lambda_var, lambda_cov, gamma, eps_std};
}

AdamOptimizer::AdamOptimizer(double learning_rate, double weight_decay, double beta1,
                             double beta2, double eps)
    : lr_(learning_rate), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(ModelParams& params, const std::map<std::string, Matrix>& grads) {
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, weight] : params.weights) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Matrix& grad = git->second;
    Matrix& m = m_.try_emplace(name, Matrix(weight.rows, weight.cols)).first->second;
    Matrix& v = v_.try_emplace(name, Matrix(weight.rows, weight.cols)).first->second;
    for (std::size_t i = 0; i < weight.data.size(); ++i) {
      const double g = grad.data[i] + weight_decay_ * weight.data[i];
      m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g;
      v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g * g;
      const double m_hat = m.data[i] / bias1;
      const double v_hat = v.data[i] / bias2;
      weight.data[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

ad::Var total_loss(ad::Tape& tape, ad::Var z_i, ad::Var z_j,
                   const std::vector<std::pair<ad::Var, ad::Var>>& node_pairs,
                   const TrainConfig& config) {
  ad::Var graph_term = nt_xent(tape, z_i, z_j, config.tau);
  if (!config.use_vicreg || config.alpha == 0.0 || node_pairs.empty()) return graph_term;
  ad::Var node_sum = tape.constant_scalar(0.0);
  for (const auto& [h_i, h_j] : node_pairs)
    node_sum = tape.add(node_sum,
                        vicreg(tape, h_i, h_j, config.vicreg_weights(),
                               config.vicreg_standard_form));
  ad::Var node_mean = tape.scale(node_sum, 1.0 / static_cast<double>(node_pairs.size()));
  return tape.add(graph_term, tape.scale(node_mean, config.alpha));
}

namespace {

// seed stream tags
constexpr std::uint64_t kTagInit = 0x696e6974;
constexpr std::uint64_t kTagShuffle = 0x73687566;
constexpr std::uint64_t kTagView1 = 0x76317631;
constexpr std::uint64_t kTagView2 = 0x76327632;
constexpr std::uint64_t kTagFlip = 0x666c6970;

struct ViewSpecs {
  AugmentSpec first;
  AugmentSpec second;
};

ViewSpecs specs_for_mode(const TrainConfig& c) {
  switch (c.view_mode) {
    case ViewMode::kSplit:
      return {c.feature_view, c.structural_view};  // (A, X') and (A', X)
    case ViewMode::kStructural:
      return {c.structural_view, c.structural_view};
    case ViewMode::kFeature:
      return {c.feature_view, c.feature_view};
  }
  return {c.feature_view, c.structural_view};
}

// Selection matrix picking the rows of `view.node_origin` that appear in
// `common` (original node ids, ascending).
Matrix selection_matrix(const std::vector<int>& common, const std::vector<int>& origin) {
  Matrix sel(common.size(), origin.size());
  for (std::size_t r = 0; r < common.size(); ++r) {
    auto it = std::lower_bound(origin.begin(), origin.end(), common[r]);
    sel(r, static_cast<std::size_t>(it - origin.begin())) = 1.0;
  }
  return sel;
}

}  // namespace

PretrainResult pretrain(const Dataset& dataset, const TrainConfig& train_config,
                        const ModelConfig& model_config, std::uint64_t seed) {
  train_config.validate();
  model_config.validate();
  if (dataset.graphs.empty()) throw std::invalid_argument("pretrain: empty dataset");

  PretrainResult result;
  result.params = init_params(model_config, mix_seed(seed, kTagInit));
  AdamOptimizer optimizer(train_config.learning_rate, train_config.weight_decay);
  const ViewSpecs specs = specs_for_mode(train_config);
  const std::size_t n = dataset.graphs.size();

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(seed, kTagShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_total = 0.0, graph_total = 0.0, node_total = 0.0;
    for (std::size_t start = 0; start < n; start += train_config.batch_size) {
      const std::size_t stop = std::min(n, start + train_config.batch_size);
      ad::Tape tape;
      ParamVars pv = params_to_tape(tape, result.params, true);

      ad::Var z_i, z_j;
      std::vector<std::pair<ad::Var, ad::Var>> node_pairs;
      for (std::size_t b = start; b < stop; ++b) {
        const int gi = order[b];
        const Graph& g = dataset.graphs[gi];
        const std::uint64_t e64 = static_cast<std::uint64_t>(epoch);
        const std::uint64_t g64 = static_cast<std::uint64_t>(gi);
        AugmentedView view1 = augment_with_map(g, specs.first, mix_seed(seed, kTagView1, e64, g64));
        AugmentedView view2 =
            augment_with_map(g, specs.second, mix_seed(seed, kTagView2, e64, g64));

        GraphFeatures f1 = featurize(view1.graph, model_config);
        GraphFeatures f2 = featurize(view2.graph, model_config);
        // one PE sign-flip draw per (epoch, graph): identical augmentations
        // then yield identical views
        const std::uint64_t flip_seed = mix_seed(seed, kTagFlip, e64, g64);
        ForwardVars fw1 = forward_on_tape(tape, f1, pv, result.params, model_config,
                                          RunMode::kTrain, flip_seed);
        ForwardVars fw2 = forward_on_tape(tape, f2, pv, result.params, model_config,
                                          RunMode::kTrain, flip_seed);

        z_i = z_i.valid() ? tape.concat_rows(z_i, fw1.graph_embedding) : fw1.graph_embedding;
        z_j = z_j.valid() ? tape.concat_rows(z_j, fw2.graph_embedding) : fw2.graph_embedding;

        if (train_config.use_vicreg && train_config.alpha > 0.0) {
          std::vector<int> common;
          std::set_intersection(view1.node_origin.begin(), view1.node_origin.end(),
                                view2.node_origin.begin(), view2.node_origin.end(),
                                std::back_inserter(common));
          if (!common.empty()) {
            ad::Var h1 = tape.matmul(tape.constant(selection_matrix(common, view1.node_origin)),
                                     fw1.node_concat);
            ad::Var h2 = tape.matmul(tape.constant(selection_matrix(common, view2.node_origin)),
                                     fw2.node_concat);
            node_pairs.emplace_back(h1, h2);
          }
        }
      }

      ad::Var graph_term = nt_xent(tape, z_i, z_j, train_config.tau);
      ad::Var loss = graph_term;
      ad::Var node_mean;
      if (train_config.use_vicreg && train_config.alpha > 0.0 && !node_pairs.empty()) {
        ad::Var node_sum = tape.constant_scalar(0.0);
        for (const auto& [h1, h2] : node_pairs)
          node_sum = tape.add(node_sum, vicreg(tape, h1, h2, train_config.vicreg_weights(),
                                               train_config.vicreg_standard_form));
        node_mean = tape.scale(node_sum, 1.0 / static_cast<double>(node_pairs.size()));
        loss = tape.add(loss, tape.scale(node_mean, train_config.alpha));
      }

      const double loss_value = tape.value(loss).data[0];
      if (!std::isfinite(loss_value))
        throw std::runtime_error("pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch starting at " + std::to_string(start));
      tape.backward(loss);
      std::map<std::string, Matrix> grads;
      for (const auto& [name, var] : pv.vars) grads.emplace(name, tape.grad(var));
      optimizer.step(result.params, grads);

      const double batch_weight = static_cast<double>(stop - start);
      loss_total += loss_value * batch_weight;
      graph_total += tape.value(graph_term).data[0] * batch_weight;
      node_total += (node_mean.valid() ? tape.value(node_mean).data[0] : 0.0) * batch_weight;
    }
    result.trace.mean_loss.push_back(loss_total / static_cast<double>(n));
    result.trace.graph_loss.push_back(graph_total / static_cast<double>(n));
    result.trace.node_loss.push_back(node_total / static_cast<double>(n));
  }
  return result;
}

void write_loss_trace_csv(const LossTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_loss_trace_csv: cannot open " + path);
  out << "epoch,mean_loss,graph_loss,node_loss\n";
  out.precision(17);
  for (std::size_t e = 0; e < trace.mean_loss.size(); ++e)
    out << e << "," << trace.mean_loss[e] << "," << trace.graph_loss[e] << ","
        << trace.node_loss[e] << "\n";
}

}  // namespace genhop
