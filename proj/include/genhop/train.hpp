#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "genhop/augment.hpp"
#include "genhop/dataio.hpp"
#include "genhop/loss.hpp"
#include "genhop/model.hpp"

namespace genhop {

/// How the two views of a training pair are drawn (Fig-style split by
/// default; SA/FA draw both views from one family).
enum class ViewMode { kSplit, kStructural, kFeature };

ViewMode view_mode_from_string(const std::string& name);
std::string to_string(ViewMode mode);

struct TrainConfig {
  double tau = 0.1;
  double lambda_inv = 1.0;
  double lambda_var = 25.0;
  double lambda_cov = 25.0;
  double alpha = 0.005;
  double gamma = 1.0;
  double eps_std = 1e-4;
  double learning_rate = 1e-3;
  double weight_decay = 3e-4;
  int batch_size = 32;
  int epochs = 100;
  ViewMode view_mode = ViewMode::kSplit;
  AugmentSpec structural_view{AugmentStrategy::kEdgeDrop, 0.2, 0};
  AugmentSpec feature_view{AugmentStrategy::kFeatDropout, 0.2, 0};
  bool vicreg_standard_form = false;  // per-view variance/covariance instead
  bool use_vicreg = true;             // false: NT-Xent-only objective

  void validate() const;
  VicregWeights vicreg_weights() const;
};

/// Coupled L2 Adam: weight decay is added to the gradient before the
/// moment updates, i.e. an L2 penalty in the loss.
class AdamOptimizer {
 public:
  AdamOptimizer(double learning_rate, double weight_decay, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(ModelParams& params, const std::map<std::string, Matrix>& grads);

 private:
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::map<std::string, Matrix> m_, v_;
};

struct LossTrace {
  std::vector<double> mean_loss;   // per epoch
  std::vector<double> graph_loss;  // NT-Xent component
  std::vector<double> node_loss;   // VICReg component (unweighted by alpha)
};

struct PretrainResult {
  ModelParams params;
  LossTrace trace;
};

/// Graph-batch total objective: NT-Xent on the stacked graph embeddings
/// plus alpha times VICReg averaged over the per-graph node pairs. An
/// alpha of 0 (or use_vicreg=false) short-circuits the node term entirely.
ad::Var total_loss(ad::Tape& tape, ad::Var z_i, ad::Var z_j,
                   const std::vector<std::pair<ad::Var, ad::Var>>& node_pairs,
                   const TrainConfig& config);

/// Full self-supervised pre-training loop; deterministic per seed. Throws
/// on an empty dataset or non-finite loss.
PretrainResult pretrain(const Dataset& dataset, const TrainConfig& train_config,
                        const ModelConfig& model_config, std::uint64_t seed);

void write_loss_trace_csv(const LossTrace& trace, const std::string& path);

}  // namespace genhop
