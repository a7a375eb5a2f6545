#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genhop/dataio.hpp"
#include "genhop/model.hpp"
#include "genhop/train.hpp"

namespace genhop {

struct ProbeResult {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds
  std::vector<std::vector<long long>> confusion;  // pooled over test folds
  std::vector<std::vector<int>> fold_test_indices;
};

/// Eval-mode embeddings, one row per graph, dataset order. threads > 1
/// featurizes and embeds graphs in parallel.
Matrix embed_dataset(const Dataset& dataset, ModelParams& params, const ModelConfig& config,
                     int threads = 1);

/// Stratified k-fold multinomial logistic probe (L2 1e-3, full-batch
/// gradient descent to gradient tolerance 1e-6 or 2000 iterations).
ProbeResult linear_probe(const Matrix& embeddings, const std::vector<int>& labels, int folds,
                         std::uint64_t seed);

/// Per-invariant comparison of a graph pair.
struct DistinguishReport {
  bool wl_different = false;
  bool closed_walk_different = false;         // profile multisets, k <= hops
  std::optional<bool> cycle_different;        // desk-scale graphs only
  bool eb_different = false;
  bool ec_different = false;
  bool ecc_different = false;
  bool pe_spectrum_different = false;
  double embedding_distance = 0.0;            // untrained model, eval mode
  std::string first_separator;                // "none" if nothing separates

  std::string to_text() const;
};

DistinguishReport distinguish_report(const Graph& g1, const Graph& g2, const ModelConfig& config,
                                     std::uint64_t seed = 0);

/// CSL dataset of `copies` perturbed copies per isomorphism class.
Dataset make_csl_dataset(int m, int max_skip, int copies, const AugmentSpec& perturb,
                         std::uint64_t seed);
/// Same construction from explicit class representatives.
Dataset make_copies_dataset(const std::vector<Graph>& class_reps, int copies,
                            const AugmentSpec& perturb, std::uint64_t seed,
                            const std::string& name);

struct ExperimentResult {
  std::string run_id;
  std::string dataset_name;
  std::string variant;
  std::uint64_t seed = 0;
  ProbeResult probe;
  LossTrace trace;
};

/// Pretrain -> embed -> probe from a JSON spec file; writes the metrics CSV
/// (columns: run_id, dataset, variant, seed, fold, accuracy, mean, std) and
/// a checkpoint, plus an optional loss trace CSV.
ExperimentResult run_experiment(const std::string& spec_path);

std::string probe_csv(const ExperimentResult& result);

}  // namespace genhop
