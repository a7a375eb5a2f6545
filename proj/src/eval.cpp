#include "genhop/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <thread>

#include "genhop/centrality.hpp"
#include "genhop/rng.hpp"
#include "genhop/spectral.hpp"
#include "genhop/wl.hpp"

namespace genhop {

Matrix embed_dataset(const Dataset& dataset, ModelParams& params, const ModelConfig& config,
                     int threads) {
  const std::size_t n = dataset.graphs.size();
  Matrix out(n, config.graph_embedding_dim());
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      GraphEmbeddingOutput e = forward_embed(dataset.graphs[i], params, config, RunMode::kEval, 0);
      for (std::size_t c = 0; c < out.cols; ++c) out(i, c) = e.graph_embedding(0, c);
    }
  };
  if (threads <= 1 || n < 2) {
    worker(0, n);
  } else {
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(worker, w * chunk, std::min(n, (w + 1) * chunk));
    for (auto& t : pool) t.join();
  }
  return out;
}

namespace {

struct LogisticModel {
  Matrix w;  // d x classes
  Matrix b;  // 1 x classes
  std::vector<double> feat_mean, feat_scale;
};

Matrix standardize_rows(const Matrix& x, const LogisticModel& model) {
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      out(i, j) = (x(i, j) - model.feat_mean[j]) * model.feat_scale[j];
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (std::size_t i = 0; i < p.rows; ++i) {
    double mx = p(i, 0);
    for (std::size_t j = 1; j < p.cols; ++j) mx = std::max(mx, p(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < p.cols; ++j) {
      p(i, j) = std::exp(p(i, j) - mx);
      total += p(i, j);
    }
    for (std::size_t j = 0; j < p.cols; ++j) p(i, j) /= total;
  }
  return p;
}

LogisticModel fit_logistic(const Matrix& x_raw, const std::vector<int>& y, int classes,
                           double l2 = 1e-3, double grad_tol = 1e-6, int max_iters = 2000) {
  const std::size_t n = x_raw.rows;
  const std::size_t d = x_raw.cols;
  LogisticModel model;
  model.feat_mean.assign(d, 0.0);
  model.feat_scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x_raw(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x_raw(i, j) - mean) * (x_raw(i, j) - mean);
    var /= static_cast<double>(n);
    model.feat_mean[j] = mean;
    model.feat_scale[j] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
  Matrix x = standardize_rows(x_raw, model);
  model.w = Matrix(d, classes);
  model.b = Matrix(1, classes);

  auto loss_of = [&](const Matrix& w, const Matrix& b) {
    Matrix logits = matmul(x, w);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < classes; ++c) logits(i, c) += b(0, c);
    Matrix p = softmax_rows(logits);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss -= std::log(std::max(p(i, y[i]), 1e-300));
    loss /= static_cast<double>(n);
    for (double v : w.data) loss += l2 * v * v;
    return std::make_pair(loss, std::move(p));
  };

  auto [loss, probs] = loss_of(model.w, model.b);
  double step_size = 1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    // grads
    Matrix gw(d, classes), gb(1, classes);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < classes; ++c) {
        const double diff = (probs(i, c) - (y[i] == c ? 1.0 : 0.0)) / static_cast<double>(n);
        gb(0, c) += diff;
        for (std::size_t j = 0; j < d; ++j) gw(j, c) += x(i, j) * diff;
      }
    }
    for (std::size_t i = 0; i < gw.data.size(); ++i) gw.data[i] += 2.0 * l2 * model.w.data[i];
    double grad_max = 0.0;
    for (double v : gw.data) grad_max = std::max(grad_max, std::abs(v));
    for (double v : gb.data) grad_max = std::max(grad_max, std::abs(v));
    if (grad_max < grad_tol) break;

    // gradient descent with simple backtracking on the step size
    for (int attempt = 0; attempt < 60; ++attempt) {
      Matrix w_next = model.w;
      Matrix b_next = model.b;
      for (std::size_t i = 0; i < w_next.data.size(); ++i)
        w_next.data[i] -= step_size * gw.data[i];
      for (std::size_t i = 0; i < b_next.data.size(); ++i)
        b_next.data[i] -= step_size * gb.data[i];
      auto [loss_next, probs_next] = loss_of(w_next, b_next);
      if (loss_next <= loss) {
        model.w = std::move(w_next);
        model.b = std::move(b_next);
        loss = loss_next;
        probs = std::move(probs_next);
        step_size *= 1.1;  // recover after successful steps
        break;
      }
      step_size *= 0.5;
    }
  }
  return model;
}

int predict_one(const LogisticModel& model, const Matrix& x_std, std::size_t row) {
  int best = 0;
  double best_score = -1e300;
  for (std::size_t c = 0; c < model.w.cols; ++c) {
    double score = model.b(0, c);
    for (std::size_t j = 0; j < model.w.rows; ++j) score += x_std(row, j) * model.w(j, c);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

ProbeResult linear_probe(const Matrix& embeddings, const std::vector<int>& labels, int folds,
                         std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("linear_probe: folds must be >= 2");
  if (labels.size() != embeddings.rows)
    throw std::invalid_argument("linear_probe: label count mismatch");
  const int classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;

  // stratified fold assignment: shuffle within class, deal round-robin
  std::vector<std::vector<int>> fold_members(folds);
  {
    std::vector<std::vector<int>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    Rng rng(mix_seed(seed, 0x666f6c64));
    for (int c = 0; c < classes; ++c) {
      if (static_cast<int>(by_class[c].size()) < folds)
        throw std::invalid_argument("linear_probe: class " + std::to_string(c) +
                                    " has fewer members than folds");
      rng.shuffle(by_class[c]);
      for (std::size_t i = 0; i < by_class[c].size(); ++i)
        fold_members[i % folds].push_back(by_class[c][i]);
    }
    for (auto& fold : fold_members) std::sort(fold.begin(), fold.end());
  }

  ProbeResult result;
  result.confusion.assign(classes, std::vector<long long>(classes, 0));
  result.fold_test_indices = fold_members;
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train_rows;
    for (int other = 0; other < folds; ++other)
      if (other != f)
        train_rows.insert(train_rows.end(), fold_members[other].begin(),
                          fold_members[other].end());
    Matrix x_train(train_rows.size(), embeddings.cols);
    std::vector<int> y_train(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      y_train[i] = labels[train_rows[i]];
      for (std::size_t j = 0; j < embeddings.cols; ++j)
        x_train(i, j) = embeddings(train_rows[i], j);
    }
    LogisticModel model = fit_logistic(x_train, y_train, classes);

    Matrix x_test(fold_members[f].size(), embeddings.cols);
    for (std::size_t i = 0; i < fold_members[f].size(); ++i)
      for (std::size_t j = 0; j < embeddings.cols; ++j)
        x_test(i, j) = embeddings(fold_members[f][i], j);
    Matrix x_test_std = standardize_rows(x_test, model);
    int correct = 0;
    for (std::size_t i = 0; i < fold_members[f].size(); ++i) {
      const int truth = labels[fold_members[f][i]];
      const int guess = predict_one(model, x_test_std, i);
      result.confusion[truth][guess] += 1;
      if (guess == truth) ++correct;
    }
    result.fold_accuracies.push_back(static_cast<double>(correct) /
                                     static_cast<double>(fold_members[f].size()));
  }
  for (double a : result.fold_accuracies) result.mean += a;
  result.mean /= static_cast<double>(folds);
  double ss = 0.0;
  for (double a : result.fold_accuracies) ss += (a - result.mean) * (a - result.mean);
  result.stddev = folds > 1 ? std::sqrt(ss / static_cast<double>(folds - 1)) : 0.0;
  return result;
}

namespace {

std::vector<std::vector<std::int64_t>> sorted_profile_rows(const IntMatrix& values) {
  std::vector<std::vector<std::int64_t>> rows(values.rows);
  for (std::size_t v = 0; v < values.rows; ++v) {
    rows[v].resize(values.cols);
    for (std::size_t c = 0; c < values.cols; ++c) rows[v][c] = values(v, c);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

bool multisets_differ(std::vector<double> a, std::vector<double> b, double tol) {
  if (a.size() != b.size()) return true;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return true;
  return false;
}

}  // namespace

DistinguishReport distinguish_report(const Graph& g1, const Graph& g2, const ModelConfig& config,
                                     std::uint64_t seed) {
  DistinguishReport report;
  report.wl_different = wl_distinguish(g1, g2);

  const int K = std::max(2, config.hops);
  report.closed_walk_different = sorted_profile_rows(closed_walk_profile(g1, K).values) !=
                                 sorted_profile_rows(closed_walk_profile(g2, K).values);

  if (g1.node_count() <= 20 && g2.node_count() <= 20) {
    const int kc = std::min(K, 8);
    report.cycle_different = sorted_profile_rows(cycle_profile(g1, kc).values) !=
                             sorted_profile_rows(cycle_profile(g2, kc).values);
  }

  EdgeCentralityTable t1 = edge_feature_table(g1);
  EdgeCentralityTable t2 = edge_feature_table(g2);
  report.eb_different = multisets_differ(t1.eb, t2.eb, 1e-9);
  report.ec_different = multisets_differ(t1.ec, t2.ec, 1e-9);
  report.ecc_different = multisets_differ(t1.ecc, t2.ecc, 1e-9);

  report.pe_spectrum_different =
      multisets_differ(laplacian_spectrum(g1), laplacian_spectrum(g2), 1e-6);

  {
    ModelParams params = init_params(config, seed);
    GraphEmbeddingOutput e1 = forward_embed(g1, params, config, RunMode::kEval, 0);
    GraphEmbeddingOutput e2 = forward_embed(g2, params, config, RunMode::kEval, 0);
    double d2 = 0.0;
    for (std::size_t i = 0; i < e1.graph_embedding.data.size(); ++i) {
      const double diff = e1.graph_embedding.data[i] - e2.graph_embedding.data[i];
      d2 += diff * diff;
    }
    report.embedding_distance = std::sqrt(d2);
  }

  if (report.wl_different)
    report.first_separator = "1-wl";
  else if (report.closed_walk_different)
    report.first_separator = "closed-walks";
  else if (report.cycle_different.value_or(false))
    report.first_separator = "cycle-profile";
  else if (report.eb_different)
    report.first_separator = "edge-betweenness";
  else if (report.ec_different)
    report.first_separator = "edge-closeness";
  else if (report.ecc_different)
    report.first_separator = "edge-clustering";
  else if (report.pe_spectrum_different)
    report.first_separator = "pe-spectrum";
  else if (report.embedding_distance > 1e-6)
    report.first_separator = "embedding";
  else
    report.first_separator = "none";
  return report;
}

std::string DistinguishReport::to_text() const {
  auto verdict = [](bool different) { return different ? "different" : "same"; };
  std::ostringstream os;
  os << "1-WL stable histograms: " << verdict(wl_different) << "\n";
  os << "closed-walk profile multisets: " << verdict(closed_walk_different) << "\n";
  os << "cycle profile multisets: "
     << (cycle_different ? verdict(*cycle_different) : "skipped (graphs too large)") << "\n";
  os << "edge betweenness multisets: " << verdict(eb_different) << "\n";
  os << "edge closeness multisets: " << verdict(ec_different) << "\n";
  os << "edge clustering multisets: " << verdict(ecc_different) << "\n";
  os << "Laplacian spectra: " << verdict(pe_spectrum_different) << "\n";
  os << "untrained embedding distance: " << embedding_distance << "\n";
  os << "first separating invariant: " << first_separator << "\n";
  return os.str();
}

Dataset make_copies_dataset(const std::vector<Graph>& class_reps, int copies,
                            const AugmentSpec& perturb, std::uint64_t seed,
                            const std::string& name) {
  Dataset d;
  d.name = name;
  d.class_count = static_cast<int>(class_reps.size());
  for (std::size_t cls = 0; cls < class_reps.size(); ++cls) {
    for (int copy = 0; copy < copies; ++copy) {
      d.graphs.push_back(
          augment(class_reps[cls], perturb, mix_seed(seed, 0x64757073, cls, copy)));
      d.labels.push_back(static_cast<int>(cls));
    }
  }
  d.feature_dim = d.graphs.empty() ? 0 : static_cast<int>(d.graphs[0].node_features().cols);
  return d;
}

Dataset make_csl_dataset(int m, int max_skip, int copies, const AugmentSpec& perturb,
                         std::uint64_t seed) {
  std::vector<Graph> reps;
  for (int r : enumerate_csl_classes(m, max_skip)) reps.push_back(generate_csl(m, r));
  return make_copies_dataset(reps, copies, perturb, seed,
                             "csl-" + std::to_string(m) + "-" + std::to_string(max_skip));
}

namespace {

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.value("layers", c.layers);
  c.hops = j.value("hops", c.hops);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.pe_dim = j.value("pe_dim", c.pe_dim);
  c.mlp_depth = j.value("mlp_depth", c.mlp_depth);
  c.node_feature_dim = j.value("node_feature_dim", c.node_feature_dim);
  c.edge_attr_dim = j.value("edge_attr_dim", c.edge_attr_dim);
  c.use_structural = j.value("use_structural", c.use_structural);
  c.use_local_pat = j.value("use_local_pat", c.use_local_pat);
  c.use_closed_walks = j.value("use_closed_walks", c.use_closed_walks);
  c.use_high_order = j.value("use_high_order", c.use_high_order);
  c.use_positional = j.value("use_positional", c.use_positional);
  c.use_edge_centrality = j.value("use_edge_centrality", c.use_edge_centrality);
  c.use_raw_edge_features = j.value("use_raw_edge_features", c.use_raw_edge_features);
  c.log_scale_closed_walks = j.value("log_scale_closed_walks", c.log_scale_closed_walks);
  c.use_batch_norm = j.value("use_batch_norm", c.use_batch_norm);
  if (j.contains("khop_denominator"))
    c.khop_denominator = j["khop_denominator"].get<std::string>() == "one_hop"
                             ? KHopDenominator::kOneHopNeighborhood
                             : KHopDenominator::kHopNeighborhood;
  return c;
}

AugmentSpec augment_spec_from_json(const nlohmann::json& j) {
  AugmentSpec spec;
  spec.strategy = augment_strategy_from_string(j.value("strategy", "Identity"));
  spec.ratio = j.value("ratio", spec.ratio);
  spec.walk_length = j.value("walk_length", spec.walk_length);
  return spec;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.tau = j.value("tau", c.tau);
  c.lambda_inv = j.value("lambda_inv", c.lambda_inv);
  c.lambda_var = j.value("lambda_var", c.lambda_var);
  c.lambda_cov = j.value("lambda_cov", c.lambda_cov);
  c.alpha = j.value("alpha", c.alpha);
  c.gamma = j.value("gamma", c.gamma);
  c.eps_std = j.value("eps_std", c.eps_std);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  if (j.contains("view_mode")) c.view_mode = view_mode_from_string(j["view_mode"]);
  if (j.contains("structural_view")) c.structural_view = augment_spec_from_json(j["structural_view"]);
  if (j.contains("feature_view")) c.feature_view = augment_spec_from_json(j["feature_view"]);
  c.vicreg_standard_form = j.value("vicreg_standard_form", c.vicreg_standard_form);
  c.use_vicreg = j.value("use_vicreg", c.use_vicreg);
  return c;
}

void apply_variant(const std::string& variant, ModelConfig& model, TrainConfig& train) {
  if (variant == "full" || variant.empty()) return;
  if (variant == "pos_only") {
    model.use_structural = false;
    return;
  }
  if (variant == "cw_only") {
    model.use_positional = false;
    model.use_local_pat = false;
    model.use_high_order = false;
    model.use_edge_centrality = false;
    return;
  }
  if (variant == "struct_only") {
    model.use_positional = false;
    return;
  }
  if (variant == "no_vicreg") {
    train.use_vicreg = false;
    return;
  }
  if (variant == "inv_only") {
    train.lambda_var = 0.0;
    train.lambda_cov = 0.0;
    return;
  }
  if (variant == "var_only") {
    train.lambda_inv = 0.0;
    train.lambda_cov = 0.0;
    return;
  }
  if (variant == "cov_only") {
    train.lambda_inv = 0.0;
    train.lambda_var = 0.0;
    return;
  }
  throw std::invalid_argument("run_experiment: unknown variant " + variant);
}

Dataset dataset_from_spec(const nlohmann::json& j, std::uint64_t seed) {
  const std::string source = j.at("source").get<std::string>();
  if (source == "json") return load_dataset_json(j.at("path").get<std::string>());
  if (source == "csl") {
    AugmentSpec perturb{AugmentStrategy::kEdgeDrop, 0.05, 0};
    if (j.contains("perturb")) perturb = augment_spec_from_json(j["perturb"]);
    return make_csl_dataset(j.value("m", 41), j.value("max_skip", 20), j.value("copies", 10),
                            perturb, mix_seed(seed, 0x63736c));
  }
  if (source == "g6") {
    std::vector<Graph> graphs = read_graph6_file(j.at("path").get<std::string>());
    const int copies = j.value("copies", 1);
    AugmentSpec perturb{AugmentStrategy::kIdentity, 0.0, 0};
    if (j.contains("perturb")) perturb = augment_spec_from_json(j["perturb"]);
    if (copies > 1 || perturb.strategy != AugmentStrategy::kIdentity)
      return make_copies_dataset(graphs, copies, perturb, mix_seed(seed, 0x673670),
                                 j.value("name", "g6"));
    Dataset d;
    d.name = j.value("name", "g6");
    d.class_count = static_cast<int>(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      d.graphs.push_back(graphs[i]);
      d.labels.push_back(static_cast<int>(i));
    }
    return d;
  }
  throw std::invalid_argument("run_experiment: unknown dataset source " + source);
}

}  // namespace

std::string probe_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "run_id,dataset,variant,seed,fold,accuracy,mean,std\n";
  for (std::size_t f = 0; f < result.probe.fold_accuracies.size(); ++f)
    os << result.run_id << "," << result.dataset_name << "," << result.variant << ","
       << result.seed << "," << f << "," << result.probe.fold_accuracies[f] << ","
       << result.probe.mean << "," << result.probe.stddev << "\n";
  return os.str();
}

ExperimentResult run_experiment(const std::string& spec_path) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("run_experiment: cannot open " + spec_path);
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("run_experiment: bad spec " + spec_path + ": " + e.what());
  }

  ExperimentResult result;
  result.run_id = spec.value("run_id", "run");
  result.seed = spec.value("seed", 0);
  result.variant = spec.value("variant", "full");

  Dataset dataset = dataset_from_spec(spec.at("dataset"), result.seed);
  result.dataset_name = dataset.name;

  ModelConfig model_config =
      spec.contains("model") ? model_config_from_json(spec["model"]) : ModelConfig{};
  TrainConfig train_config =
      spec.contains("train") ? train_config_from_json(spec["train"]) : TrainConfig{};
  apply_variant(result.variant, model_config, train_config);
  model_config.node_feature_dim = dataset.feature_dim > 0 ? dataset.feature_dim : 1;

  PretrainResult pretrained = pretrain(dataset, train_config, model_config, result.seed);
  result.trace = pretrained.trace;

  const int threads = spec.value("threads", 1);
  Matrix embeddings = embed_dataset(dataset, pretrained.params, model_config, threads);
  result.probe = linear_probe(embeddings, dataset.labels, spec.value("folds", 10), result.seed);

  if (spec.contains("output_csv")) {
    std::ofstream out(spec["output_csv"].get<std::string>());
    if (!out) throw std::runtime_error("run_experiment: cannot write metrics CSV");
    out << probe_csv(result);
  }
  if (spec.contains("checkpoint"))
    save_checkpoint(pretrained.params, model_config, spec["checkpoint"].get<std::string>());
  if (spec.contains("loss_csv")) write_loss_trace_csv(result.trace, spec["loss_csv"]);
  return result;
}

}  // namespace genhop
