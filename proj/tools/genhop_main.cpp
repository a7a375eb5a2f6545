// Command-line surface for the graph representation-learning engine:
// dataset generation, featurization, WL testing, pre-training, embedding,
// probing, and the pair-distinguishing report.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <json.hpp>

#include "genhop/centrality.hpp"
#include "genhop/dataio.hpp"
#include "genhop/eval.hpp"
#include "genhop/model.hpp"
#include "genhop/spectral.hpp"
#include "genhop/train.hpp"
#include "genhop/wl.hpp"

using namespace genhop;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string config_path;
};

ModelConfig load_model_config(const GlobalOptions& opts) {
  ModelConfig config;
  if (opts.config_path.empty()) return config;
  std::ifstream in(opts.config_path);
  if (!in) throw std::runtime_error("cannot open config " + opts.config_path);
  nlohmann::json j;
  in >> j;
  const nlohmann::json& m = j.contains("model") ? j["model"] : j;
  config.layers = m.value("layers", config.layers);
  config.hops = m.value("hops", config.hops);
  config.hidden_dim = m.value("hidden_dim", config.hidden_dim);
  config.pe_dim = m.value("pe_dim", config.pe_dim);
  config.mlp_depth = m.value("mlp_depth", config.mlp_depth);
  config.use_structural = m.value("use_structural", config.use_structural);
  config.use_local_pat = m.value("use_local_pat", config.use_local_pat);
  config.use_closed_walks = m.value("use_closed_walks", config.use_closed_walks);
  config.use_high_order = m.value("use_high_order", config.use_high_order);
  config.use_positional = m.value("use_positional", config.use_positional);
  config.use_edge_centrality = m.value("use_edge_centrality", config.use_edge_centrality);
  config.use_raw_edge_features = m.value("use_raw_edge_features", config.use_raw_edge_features);
  config.log_scale_closed_walks = m.value("log_scale_closed_walks", config.log_scale_closed_walks);
  config.use_batch_norm = m.value("use_batch_norm", config.use_batch_norm);
  return config;
}

std::vector<Graph> load_graphs_any(const std::string& path) {
  if (path.size() >= 3 && path.substr(path.size() - 3) == ".g6") return read_graph6_file(path);
  Dataset d = load_dataset_json(path);
  return d.graphs;
}

std::pair<Graph, Graph> load_pair(const std::string& fixture, const std::string& path) {
  if (!fixture.empty()) return builtin_fixture(fixture);
  std::vector<Graph> graphs = load_graphs_any(path);
  if (graphs.size() < 2) throw std::runtime_error("need at least two graphs in " + path);
  return {graphs[0], graphs[1]};
}

nlohmann::json features_to_json(const Graph& g, const GraphFeatures& f, const ModelConfig& c) {
  nlohmann::json gj;
  gj["n"] = g.node_count();
  gj["e"] = g.edge_count();
  if (c.use_closed_walks || c.use_high_order) {
    gj["closed_walks"] = nlohmann::json::array();
    for (int v = 0; v < g.node_count(); ++v) gj["closed_walks"].push_back(f.walks.row(v));
  }
  if (c.use_edge_centrality) {
    EdgeCentralityTable t = edge_feature_table(g);
    gj["edge_betweenness"] = t.eb;
    gj["edge_closeness"] = t.ec;
    gj["edge_clustering"] = t.ecc;
  }
  if (c.use_positional) {
    gj["pe_used_dims"] = f.pe.used_dims;
    gj["pe"] = nlohmann::json::array();
    for (int v = 0; v < g.node_count(); ++v) {
      nlohmann::json row = nlohmann::json::array();
      for (int p = 0; p < f.pe.requested_dim; ++p) row.push_back(f.pe.pe(v, p));
      gj["pe"].push_back(row);
    }
  }
  return gj;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GenHopNet graph representation learning engine"};
  app.require_subcommand(1);
  GlobalOptions opts;
  app.add_option("--seed", opts.seed, "root RNG seed");
  app.add_option("--threads", opts.threads, "worker threads for featurization/embedding");
  app.add_option("--config", opts.config_path, "JSON file with model config defaults");

  // gen-csl
  auto* gen = app.add_subcommand("gen-csl", "generate circular skip link graphs");
  int gen_m = 41, gen_skip = 2, gen_max_skip = 20;
  bool gen_enumerate = false;
  std::string gen_out;
  gen->add_option("--m", gen_m, "node count");
  gen->add_option("--skip", gen_skip, "skip length R");
  gen->add_flag("--enumerate", gen_enumerate, "list isomorphism-class representative skips");
  gen->add_option("--max-skip", gen_max_skip, "largest skip for --enumerate");
  gen->add_option("--out", gen_out, "write graph6 to file instead of stdout");

  // parse-g6
  auto* pg6 = app.add_subcommand("parse-g6", "parse graph6 input and summarize");
  std::string pg6_in, pg6_line, pg6_json;
  pg6->add_option("--in", pg6_in, "graph6 file");
  pg6->add_option("--line", pg6_line, "a single graph6 line");
  pg6->add_option("--to-json", pg6_json, "write the parsed graphs as a dataset JSON");

  // featurize
  auto* feat = app.add_subcommand("featurize", "compute structural tables and PE");
  std::string feat_in, feat_out;
  int feat_hops = 3, feat_pe = 6;
  feat->add_option("--in", feat_in, "dataset (.json) or graph6 (.g6) file")->required();
  feat->add_option("--out", feat_out, "output JSON path")->required();
  feat->add_option("--hops", feat_hops, "maximum hop K");
  feat->add_option("--pe-dim", feat_pe, "positional encoding dimension");

  // wl-test
  auto* wl = app.add_subcommand("wl-test", "1-WL distinguishability of a graph pair");
  std::string wl_fixture, wl_in;
  wl->add_option("--fixture", wl_fixture, "builtin fixture name");
  wl->add_option("--in", wl_in, "file with at least two graphs");

  // distinguish
  auto* dis = app.add_subcommand("distinguish", "per-invariant report for a graph pair");
  std::string dis_fixture, dis_in;
  int dis_hops = 6;
  dis->add_option("--fixture", dis_fixture, "builtin fixture name");
  dis->add_option("--in", dis_in, "file with at least two graphs");
  dis->add_option("--hops", dis_hops, "maximum hop K for walk profiles");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "self-supervised pre-training");
  std::string pre_data, pre_ckpt, pre_loss, pre_spec;
  pre->add_option("--data", pre_data, "dataset JSON")->required();
  pre->add_option("--out", pre_ckpt, "checkpoint path")->required();
  pre->add_option("--loss-csv", pre_loss, "loss trace CSV path");
  pre->add_option("--train-config", pre_spec, "JSON with train config fields");

  // embed
  auto* emb = app.add_subcommand("embed", "embed a dataset with a checkpoint");
  std::string emb_data, emb_ckpt, emb_out;
  emb->add_option("--data", emb_data, "dataset JSON")->required();
  emb->add_option("--checkpoint", emb_ckpt, "checkpoint path")->required();
  emb->add_option("--out", emb_out, "embeddings CSV path")->required();

  // probe
  auto* prb = app.add_subcommand("probe", "k-fold linear probe on embeddings");
  std::string prb_emb, prb_data, prb_out;
  int prb_folds = 10;
  prb->add_option("--embeddings", prb_emb, "embeddings CSV from `embed`")->required();
  prb->add_option("--data", prb_data, "dataset JSON (labels)")->required();
  prb->add_option("--folds", prb_folds, "fold count");
  prb->add_option("--out", prb_out, "probe result CSV path");

  // run
  auto* run = app.add_subcommand("run", "full experiment from a spec file");
  std::string run_spec;
  run->add_option("--spec", run_spec, "experiment spec JSON")->required();

  // profile-search
  auto* prof = app.add_subcommand("profile-search",
                                  "cycle vs closed-walk profile relation over a corpus");
  std::string prof_in, prof_out;
  int prof_max_nodes = 6, prof_hops = 6;
  prof->add_option("--in", prof_in, "dataset or graph6 corpus (default: all graphs up to --max-nodes)");
  prof->add_option("--max-nodes", prof_max_nodes, "enumerate all graphs up to this size");
  prof->add_option("--hops", prof_hops, "K for both profiles");
  prof->add_option("--out", prof_out, "write the report CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (gen_enumerate) {
        for (int r : enumerate_csl_classes(gen_m, gen_max_skip)) std::cout << r << "\n";
        return 0;
      }
      const std::string line = write_graph6(generate_csl(gen_m, gen_skip));
      if (gen_out.empty()) {
        std::cout << line << "\n";
      } else {
        std::ofstream out(gen_out);
        out << line << "\n";
      }
      return 0;
    }

    if (*pg6) {
      std::vector<Graph> graphs;
      if (!pg6_line.empty()) graphs.push_back(parse_graph6(pg6_line));
      if (!pg6_in.empty()) {
        auto more = read_graph6_file(pg6_in);
        graphs.insert(graphs.end(), more.begin(), more.end());
      }
      if (graphs.empty()) throw std::runtime_error("parse-g6: provide --in or --line");
      for (std::size_t i = 0; i < graphs.size(); ++i) {
        const Graph& g = graphs[i];
        std::cout << "graph " << i << ": n=" << g.node_count() << " e=" << g.edge_count();
        int min_deg = g.node_count() ? g.degree(0) : 0, max_deg = min_deg;
        for (int v = 0; v < g.node_count(); ++v) {
          min_deg = std::min(min_deg, g.degree(v));
          max_deg = std::max(max_deg, g.degree(v));
        }
        std::cout << " degree=[" << min_deg << "," << max_deg << "]\n";
      }
      if (!pg6_json.empty()) {
        Dataset d;
        d.name = "parsed-g6";
        d.class_count = 1;
        for (auto& g : graphs) {
          d.graphs.push_back(g);
          d.labels.push_back(0);
        }
        save_dataset_json(d, pg6_json);
      }
      return 0;
    }

    if (*feat) {
      ModelConfig config = load_model_config(opts);
      config.hops = feat_hops;
      config.pe_dim = feat_pe;
      std::vector<Graph> graphs = load_graphs_any(feat_in);
      std::vector<nlohmann::json> rows(graphs.size());
      auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
          rows[i] = features_to_json(graphs[i], featurize(graphs[i], config), config);
      };
      if (opts.threads <= 1 || graphs.size() < 2) {
        worker(0, graphs.size());
      } else {
        std::vector<std::thread> pool;
        const std::size_t workers = std::min<std::size_t>(opts.threads, graphs.size());
        const std::size_t chunk = (graphs.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w)
          pool.emplace_back(worker, w * chunk, std::min(graphs.size(), (w + 1) * chunk));
        for (auto& t : pool) t.join();
      }
      nlohmann::json out;
      out["hops"] = feat_hops;
      out["pe_dim"] = feat_pe;
      out["graphs"] = rows;
      std::ofstream os(feat_out);
      if (!os) throw std::runtime_error("cannot write " + feat_out);
      os << out.dump(1) << "\n";
      std::cout << "featurized " << graphs.size() << " graphs -> " << feat_out << "\n";
      return 0;
    }

    if (*wl) {
      auto [a, b] = load_pair(wl_fixture, wl_in);
      WLColoring ca = wl_refine(a);
      WLColoring cb = wl_refine(b);
      const bool different = wl_distinguish(a, b);
      std::cout << "graph 1: " << ca.histogram.size() << " stable classes (stable after round "
                << ca.rounds_to_stable << ")\n";
      std::cout << "graph 2: " << cb.histogram.size() << " stable classes (stable after round "
                << cb.rounds_to_stable << ")\n";
      std::cout << "1-WL verdict: " << (different ? "distinguishable" : "indistinguishable")
                << "\n";
      return 0;
    }

    if (*dis) {
      auto [a, b] = load_pair(dis_fixture, dis_in);
      ModelConfig config = load_model_config(opts);
      config.hops = dis_hops;
      std::cout << distinguish_report(a, b, config, opts.seed).to_text();
      return 0;
    }

    if (*pre) {
      Dataset data = load_dataset_json(pre_data);
      ModelConfig model_config = load_model_config(opts);
      model_config.node_feature_dim = data.feature_dim > 0 ? data.feature_dim : 1;
      TrainConfig train_config;
      if (!pre_spec.empty()) {
        std::ifstream in(pre_spec);
        if (!in) throw std::runtime_error("cannot open " + pre_spec);
        nlohmann::json j;
        in >> j;
        train_config.tau = j.value("tau", train_config.tau);
        train_config.alpha = j.value("alpha", train_config.alpha);
        train_config.lambda_inv = j.value("lambda_inv", train_config.lambda_inv);
        train_config.lambda_var = j.value("lambda_var", train_config.lambda_var);
        train_config.lambda_cov = j.value("lambda_cov", train_config.lambda_cov);
        train_config.learning_rate = j.value("learning_rate", train_config.learning_rate);
        train_config.weight_decay = j.value("weight_decay", train_config.weight_decay);
        train_config.batch_size = j.value("batch_size", train_config.batch_size);
        train_config.epochs = j.value("epochs", train_config.epochs);
        if (j.contains("view_mode"))
          train_config.view_mode = view_mode_from_string(j["view_mode"]);
      }
      PretrainResult result = pretrain(data, train_config, model_config, opts.seed);
      save_checkpoint(result.params, model_config, pre_ckpt);
      if (!pre_loss.empty()) write_loss_trace_csv(result.trace, pre_loss);
      std::cout << "pretrained " << train_config.epochs << " epochs; final mean loss "
                << (result.trace.mean_loss.empty() ? 0.0 : result.trace.mean_loss.back())
                << "; checkpoint -> " << pre_ckpt << "\n";
      return 0;
    }

    if (*emb) {
      Dataset data = load_dataset_json(emb_data);
      auto [params, config] = load_checkpoint(emb_ckpt);
      Matrix embeddings = embed_dataset(data, params, config, opts.threads);
      std::ofstream out(emb_out);
      if (!out) throw std::runtime_error("cannot write " + emb_out);
      out.precision(17);
      out << "index,label";
      for (std::size_t c = 0; c < embeddings.cols; ++c) out << ",z" << c;
      out << "\n";
      for (std::size_t i = 0; i < embeddings.rows; ++i) {
        out << i << "," << data.labels[i];
        for (std::size_t c = 0; c < embeddings.cols; ++c) out << "," << embeddings(i, c);
        out << "\n";
      }
      std::cout << "embedded " << embeddings.rows << " graphs -> " << emb_out << "\n";
      return 0;
    }

    if (*prb) {
      Dataset data = load_dataset_json(prb_data);
      std::ifstream in(prb_emb);
      if (!in) throw std::runtime_error("cannot open " + prb_emb);
      std::string header;
      std::getline(in, header);
      std::vector<std::vector<double>> rows;
      for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
      }
      if (rows.empty()) throw std::runtime_error("probe: empty embeddings file");
      Matrix embeddings(rows.size(), rows[0].size() - 2);
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c + 2 < rows[i].size(); ++c) embeddings(i, c) = rows[i][c + 2];
      ProbeResult result = linear_probe(embeddings, data.labels, prb_folds, opts.seed);
      std::cout << "probe mean accuracy " << result.mean << " +- " << result.stddev << " over "
                << prb_folds << " folds\n";
      if (!prb_out.empty()) {
        std::ofstream out(prb_out);
        out << "fold,accuracy,mean,std\n";
        out.precision(17);
        for (std::size_t f = 0; f < result.fold_accuracies.size(); ++f)
          out << f << "," << result.fold_accuracies[f] << "," << result.mean << ","
              << result.stddev << "\n";
      }
      return 0;
    }

    if (*run) {
      ExperimentResult result = run_experiment(run_spec);
      std::cout << probe_csv(result);
      return 0;
    }

    if (*prof) {
      std::vector<Graph> corpus;
      if (!prof_in.empty()) {
        corpus = load_graphs_any(prof_in);
      } else {
        // all non-isomorphic graphs with up to --max-nodes nodes
        for (int m = 1; m <= prof_max_nodes; ++m) {
          std::vector<std::pair<int, int>> slots;
          for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) slots.emplace_back(i, j);
          std::vector<int> perm(m);
          for (int i = 0; i < m; ++i) perm[i] = i;
          std::vector<std::vector<int>> perms;
          do {
            perms.push_back(perm);
          } while (std::next_permutation(perm.begin(), perm.end()));
          auto slot_index = [&](int a, int b) {
            if (a > b) std::swap(a, b);
            int idx = 0;
            for (int i = 0; i < a; ++i) idx += m - 1 - i;
            return idx + (b - a - 1);
          };
          const std::uint64_t total = 1ULL << slots.size();
          std::vector<bool> seen(total, false);
          for (std::uint64_t mask = 0; mask < total; ++mask) {
            if (seen[mask]) continue;
            for (const auto& p : perms) {
              std::uint64_t relabeled = 0;
              for (std::size_t bit = 0; bit < slots.size(); ++bit)
                if (mask & (1ULL << bit))
                  relabeled |= 1ULL << slot_index(p[slots[bit].first], p[slots[bit].second]);
              seen[relabeled] = true;
            }
            std::vector<std::pair<int, int>> edges;
            for (std::size_t bit = 0; bit < slots.size(); ++bit)
              if (mask & (1ULL << bit)) edges.push_back(slots[bit]);
            corpus.push_back(Graph::from_edge_list(m, edges));
          }
        }
      }
      ProfileRelationReport report = profile_relation_search(corpus, prof_hops);
      std::cout << report.to_text();
      if (!prof_out.empty()) {
        std::ofstream out(prof_out);
        out << report.to_csv();
        std::cout << "report CSV -> " << prof_out << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
