// bench: sliding-window workload driver and dataset utilities.
//
//   bench run       run a sliding-window experiment, emit per-round metrics
//   bench gen-synth write a clustered synthetic dataset (and queries)
//   bench gen-truth write exact kNN ground truth for a query file
//   bench plot      merge metrics CSVs into one long-format plot table

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cleann/dataset_io.hpp"
#include "cleann/harness.hpp"
#include "cleann/oracle.hpp"
#include "cleann/synth.hpp"

using namespace cleann;

namespace {

std::vector<std::uint32_t> parse_depths(const std::string& text) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dash = tok.find('-');
    if (dash != std::string::npos) {
      const auto lo = std::stoul(tok.substr(0, dash));
      const auto hi = std::stoul(tok.substr(dash + 1));
      for (auto d = lo; d <= hi; ++d) out.push_back(static_cast<std::uint32_t>(d));
    } else {
      out.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty --bridge-depths list");
  return out;
}

int env_threads(int fallback) {
  if (const char* env = std::getenv("BENCH_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
    std::cerr << "warning: ignoring BENCH_THREADS=" << env << '\n';
  }
  return fallback;
}

struct RunArgs {
  std::string engine = "cleann";
  std::string protocol = "batched-update";
  std::string data, queries, out, jsonl;
  std::string metric = "l2";
  std::size_t window = 5000;
  double batch_fraction = 0.01;
  std::size_t rounds = 50;
  std::size_t k = 10;
  int threads = 1;
  std::uint64_t seed = 42;
  std::uint32_t R = 64, L = 75, L_insert = 64, C = 7;
  float alpha = 1.2f;
  double capacity_factor = 1.2;
  std::string reuse = "fresh-first";
  std::string bridge = "on";
  std::string bridge_depths = "auto";
  std::string bridge_predicate = "same-depth";
  std::size_t bridge_cap = 256;
  std::string training = "in-dist";
  double train_fraction = 0.02;
  std::size_t train_count = 0;
  int initial_passes = 2;
  std::string truth_cache;
  bool audit = false;
};

int do_run(const RunArgs& a) {
  WorkloadConfig cfg;
  cfg.engine = parse_engine(a.engine);
  cfg.protocol = parse_protocol(a.protocol);
  cfg.window_size = a.window;
  cfg.batch_fraction = a.batch_fraction;
  cfg.rounds = a.rounds;
  cfg.k = a.k;
  cfg.threads = env_threads(a.threads);
  cfg.seed = a.seed;
  cfg.training = parse_training(a.training);
  cfg.train_fraction = a.train_fraction;
  if (a.train_count > 0) cfg.train_count = a.train_count;
  cfg.capacity_factor = a.capacity_factor;
  cfg.initial_passes = a.initial_passes;
  cfg.truth_cache_dir = a.truth_cache;
  cfg.record_history = a.audit;
  cfg.check_invariants = a.audit;

  auto& p = cfg.index;
  p.metric = parse_metric(a.metric);
  p.max_degree = a.R;
  p.search_width = a.L;
  p.insert_width = a.L_insert;
  p.alpha = a.alpha;
  p.eagerness = a.C;
  if (a.reuse == "fresh-first") {
    p.reuse = ReusePolicy::FreshFirst;
  } else if (a.reuse == "reused-first") {
    p.reuse = ReusePolicy::ReusedFirst;
  } else {
    throw std::invalid_argument("--reuse must be fresh-first or reused-first");
  }
  p.bridge.enabled = a.bridge == "on";
  if (a.bridge != "on" && a.bridge != "off") throw std::invalid_argument("--bridge must be on or off");
  if (a.bridge_depths != "auto") {
    p.bridge.auto_depths = false;
    p.bridge.depths = parse_depths(a.bridge_depths);
  }
  if (a.bridge_predicate == "same-depth") {
    p.bridge.predicate = BridgePredicate::SameDepth;
  } else if (a.bridge_predicate == "all") {
    p.bridge.predicate = BridgePredicate::AlwaysTrue;
  } else {
    throw std::invalid_argument("--bridge-predicate must be same-depth or all");
  }
  p.bridge.max_pairs_per_query = a.bridge_cap;

  const auto data = load_dataset(a.data);
  const auto queries = load_dataset(a.queries);

  std::ofstream jsonl_file;
  std::ostream* stream = &std::cout;
  if (!a.jsonl.empty()) {
    jsonl_file.open(a.jsonl);
    if (!jsonl_file) throw std::runtime_error("cannot open " + a.jsonl);
    stream = &jsonl_file;
  }
  const auto res = run_sliding_window(cfg, data, queries, [&](const RoundMetrics& m) {
    write_round_jsonl(*stream, cfg, m);
    stream->flush();
  });
  if (!a.out.empty()) {
    std::ofstream csv(a.out);
    if (!csv) throw std::runtime_error("cannot open " + a.out);
    write_rounds_csv(csv, res.rounds);
  }
  if (res.stopped_early) std::cerr << "stopped early: " << res.stop_reason << '\n';
  for (const auto& v : res.violations) std::cerr << "violation: " << v << '\n';
  return res.violations.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic graph ANN index workload driver"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run a sliding-window experiment");
  run->add_option("--engine", ra.engine, "cleann|naive|fresh|rebuild")->capture_default_str();
  run->add_option("--protocol", ra.protocol, "batched-update|batched-insert|mixed-update")
      ->capture_default_str();
  run->add_option("--data", ra.data, "Data file in stream order (.fvecs/.bvecs/.fbin)")
      ->required()->check(CLI::ExistingFile);
  run->add_option("--queries", ra.queries, "Test query file")->required()->check(CLI::ExistingFile);
  run->add_option("--window", ra.window, "Sliding window size")->capture_default_str();
  run->add_option("--batch-fraction", ra.batch_fraction, "Batch size as a fraction of the window")
      ->capture_default_str();
  run->add_option("--rounds", ra.rounds)->capture_default_str();
  run->add_option("--k", ra.k)->capture_default_str();
  run->add_option("--threads", ra.threads, "Worker threads (BENCH_THREADS overrides)")
      ->capture_default_str();
  run->add_option("--seed", ra.seed)->capture_default_str();
  run->add_option("--out", ra.out, "Final per-round CSV");
  run->add_option("--jsonl", ra.jsonl, "Per-round JSON lines (default stdout)");
  run->add_option("--metric", ra.metric, "l2|ip|cosine")->capture_default_str();
  run->add_option("--R", ra.R, "Max out-degree")->capture_default_str();
  run->add_option("--L", ra.L, "Search beam width")->capture_default_str();
  run->add_option("--L-insert", ra.L_insert, "Insert beam width")->capture_default_str();
  run->add_option("--alpha", ra.alpha)->capture_default_str();
  run->add_option("--C", ra.C, "Eagerness threshold")->capture_default_str();
  run->add_option("--capacity-factor", ra.capacity_factor, "Slots per window point")
      ->capture_default_str();
  run->add_option("--reuse", ra.reuse, "fresh-first|reused-first")->capture_default_str();
  run->add_option("--bridge", ra.bridge, "on|off")->capture_default_str();
  run->add_option("--bridge-depths", ra.bridge_depths, "auto or a list such as 2-12 or 5,6,7")
      ->capture_default_str();
  run->add_option("--bridge-predicate", ra.bridge_predicate, "same-depth|all")
      ->capture_default_str();
  run->add_option("--bridge-cap", ra.bridge_cap, "Max bridge pairs per query")
      ->capture_default_str();
  run->add_option("--training", ra.training, "none|in-dist|ood")->capture_default_str();
  run->add_option("--train-fraction", ra.train_fraction)->capture_default_str();
  run->add_option("--train-count", ra.train_count, "Fixed training query count (0: use fraction)");
  run->add_option("--initial-passes", ra.initial_passes, "Passes of the initial build (1|2)")
      ->capture_default_str();
  run->add_option("--truth-cache", ra.truth_cache, "Directory caching per-round ground truth");
  run->add_flag("--audit", ra.audit, "Record history and audit invariants each round");

  ClusterSpec cs;
  std::string kind = "clusters", order = "clustered", synth_out, synth_queries;
  std::size_t nq = 1000;
  std::uint64_t query_seed = 1;
  auto* gen = app.add_subcommand("gen-synth", "Write a clustered synthetic dataset");
  gen->add_option("--kind", kind, "clusters")->capture_default_str();
  gen->add_option("--n", cs.n)->capture_default_str();
  gen->add_option("--clusters", cs.clusters)->capture_default_str();
  gen->add_option("--cluster-size", cs.cluster_size)->capture_default_str();
  gen->add_option("--dim", cs.dim)->capture_default_str();
  gen->add_option("--sigma", cs.sigma, "Cluster std")->capture_default_str();
  gen->add_option("--extent", cs.extent, "Hypercube side")->capture_default_str();
  gen->add_option("--order", order, "clustered|shuffled")->capture_default_str();
  gen->add_option("--seed", cs.seed)->capture_default_str();
  gen->add_option("--out", synth_out, "Output data file")->required();
  gen->add_option("--queries-out", synth_queries, "Also write queries here");
  gen->add_option("--nq", nq, "Query count")->capture_default_str();
  gen->add_option("--query-seed", query_seed)->capture_default_str();

  std::string gt_data, gt_queries, gt_out, gt_metric = "l2";
  std::size_t gt_k = 10, gt_first = 0, gt_count = 0;
  int gt_threads = 1;
  auto* truth = app.add_subcommand("gen-truth", "Write exact kNN ground truth");
  truth->add_option("--data", gt_data)->required()->check(CLI::ExistingFile);
  truth->add_option("--queries", gt_queries)->required()->check(CLI::ExistingFile);
  truth->add_option("--k", gt_k)->capture_default_str();
  truth->add_option("--metric", gt_metric)->capture_default_str();
  truth->add_option("--first", gt_first, "First data row to include")->capture_default_str();
  truth->add_option("--count", gt_count, "Rows to include (0: all)");
  truth->add_option("--threads", gt_threads)->capture_default_str();
  truth->add_option("--out", gt_out)->required();

  std::vector<std::string> plot_in;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "Merge metrics CSVs into per-round plot data");
  plot->add_option("--in", plot_in, "label=metrics.csv (repeatable)")->required();
  plot->add_option("--out", plot_out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(ra);

    if (*gen) {
      if (kind != "clusters") throw std::invalid_argument("--kind must be clusters");
      if (order != "clustered" && order != "shuffled") {
        throw std::invalid_argument("--order must be clustered or shuffled");
      }
      cs.clustered_order = order == "clustered";
      const auto data = generate_clusters(cs);
      write_dataset(synth_out, data, format_from_path(synth_out));
      if (!synth_queries.empty()) {
        const auto q = generate_cluster_queries(cs, nq, query_seed);
        write_dataset(synth_queries, q, format_from_path(synth_queries));
      }
      return 0;
    }

    if (*truth) {
      const auto data = load_dataset(gt_data);
      const auto queries = load_dataset(gt_queries);
      if (data.dim != queries.dim) throw std::invalid_argument("data/query dimension mismatch");
      if (gt_first > data.size()) throw std::invalid_argument("--first beyond the data");
      const auto count = gt_count == 0 ? data.size() - gt_first : gt_count;
      if (gt_first + count > data.size()) throw std::invalid_argument("--count beyond the data");
      std::vector<std::uint32_t> labels(count);
      for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<std::uint32_t>(gt_first + i);
      PointSet points{data.rows(gt_first, count), data.dim, labels};
      GroundTruth t;
      t.rows = exact_knn_batch(queries.values, gt_k, points, parse_metric(gt_metric),
                               env_threads(gt_threads));
      t.k = t.rows.empty() ? gt_k : t.rows.front().size();
      write_truth(gt_out, t);
      return 0;
    }

    if (*plot) {
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!plot_out.empty()) {
        file.open(plot_out);
        if (!file) throw std::runtime_error("cannot open " + plot_out);
        out = &file;
      }
      *out << "series,round,recall_at_k,insert_qps,delete_qps,search_qps,live_nodes,peak_slots\n";
      for (const auto& spec : plot_in) {
        const auto eq = spec.find('=');
        const auto label = eq == std::string::npos ? spec : spec.substr(0, eq);
        const auto path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        for (const auto& m : read_rounds_csv(in)) {
          *out << label << ',' << m.round << ',';
          if (m.recall_at_k) *out << *m.recall_at_k;
          *out << ',' << m.insert_qps << ',' << m.delete_qps << ',' << m.search_qps << ','
               << m.live_nodes << ',' << m.peak_slots << '\n';
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
