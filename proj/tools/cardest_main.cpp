// Command-line front end: build an index bundle over an fvecs dataset, run
// cardinality estimates over a query workload, apply dataset updates, generate
// labeled workloads and evaluate Q-error reports.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardest/bench.hpp"
#include "cardest/bundle.hpp"
#include "cardest/core.hpp"
#include "cardest/ingest.hpp"
#include "cardest/prober.hpp"

namespace {

using nlohmann::json;
using namespace cardest;

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

int default_threads() {
  if (const char* env = std::getenv("CARDEST_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) {
      return n;
    }
  }
  return 1;
}

json prober_config_json(const ProberConfig& cfg) {
  return json{{"epsilon", cfg.epsilon},
              {"confidence_a", cfg.confidence_a},
              {"s_init", cfg.s_init},
              {"s_max", cfg.s_max},
              {"max_visit_fraction", cfg.max_visit_fraction},
              {"distance_mode", to_string(cfg.distance_mode)}};
}

struct ResultRow {
  std::int64_t query_id = 0;
  double estimate = 0.0;
  std::size_t points_visited = 0;
  int max_step = 0;
  std::string termination;
  std::size_t distances_computed = 0;
  double latency_us = 0.0;
};

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(path.string() + ": cannot open for reading");
  }
  std::vector<ResultRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    if (obj.contains("manifest")) {
      continue;
    }
    try {
      ResultRow row;
      row.query_id = obj.at("query_id").get<std::int64_t>();
      row.estimate = obj.at("estimate").get<double>();
      row.latency_us = obj.value("latency_us", 0.0);
      row.points_visited = obj.value("points_visited", std::size_t{0});
      row.max_step = obj.value("max_step", 0);
      row.termination = obj.value("termination", "");
      row.distances_computed = obj.value("distances_computed", std::size_t{0});
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// build

struct BuildOpts {
  std::string data_path;
  std::string out_dir;
  BundleParams params;
};

void run_build(const BuildOpts& opt) {
  Dataset dataset = read_fvecs(opt.data_path);
  IndexBundle bundle = build_bundle(std::move(dataset), opt.params);
  save_index(bundle, opt.out_dir);
  std::cout << "built index over " << bundle.dataset.size() << " points (dim "
            << bundle.dataset.dim << "), " << bundle.lsh.codes.size() << " buckets, width "
            << bundle.lsh.width;
  if (bundle.pq.has_value()) {
    std::cout << ", pq m=" << bundle.pq->m << " k=" << bundle.pq->k_clusters;
  }
  std::cout << "\nwrote " << opt.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOpts {
  std::string bundle_dir;
  std::string queries_path;
  std::string out_path;
  ProberConfig cfg;
  std::string mode = "exact";
  std::uint64_t seed = 1;
  int threads = default_threads();
};

void run_estimate(const EstimateOpts& opt) {
  const IndexBundle bundle = load_index(opt.bundle_dir);
  const auto records = read_queries(opt.queries_path);
  if (!records.empty() && records.front().vector.size() != bundle.dataset.dim) {
    throw DataError("queries dimension " + std::to_string(records.front().vector.size()) +
                    " does not match bundle dimension " + std::to_string(bundle.dataset.dim));
  }
  const bool use_adc = opt.mode == "adc";
  if (use_adc && !bundle.pq.has_value()) {
    throw DataError("ADC mode requested but the bundle holds no PQ index (build with --pq)");
  }
  opt.cfg.validate();

  std::vector<ResultRow> rows(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) {
        break;
      }
      const auto& rec = records[i];
      const auto t0 = std::chrono::steady_clock::now();
      auto rng = query_rng(opt.seed, rec.query_id);
      const DistanceEvaluator dist = use_adc
                                         ? DistanceEvaluator::adc(*bundle.pq, rec.vector)
                                         : DistanceEvaluator::exact(bundle.dataset, rec.vector);
      const RangeQuery query{rec.vector, rec.tau};
      const Estimate est = estimate(query, bundle.lsh, bundle.neighbors, opt.cfg, dist, rng);
      const auto t1 = std::chrono::steady_clock::now();

      ResultRow& row = rows[i];
      row.query_id = rec.query_id;
      row.estimate = est.cardinality;
      row.points_visited = est.points_visited;
      row.max_step = est.max_neighbor_step;
      row.termination = to_string(est.termination);
      row.distances_computed = est.distances_computed;
      row.latency_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
  };

  const int n_threads = std::max(1, opt.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  // Output is ordered by query id no matter how the workers were scheduled.
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) { return a.query_id < b.query_id; });

  std::ofstream out(opt.out_path, std::ios::trunc);
  if (!out) {
    throw DataError(opt.out_path + ": cannot open for writing");
  }
  // No timestamp here: reruns under a fixed seed reproduce the estimates.
  const json manifest{{"command", "estimate"},
                      {"bundle", opt.bundle_dir},
                      {"queries", opt.queries_path},
                      {"mode", opt.mode},
                      {"seed", opt.seed},
                      {"threads", n_threads},
                      {"config", prober_config_json(opt.cfg)}};
  out << json{{"manifest", manifest}}.dump() << "\n";
  for (const auto& row : rows) {
    out << json{{"query_id", row.query_id},
                {"estimate", row.estimate},
                {"points_visited", row.points_visited},
                {"max_step", row.max_step},
                {"termination", row.termination},
                {"distances_computed", row.distances_computed},
                {"latency_us", row.latency_us}}
               .dump()
        << "\n";
  }
  std::cout << "estimated " << rows.size() << " queries -> " << opt.out_path << "\n";
}

// ---------------------------------------------------------------------------
// update

struct UpdateOpts {
  std::string bundle_dir;
  std::string new_points_path;
  double pq_rebuild_threshold = 0.5;
};

void run_update(const UpdateOpts& opt) {
  IndexBundle bundle = load_index(opt.bundle_dir);
  const Dataset new_points = read_fvecs(opt.new_points_path);
  if (new_points.dim != bundle.dataset.dim) {
    throw DataError("new points dimension " + std::to_string(new_points.dim) +
                    " does not match bundle dimension " + std::to_string(bundle.dataset.dim));
  }
  update_bundle(bundle, new_points, opt.pq_rebuild_threshold);
  save_index(bundle, opt.bundle_dir);
  std::cout << "updated bundle to " << bundle.dataset.size() << " points, "
            << bundle.lsh.codes.size() << " buckets, width " << bundle.lsh.width << "\n";
}

// ---------------------------------------------------------------------------
// workload

struct WorkloadOpts {
  std::string data_path;
  std::string out_path;
  std::size_t n_queries = 0;
  int n_cards = 40;
  std::uint64_t seed = 1;
  std::string mode = "squared_l2";
};

void run_workload(const WorkloadOpts& opt) {
  const Dataset dataset = read_fvecs(opt.data_path);
  const auto records = generate_workload(dataset, opt.seed, opt.n_queries, opt.n_cards,
                                         distance_mode_from_string(opt.mode));
  // No timestamp here: regenerating with the same seed yields an identical file.
  const json manifest{{"command", "workload"},      {"data", opt.data_path},
                      {"seed", opt.seed},           {"n_queries", opt.n_queries},
                      {"n_cards", opt.n_cards},     {"distance_mode", opt.mode},
                      {"dataset_checksum", checksum_file(opt.data_path)}};
  write_queries(records, opt.out_path, manifest.dump());
  std::cout << "wrote " << records.size() << " labeled queries -> " << opt.out_path << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string results_path;
  std::string workload_path;
  std::vector<std::string> baselines;
  std::string data_path;
  std::string out_path;
  std::uint64_t seed = 1;
  std::string mode = "squared_l2";
};

void print_report(const std::string& name, const QErrorReport& report) {
  std::printf("%-16s mean %8.3f   p90 %8.3f   p95 %8.3f   p99 %8.3f   max %10.3f   lat(us) %10.1f\n",
              name.c_str(), report.mean, report.p90, report.p95, report.p99, report.max,
              report.mean_latency_us);
}

json report_to_json(const QErrorReport& report) {
  json rows = json::array();
  for (const auto& row : report.per_query) {
    rows.push_back(json{{"query_id", row.query_id},
                        {"truth", row.truth},
                        {"estimate", row.estimate},
                        {"q_error", row.q_err},
                        {"latency_us", row.latency_us}});
  }
  return json{{"mean", report.mean}, {"p90", report.p90},   {"p95", report.p95},
              {"p99", report.p99},   {"max", report.max},   {"mean_latency_us", report.mean_latency_us},
              {"per_query", rows}};
}

void run_eval(const EvalOpts& opt) {
  const auto workload = read_queries(opt.workload_path);
  const auto results = read_results(opt.results_path);

  std::unordered_map<std::int64_t, const QueryRecord*> by_id;
  for (const auto& rec : workload) {
    if (!rec.true_cardinality.has_value()) {
      throw DataError(opt.workload_path + ": query " + std::to_string(rec.query_id) +
                      " has no true_cardinality; eval needs a labeled workload");
    }
    by_id.emplace(rec.query_id, &rec);
  }
  if (results.size() != workload.size()) {
    throw DataError("results and workload differ in size (" + std::to_string(results.size()) +
                    " vs " + std::to_string(workload.size()) + ")");
  }

  std::vector<EvalRow> rows;
  rows.reserve(results.size());
  for (const auto& res : results) {
    const auto it = by_id.find(res.query_id);
    if (it == by_id.end()) {
      throw DataError("result query_id " + std::to_string(res.query_id) +
                      " not present in the workload");
    }
    EvalRow row;
    row.query_id = res.query_id;
    row.truth = static_cast<double>(*it->second->true_cardinality);
    row.estimate = res.estimate;
    row.latency_us = res.latency_us;
    rows.push_back(row);
  }
  const QErrorReport main_report = evaluate(rows);
  print_report("estimator", main_report);

  json out_json{{"manifest", json{{"command", "eval"},
                                  {"created_at", timestamp_utc()},
                                  {"results", opt.results_path},
                                  {"workload", opt.workload_path},
                                  {"seed", opt.seed}}},
                {"estimator", report_to_json(main_report)}};

  if (!opt.baselines.empty()) {
    if (opt.data_path.empty()) {
      throw DataError("--baseline requires --data so the baseline can scan the dataset");
    }
    const Dataset dataset = read_fvecs(opt.data_path);
    const DistanceMode mode = distance_mode_from_string(opt.mode);
    for (const auto& spec : opt.baselines) {
      if (spec.rfind("sample:", 0) != 0) {
        throw DataError("unknown baseline '" + spec + "' (expected sample:<fraction>)");
      }
      const double fraction = std::stod(spec.substr(7));
      std::vector<EvalRow> brows;
      brows.reserve(workload.size());
      for (const auto& rec : workload) {
        auto rng = query_rng(opt.seed ^ 0x5ba5eULL, rec.query_id);
        const RangeQuery query{rec.vector, rec.tau};
        const auto t0 = std::chrono::steady_clock::now();
        const Estimate est = sampling_baseline(query, dataset, fraction, rng, mode);
        const auto t1 = std::chrono::steady_clock::now();
        EvalRow row;
        row.query_id = rec.query_id;
        row.truth = static_cast<double>(*rec.true_cardinality);
        row.estimate = est.cardinality;
        row.latency_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
        brows.push_back(row);
      }
      const QErrorReport breport = evaluate(brows);
      print_report(spec, breport);
      out_json["baselines"][spec] = report_to_json(breport);
    }
  }

  if (!opt.out_path.empty()) {
    std::ofstream out(opt.out_path, std::ios::trunc);
    if (!out) {
      throw DataError(opt.out_path + ": cannot open for writing");
    }
    out << out_json.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cardinality estimation for high-dimensional similarity range queries"};
  app.require_subcommand(1);

  BuildOpts build_opts;
  auto* build = app.add_subcommand("build", "build an index bundle from an fvecs dataset");
  build->add_option("--data", build_opts.data_path, "input fvecs file")->required();
  build->add_option("--out", build_opts.out_dir, "output bundle directory")->required();
  build->add_option("--k-funcs", build_opts.params.k_funcs, "number of hash functions");
  build->add_option("--target-values", build_opts.params.target_values,
                    "distinct token values per hash function");
  build->add_option("--dmax", build_opts.params.d_max,
                    "neighbor table Hamming radius (0 = min(k, 6))");
  build->add_flag("--pq,!--no-pq", build_opts.params.with_pq, "train a PQ index");
  build->add_option("--pq-m", build_opts.params.pq_m, "PQ subspaces (0 = auto)");
  build->add_option("--pq-k", build_opts.params.pq_k, "PQ centroids per subspace");
  build->add_option("--kmeans-iters", build_opts.params.kmeans_iters, "k-means iterations");
  build->add_option("--seed", build_opts.params.seed, "random seed");

  EstimateOpts est_opts;
  auto* est = app.add_subcommand("estimate", "estimate cardinalities for a query workload");
  est->add_option("--bundle", est_opts.bundle_dir, "index bundle directory")->required();
  est->add_option("--queries", est_opts.queries_path, "query workload (JSON lines)")->required();
  est->add_option("--out", est_opts.out_path, "results file (JSON lines)")->required();
  est->add_option("--epsilon", est_opts.cfg.epsilon, "error tolerance");
  est->add_option("--a", est_opts.cfg.confidence_a, "confidence constant ln(1/Pr_fail)");
  est->add_option("--s-init", est_opts.cfg.s_init, "initial sampling rate");
  est->add_option("--s-max", est_opts.cfg.s_max, "maximum sampling rate");
  est->add_option("--max-visit", est_opts.cfg.max_visit_fraction,
                  "visit budget as a fraction of N");
  est->add_option("--mode", est_opts.mode, "distance oracle: exact or adc")
      ->check(CLI::IsMember({"exact", "adc"}));
  est->add_option("--distance-mode", est_opts.cfg.distance_mode,
                  "tau units: squared_l2 or l2")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, DistanceMode>{{"squared_l2", DistanceMode::SquaredL2},
                                              {"l2", DistanceMode::L2}}));
  est->add_option("--seed", est_opts.seed, "random seed");
  est->add_option("--threads", est_opts.threads, "worker threads (env CARDEST_THREADS)");

  UpdateOpts upd_opts;
  auto* upd = app.add_subcommand("update", "add new points to an existing bundle");
  upd->add_option("--bundle", upd_opts.bundle_dir, "index bundle directory")->required();
  upd->add_option("--new-points", upd_opts.new_points_path, "fvecs file of new points")
      ->required();
  upd->add_option("--pq-rebuild-threshold", upd_opts.pq_rebuild_threshold,
                  "retrain PQ when new/old exceeds this fraction");

  WorkloadOpts wl_opts;
  auto* wl = app.add_subcommand("workload", "generate a labeled query workload");
  wl->add_option("--data", wl_opts.data_path, "input fvecs file")->required();
  wl->add_option("--out", wl_opts.out_path, "output workload file")->required();
  wl->add_option("--n-queries", wl_opts.n_queries, "query vectors (0 = min(0.1% N, 1000))");
  wl->add_option("--n-cards", wl_opts.n_cards, "cardinality grid size per query");
  wl->add_option("--seed", wl_opts.seed, "random seed");
  wl->add_option("--distance-mode", wl_opts.mode, "tau units: squared_l2 or l2")
      ->check(CLI::IsMember({"squared_l2", "l2"}));

  EvalOpts ev_opts;
  auto* ev = app.add_subcommand("eval", "compare results against workload ground truth");
  ev->add_option("--results", ev_opts.results_path, "results file from estimate")->required();
  ev->add_option("--workload", ev_opts.workload_path, "labeled workload file")->required();
  ev->add_option("--baseline", ev_opts.baselines, "baseline spec, e.g. sample:0.01");
  ev->add_option("--data", ev_opts.data_path, "fvecs dataset (needed for baselines)");
  ev->add_option("--out", ev_opts.out_path, "JSON report file");
  ev->add_option("--seed", ev_opts.seed, "baseline random seed");
  ev->add_option("--distance-mode", ev_opts.mode, "tau units: squared_l2 or l2")
      ->check(CLI::IsMember({"squared_l2", "l2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (build->parsed()) {
      run_build(build_opts);
    } else if (est->parsed()) {
      run_estimate(est_opts);
    } else if (upd->parsed()) {
      run_update(upd_opts);
    } else if (wl->parsed()) {
      run_workload(wl_opts);
    } else if (ev->parsed()) {
      run_eval(ev_opts);
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
