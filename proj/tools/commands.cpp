#include "commands.hpp"

#include "concmtf/baselines.hpp"
#include "concmtf/io.hpp"
#include "concmtf/synth.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace concmtf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::optional<std::string>& path) {
  if (!path) return json::object();
  json j = read_json_file(*path);
  if (!j.is_object()) throw ParseError("config must be a JSON object: " + *path);
  return j;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ParseError("unknown config key '" + key + "' in " + context);
  }
}

BucketScheme bucket_scheme_from(const json& j) {
  if (j.is_null()) return BucketScheme::log_buckets(9);
  check_keys(j, {"kind", "size"}, "bucket");
  const std::string kind = j.value("kind", "log");
  const int size = j.value("size", kind == "log" ? 9 : 50);
  if (kind == "log") return BucketScheme::log_buckets(size);
  if (kind == "linear") return BucketScheme::linear_capped(size);
  throw ParseError("bucket kind must be 'log' or 'linear'");
}

struct DecomposeConfig {
  std::string method = "concmtf";
  ModelKind kind = ModelKind::tucker3;
  std::array<Index, 3> ranks{2, 2, 2};
  ConstraintConfig constraints;
  FitConfig fit;
};

DecomposeConfig decompose_config_from(const json& j, const CommonOverrides& over) {
  check_keys(j, {"method", "kind", "rank", "ranks", "constraints", "seed", "max_iters",
                 "rel_tol", "record_trace"},
             "decompose config");
  DecomposeConfig cfg;
  cfg.method = j.value("method", "concmtf");
  if (cfg.method != "concmtf" && cfg.method != "parafac_ns" && cfg.method != "tucker3_ns")
    throw ParseError("method must be concmtf, parafac_ns or tucker3_ns");
  cfg.kind = model_kind_from_string(j.value("kind", "tucker3"));
  if (j.contains("ranks")) {
    auto r = j.at("ranks").get<std::vector<Index>>();
    if (r.size() != 3) throw ParseError("ranks must have three entries");
    cfg.ranks = {r[0], r[1], r[2]};
  } else if (j.contains("rank")) {
    Index r = j.at("rank").get<Index>();
    cfg.ranks = {r, r, r};
  }
  if (j.contains("constraints")) cfg.constraints = constraint_config_from_json(j.at("constraints"));
  cfg.fit.seed = j.value("seed", std::uint64_t{0});
  cfg.fit.max_iters = j.value("max_iters", 200);
  cfg.fit.rel_tol = j.value("rel_tol", 1e-6);
  cfg.fit.record_trace = j.value("record_trace", true);

  if (over.kind) cfg.kind = model_kind_from_string(*over.kind);
  if (over.rank) cfg.ranks = {*over.rank, *over.rank, *over.rank};
  if (over.seed) cfg.fit.seed = *over.seed;
  if (over.max_iters) cfg.fit.max_iters = *over.max_iters;
  if (over.lambda) cfg.constraints.coupling_weight = *over.lambda;
  auto set_eps = [](BlockConstraints& bc, std::optional<double> eps) {
    if (eps) {
      bc.nonneg = true;
      bc.l1_eps = *eps;
      bc.orth_eps = *eps;
    }
  };
  set_eps(cfg.constraints.a, over.eps_a);
  set_eps(cfg.constraints.b, over.eps_b);
  set_eps(cfg.constraints.c, over.eps_c);
  set_eps(cfg.constraints.d, over.eps_d);
  if (over.eps_core) {
    cfg.constraints.core.nonneg = true;
    cfg.constraints.core.l1_eps = *over.eps_core;
  }
  return cfg;
}

int worker_count() {
  if (const char* env = std::getenv("CONCMTF_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int cmd_build(const std::string& input, const std::string& output,
              const std::optional<std::string>& config_path) {
  json cfg = load_config(config_path);
  check_keys(cfg, {"min_count", "bucket", "top_tags", "epoch_start"}, "build config");
  const std::int64_t min_count = cfg.value("min_count", 100);
  const BucketScheme scheme =
      bucket_scheme_from(cfg.contains("bucket") ? cfg.at("bucket") : json());
  const std::size_t n_top_tags = cfg.value("top_tags", 30);

  JsonlReadResult read = read_posts_jsonl(input);
  for (const auto& [line, message] : read.errors)
    std::cerr << input << ":" << line << ": malformed post: " << message << "\n";
  if (!read.errors.empty() &&
      static_cast<double>(read.errors.size()) > 0.01 * static_cast<double>(read.total_lines)) {
    std::cerr << "error: " << read.errors.size() << " of " << read.total_lines
              << " lines malformed (over 1%)\n";
    return kExitError;
  }
  if (read.posts.empty()) std::cerr << "warning: no posts read, writing empty outputs\n";

  const std::int64_t epoch_start = cfg.contains("epoch_start")
                                       ? cfg.at("epoch_start").get<std::int64_t>()
                                       : default_epoch_start(read.posts);

  Vocabulary vocab = build_vocabulary(read.posts, min_count);
  auto numbers = assign_post_numbers(read.posts);
  CooTensor tensor = build_corpus_tensor(read.posts, numbers, vocab, scheme, epoch_start);
  auto tags = top_tags(read.posts, vocab, n_top_tags);
  Matrix y = build_tag_matrix(read.posts, vocab, tags);

  fs::create_directories(output);
  write_coo_tensor(fs::path(output) / "tensor.tsv", tensor);
  write_matrix(fs::path(output) / "y.tsv", y);
  write_vocab(fs::path(output) / "vocab.tsv", vocab);
  std::vector<std::int64_t> tag_counts;
  for (Index f = 0; f < y.cols(); ++f)
    tag_counts.push_back(static_cast<std::int64_t>(y.col(f).sum()));
  write_tags(fs::path(output) / "tags.tsv", tags, tag_counts);

  json manifest;
  manifest["dims"] = {tensor.dims[0], tensor.dims[1], tensor.dims[2]};
  manifest["y_dims"] = {y.rows(), y.cols()};
  manifest["posts"] = read.posts.size();
  manifest["malformed_lines"] = read.errors.size();
  manifest["vocab_size"] = vocab.size();
  manifest["min_count"] = min_count;
  manifest["bucket"] = {{"kind", scheme.kind == BucketScheme::Kind::log_bucket ? "log" : "linear"},
                        {"size", scheme.size}};
  manifest["epoch_start"] = epoch_start;
  manifest["tensor_mass"] = tensor.total();
  write_json_file(fs::path(output) / "manifest.json", manifest);

  std::cout << "built tensor " << tensor.dims[0] << " x " << tensor.dims[1] << " x "
            << tensor.dims[2] << ", coupled matrix " << y.rows() << " x " << y.cols() << "\n";
  return kExitOk;
}

int cmd_decompose(const std::string& tensor_path, const std::string& matrix_path,
                  const std::string& output, const std::optional<std::string>& config_path,
                  const CommonOverrides& over) {
  DecomposeConfig cfg = decompose_config_from(load_config(config_path), over);

  Tensor3 tensor = read_coo_tensor(tensor_path).densify();
  Matrix y = matrix_path.empty() ? Matrix(tensor.dim(0), 0) : read_matrix(matrix_path);

  FactorModel model;
  FitTrace trace;
  ConstraintConfig used = cfg.constraints;
  if (cfg.method == "parafac_ns") {
    used = parafac_ns_config();
    std::tie(model, trace) = parafac_ns_fit(tensor, cfg.ranks[0], cfg.fit);
  } else if (cfg.method == "tucker3_ns") {
    used = tucker3_ns_config(cfg.constraints.core.l1_eps);
    std::tie(model, trace) = tucker3_ns_fit(tensor, cfg.ranks, cfg.constraints.core.l1_eps, cfg.fit);
  } else {
    std::tie(model, trace) = fit(tensor, y, cfg.ranks, cfg.kind, cfg.constraints, cfg.fit);
  }

  write_model_dir(output, model, trace, fit_manifest(model, trace, used, cfg.fit, cfg.method));
  std::cout << (trace.converged ? "converged" : "stopped at max_iters") << " after "
            << trace.iterations.back().iteration << " iterations, objective "
            << format_double(trace.iterations.back().objective) << "\n";
  return trace.converged ? kExitOk : kExitNotConverged;
}

int cmd_topics(const std::string& model_dir, const std::string& vocab_path,
               const std::string& output, std::optional<double> density_tol) {
  FactorModel model = read_model_dir(model_dir);
  Vocabulary vocab = read_vocab(vocab_path);
  TopicReport report = build_report(model, vocab.words, density_tol);
  write_topic_report(output, report);
  std::cout << "wrote " << report.components.size() << " topic components\n";
  return kExitOk;
}

int cmd_synth(const std::string& output, const std::optional<std::string>& config_path,
              const CommonOverrides& over) {
  json cfg = load_config(config_path);
  check_keys(cfg, {"dims", "ranks", "rank", "kind", "sparsity", "noise", "seed"}, "synth config");
  auto dims_v = cfg.value("dims", std::vector<Index>{20, 15, 6, 8});
  if (dims_v.size() != 4) throw ParseError("dims must be [I, J, K, F]");
  std::array<Index, 4> dims{dims_v[0], dims_v[1], dims_v[2], dims_v[3]};
  std::array<Index, 3> ranks{2, 2, 2};
  if (cfg.contains("ranks")) {
    auto r = cfg.at("ranks").get<std::vector<Index>>();
    if (r.size() != 3) throw ParseError("ranks must have three entries");
    ranks = {r[0], r[1], r[2]};
  } else if (cfg.contains("rank")) {
    Index r = cfg.at("rank").get<Index>();
    ranks = {r, r, r};
  }
  ModelKind kind = model_kind_from_string(cfg.value("kind", "cp"));
  double sparsity = cfg.value("sparsity", 0.5);
  double noise = cfg.value("noise", 0.0);
  std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  if (over.kind) kind = model_kind_from_string(*over.kind);
  if (over.rank) ranks = {*over.rank, *over.rank, *over.rank};
  if (over.seed) seed = *over.seed;

  PlantedInstance inst = generate_planted(dims, ranks, kind, sparsity, noise, seed);

  fs::create_directories(output);
  write_coo_tensor(fs::path(output) / "tensor.tsv", CooTensor::from_dense(inst.tensor));
  write_matrix(fs::path(output) / "y.tsv", inst.coupled);
  json manifest;
  manifest["dims"] = dims_v;
  manifest["ranks"] = {ranks[0], ranks[1], ranks[2]};
  manifest["kind"] = to_string(kind);
  manifest["sparsity"] = sparsity;
  manifest["noise"] = noise;
  manifest["seed"] = seed;
  write_json_file(fs::path(output) / "manifest.json", manifest);
  write_model_dir(fs::path(output) / "truth", inst.truth, FitTrace{}, manifest);

  std::cout << "planted instance " << dims[0] << " x " << dims[1] << " x " << dims[2]
            << ", coupled " << dims[0] << " x " << dims[3] << "\n";
  return kExitOk;
}

namespace {

PlantedInstance instance_from_dir(const fs::path& dir) {
  json manifest = read_json_file(dir / "manifest.json");
  PlantedInstance inst;
  inst.tensor = read_coo_tensor(dir / "tensor.tsv").densify();
  inst.coupled = read_matrix(dir / "y.tsv");
  inst.truth = read_model_dir(dir / "truth");
  inst.noise_level = manifest.value("noise", 0.0);
  inst.sparsity = manifest.value("sparsity", 0.0);
  inst.seed = manifest.value("seed", std::uint64_t{0});
  return inst;
}

json metrics_json(const std::string& name, const RunMetrics& m) {
  json j;
  j["model"] = name;
  if (m.match_score) j["match_score"] = *m.match_score;
  j["rel_error"] = m.rel_error;
  j["mean_word_overlap"] = m.mean_word_overlap;
  j["core_density"] = m.core_density;
  j["iterations"] = m.iterations;
  j["millis"] = m.millis;
  return j;
}

void write_comparison_tsv(const fs::path& path, const std::vector<json>& rows) {
  std::vector<std::string> lines;
  lines.push_back("model\tseed\tmatch_score\trel_error\tmean_word_overlap\tcore_density\titerations");
  for (const auto& r : rows) {
    std::string line = r.at("model").get<std::string>();
    line += '\t' + (r.contains("seed") ? std::to_string(r.at("seed").get<std::uint64_t>()) : "-");
    line += '\t' + (r.contains("match_score") ? format_double(r.at("match_score").get<double>())
                                              : std::string("-"));
    line += '\t' + format_double(r.at("rel_error").get<double>());
    line += '\t' + format_double(r.at("mean_word_overlap").get<double>());
    line += '\t' + format_double(r.at("core_density").get<double>());
    line += '\t' + std::to_string(r.at("iterations").get<int>());
    lines.push_back(line);
  }
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
}

struct EvalMethod {
  std::string name;
  ModelKind kind = ModelKind::cp;
  ConstraintConfig constraints;
  std::optional<double> core_l1;
};

EvalMethod eval_method_from(const json& j) {
  check_keys(j, {"name", "kind", "constraints", "core_l1"}, "eval method");
  EvalMethod m;
  m.name = j.at("name").get<std::string>();
  if (j.contains("kind")) m.kind = model_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("constraints")) m.constraints = constraint_config_from_json(j.at("constraints"));
  if (j.contains("core_l1")) m.core_l1 = j.at("core_l1").get<double>();
  return m;
}

}  // namespace

int cmd_eval(const std::string& output, const std::optional<std::string>& config_path,
             const std::vector<std::string>& model_dirs,
             const std::optional<std::string>& instance_dir) {
  fs::create_directories(output);
  std::vector<json> rows;

  if (instance_dir) {
    // Compare already-fitted model directories against a stored instance.
    if (!fs::exists(*instance_dir)) {
      std::cerr << "error: missing instance dir " << *instance_dir << "\n";
      return kExitError;
    }
    PlantedInstance inst = instance_from_dir(*instance_dir);
    std::vector<std::string> vocab(static_cast<std::size_t>(inst.tensor.dim(0)));
    for (std::size_t i = 0; i < vocab.size(); ++i) vocab[i] = "w" + std::to_string(i);
    for (const auto& dir : model_dirs) {
      if (!fs::exists(fs::path(dir) / "manifest.json")) {
        std::cerr << "error: missing model dir " << dir << "\n";
        return kExitError;
      }
      FactorModel model = read_model_dir(dir);
      json manifest = read_json_file(fs::path(dir) / "manifest.json");
      FitTrace trace;
      IterationStats last;
      last.iteration = manifest.value("iterations", 0);
      last.objective = manifest.value("final_objective", 0.0);
      trace.iterations.push_back(last);
      TopicReport report = build_report(model, vocab);
      RunMetrics metrics = evaluate_run(inst, model, trace, report);
      json row = metrics_json(manifest.value("method", fs::path(dir).filename().string()), metrics);
      rows.push_back(row);
    }
  } else {
    // Drive planted instances end to end across seeds and methods.
    json cfg = load_config(config_path);
    check_keys(cfg, {"planted", "seeds", "methods", "fit"}, "eval config");
    if (!cfg.contains("planted")) {
      std::cerr << "error: eval needs either --instance or a 'planted' config\n";
      return kExitError;
    }
    const json& planted = cfg.at("planted");
    check_keys(planted, {"dims", "ranks", "rank", "kind", "sparsity", "noise"}, "planted");
    auto dims_v = planted.value("dims", std::vector<Index>{20, 15, 6, 8});
    if (dims_v.size() != 4) throw ParseError("planted dims must be [I, J, K, F]");
    std::array<Index, 4> dims{dims_v[0], dims_v[1], dims_v[2], dims_v[3]};
    std::array<Index, 3> ranks{2, 2, 2};
    if (planted.contains("ranks")) {
      auto r = planted.at("ranks").get<std::vector<Index>>();
      ranks = {r[0], r[1], r[2]};
    } else if (planted.contains("rank")) {
      Index r = planted.at("rank").get<Index>();
      ranks = {r, r, r};
    }
    ModelKind planted_kind = model_kind_from_string(planted.value("kind", "cp"));
    double sparsity = planted.value("sparsity", 0.5);
    double noise = planted.value("noise", 0.0);
    auto seeds = cfg.value("seeds", std::vector<std::uint64_t>{0});

    FitConfig fit_cfg;
    if (cfg.contains("fit")) {
      check_keys(cfg.at("fit"), {"max_iters", "rel_tol"}, "fit");
      fit_cfg.max_iters = cfg.at("fit").value("max_iters", 200);
      fit_cfg.rel_tol = cfg.at("fit").value("rel_tol", 1e-6);
    }
    fit_cfg.record_trace = true;

    std::vector<EvalMethod> methods;
    if (cfg.contains("methods")) {
      for (const auto& mj : cfg.at("methods")) methods.push_back(eval_method_from(mj));
    } else {
      methods.push_back({"concmtf", planted_kind, {}, {}});
      methods.push_back({"parafac_ns", ModelKind::cp, parafac_ns_config(), {}});
    }

    struct Task {
      std::uint64_t seed;
      std::size_t method;
    };
    std::vector<Task> tasks;
    for (std::uint64_t seed : seeds)
      for (std::size_t mi = 0; mi < methods.size(); ++mi) tasks.push_back({seed, mi});
    std::vector<json> results(tasks.size());

    auto run_task = [&](std::size_t ti) {
      const auto& task = tasks[ti];
      const auto& method = methods[task.method];
      PlantedInstance inst =
          generate_planted(dims, ranks, planted_kind, sparsity, noise, task.seed);
      FitConfig fc = fit_cfg;
      fc.seed = task.seed;
      FactorModel model;
      FitTrace trace;
      if (method.name == "parafac_ns") {
        std::tie(model, trace) = parafac_ns_fit(inst.tensor, ranks[0], fc);
      } else if (method.name == "tucker3_ns") {
        std::tie(model, trace) = tucker3_ns_fit(inst.tensor, ranks, method.core_l1, fc);
      } else {
        std::tie(model, trace) =
            fit(inst.tensor, inst.coupled, ranks, method.kind, method.constraints, fc);
      }
      std::vector<std::string> vocab(static_cast<std::size_t>(inst.tensor.dim(0)));
      for (std::size_t i = 0; i < vocab.size(); ++i) vocab[i] = "w" + std::to_string(i);
      TopicReport report = build_report(model, vocab);
      RunMetrics metrics = evaluate_run(inst, model, trace, report);
      json row = metrics_json(method.name, metrics);
      row["seed"] = task.seed;
      results[ti] = row;
    };

    const int workers = std::min<int>(worker_count(), static_cast<int>(tasks.size()));
    if (workers <= 1) {
      for (std::size_t ti = 0; ti < tasks.size(); ++ti) run_task(ti);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t ti = next.fetch_add(1); ti < tasks.size(); ti = next.fetch_add(1))
            run_task(ti);
        });
      for (auto& th : pool) th.join();
    }
    rows = std::move(results);
  }

  json all = json::array();
  for (const auto& r : rows) all.push_back(r);
  write_json_file(fs::path(output) / "metrics.json", all);
  write_comparison_tsv(fs::path(output) / "comparison.tsv", rows);
  std::cout << "evaluated " << rows.size() << " runs\n";
  return kExitOk;
}

}  // namespace concmtf::cli
