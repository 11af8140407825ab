#include "concmtf/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace concmtf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open for reading: " + path.string());
  return in;
}

double parse_double(const std::string& s, const fs::path& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("bad number '" + s + "' in " + path.string());
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

void write_coo_tensor(const fs::path& path, const CooTensor& t) {
  CooTensor canonical = t;
  canonical.canonicalize();
  auto out = open_out(path);
  out << "#tensor3 " << canonical.dims[0] << ' ' << canonical.dims[1] << ' '
      << canonical.dims[2] << '\n';
  for (const auto& e : canonical.entries)
    out << e.i << '\t' << e.j << '\t' << e.k << '\t' << format_double(e.value) << '\n';
}

CooTensor read_coo_tensor(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty tensor file: " + path.string());
  CooTensor t;
  {
    std::istringstream header(line);
    std::string magic;
    header >> magic >> t.dims[0] >> t.dims[1] >> t.dims[2];
    if (magic != "#tensor3" || header.fail())
      throw ParseError("bad tensor header in " + path.string());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto parts = split_tabs(line);
    if (parts.size() != 4) throw ParseError("bad tensor row in " + path.string());
    CooEntry e;
    e.i = static_cast<Index>(std::stoll(parts[0]));
    e.j = static_cast<Index>(std::stoll(parts[1]));
    e.k = static_cast<Index>(std::stoll(parts[2]));
    e.value = parse_double(parts[3], path);
    t.entries.push_back(e);
  }
  t.canonicalize();
  return t;
}

void write_matrix(const fs::path& path, const Matrix& m) {
  auto out = open_out(path);
  out << "#matrix " << m.rows() << ' ' << m.cols() << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << '\t';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty matrix file: " + path.string());
  Index rows = 0, cols = 0;
  {
    std::istringstream header(line);
    std::string magic;
    header >> magic >> rows >> cols;
    if (magic != "#matrix" || header.fail())
      throw ParseError("bad matrix header in " + path.string());
  }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw ParseError("truncated matrix file: " + path.string());
    auto parts = split_tabs(line);
    if (static_cast<Index>(parts.size()) != cols && !(cols == 0 && parts.size() == 1))
      throw ParseError("bad matrix row in " + path.string());
    for (Index c = 0; c < cols; ++c) m(r, c) = parse_double(parts[static_cast<std::size_t>(c)], path);
  }
  return m;
}

void write_vocab(const fs::path& path, const Vocabulary& vocab) {
  auto out = open_out(path);
  for (Index i = 0; i < vocab.size(); ++i)
    out << i << '\t' << vocab.words[static_cast<std::size_t>(i)] << '\t'
        << vocab.counts[static_cast<std::size_t>(i)] << '\n';
}

Vocabulary read_vocab(const fs::path& path) {
  auto in = open_in(path);
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto parts = split_tabs(line);
    if (parts.size() != 3) throw ParseError("bad vocab row in " + path.string());
    vocab.index.emplace(parts[1], vocab.size());
    vocab.words.push_back(parts[1]);
    vocab.counts.push_back(std::stoll(parts[2]));
  }
  return vocab;
}

void write_tags(const fs::path& path, const std::vector<std::string>& tags,
                const std::vector<std::int64_t>& counts) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < tags.size(); ++i)
    out << i << '\t' << tags[i] << '\t' << (i < counts.size() ? counts[i] : 0) << '\n';
}

std::vector<std::string> read_tags(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> tags;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto parts = split_tabs(line);
    if (parts.size() < 2) throw ParseError("bad tags row in " + path.string());
    tags.push_back(parts[1]);
  }
  return tags;
}

JsonlReadResult read_posts_jsonl(const fs::path& path) {
  auto in = open_in(path);
  JsonlReadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++result.total_lines;
    try {
      json j = json::parse(line);
      PostRecord post;
      post.user = j.at("user").get<std::string>();
      post.ts = j.at("ts").get<std::int64_t>();
      post.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (j.contains("tags")) post.tags = j.at("tags").get<std::vector<std::string>>();
      if (post.ts < 0) throw ParseError("negative timestamp");
      result.posts.push_back(std::move(post));
    } catch (const std::exception& e) {
      result.errors.emplace_back(line_no, e.what());
    }
  }
  return result;
}

void write_trace(const fs::path& path, const FitTrace& trace) {
  auto out = open_out(path);
  out << "iteration\tobjective\tmax_violation\tmillis\n";
  for (const auto& row : trace.iterations)
    out << row.iteration << '\t' << format_double(row.objective) << '\t'
        << format_double(row.max_violation()) << '\t' << format_double(row.millis) << '\n';
}

namespace {

json block_json(const BlockConstraints& bc) {
  json j;
  j["nonneg"] = bc.nonneg;
  if (bc.l1_eps) j["l1_eps"] = *bc.l1_eps;
  if (bc.orth_eps) j["orth_eps"] = *bc.orth_eps;
  return j;
}

BlockConstraints block_from_json(const json& j) {
  BlockConstraints bc;
  bc.nonneg = j.value("nonneg", false);
  if (j.contains("l1_eps")) bc.l1_eps = j.at("l1_eps").get<double>();
  if (j.contains("orth_eps")) bc.orth_eps = j.at("orth_eps").get<double>();
  return bc;
}

}  // namespace

json constraint_config_json(const ConstraintConfig& cfg) {
  json j;
  j["a"] = block_json(cfg.a);
  j["b"] = block_json(cfg.b);
  j["c"] = block_json(cfg.c);
  j["d"] = block_json(cfg.d);
  json core;
  core["nonneg"] = cfg.core.nonneg;
  if (cfg.core.l1_eps) core["l1_eps"] = *cfg.core.l1_eps;
  j["core"] = core;
  j["lambda"] = cfg.coupling_weight;
  j["normalize_d"] = cfg.normalize_d;
  return j;
}

ConstraintConfig constraint_config_from_json(const json& j) {
  ConstraintConfig cfg;
  if (j.contains("a")) cfg.a = block_from_json(j.at("a"));
  if (j.contains("b")) cfg.b = block_from_json(j.at("b"));
  if (j.contains("c")) cfg.c = block_from_json(j.at("c"));
  if (j.contains("d")) cfg.d = block_from_json(j.at("d"));
  if (j.contains("core")) {
    cfg.core.nonneg = j.at("core").value("nonneg", false);
    if (j.at("core").contains("l1_eps")) cfg.core.l1_eps = j.at("core").at("l1_eps").get<double>();
  }
  cfg.coupling_weight = j.value("lambda", 1.0);
  cfg.normalize_d = j.value("normalize_d", false);
  cfg.validate();
  return cfg;
}

json fit_manifest(const FactorModel& model, const FitTrace& trace, const ConstraintConfig& ccfg,
                  const FitConfig& fcfg, const std::string& method) {
  json j;
  j["method"] = method;
  j["kind"] = to_string(model.kind);
  const auto ranks = model.ranks();
  j["ranks"] = {ranks[0], ranks[1], ranks[2]};
  j["dims"] = {model.a.rows(), model.b.rows(), model.c.rows(), model.d.rows()};
  j["constraints"] = constraint_config_json(ccfg);
  j["seed"] = fcfg.seed;
  j["max_iters"] = fcfg.max_iters;
  j["rel_tol"] = fcfg.rel_tol;
  j["converged"] = trace.converged;
  if (!trace.iterations.empty()) {
    j["iterations"] = trace.iterations.back().iteration;
    j["final_objective"] = trace.iterations.back().objective;
    double feas = 0.0;
    for (const auto& row : trace.iterations) feas = std::max(feas, row.max_violation());
    j["max_feasibility_violation"] = feas;
  }
  return j;
}

void write_json_file(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  auto in = open_in(path);
  return json::parse(in);
}

void write_model_dir(const fs::path& dir, const FactorModel& model, const FitTrace& trace,
                     const json& manifest) {
  fs::create_directories(dir);
  write_matrix(dir / "a.tsv", model.a);
  write_matrix(dir / "b.tsv", model.b);
  write_matrix(dir / "c.tsv", model.c);
  write_matrix(dir / "d.tsv", model.d);
  write_coo_tensor(dir / "core.tsv", CooTensor::from_dense(model.core));
  write_trace(dir / "trace.tsv", trace);
  write_json_file(dir / "manifest.json", manifest);
}

FactorModel read_model_dir(const fs::path& dir) {
  json manifest = read_json_file(dir / "manifest.json");
  FactorModel model;
  model.kind = model_kind_from_string(manifest.at("kind").get<std::string>());
  model.a = read_matrix(dir / "a.tsv");
  model.b = read_matrix(dir / "b.tsv");
  model.c = read_matrix(dir / "c.tsv");
  model.d = read_matrix(dir / "d.tsv");
  model.core = read_coo_tensor(dir / "core.tsv").densify();
  return model;
}

json topic_report_json(const TopicReport& report) {
  json j;
  json comps = json::array();
  for (const auto& comp : report.components) {
    json c;
    c["index"] = comp.index;
    c["threshold"] = comp.threshold;
    json words = json::array();
    for (const auto& e : comp.word_support) {
      json w;
      w["word"] = report.vocab[static_cast<std::size_t>(e.index)];
      w["index"] = e.index;
      w["weight"] = e.weight;
      words.push_back(w);
    }
    c["words"] = words;
    c["time_profile"] = std::vector<double>(comp.time_profile.begin(), comp.time_profile.end());
    c["difficulty_profile"] =
        std::vector<double>(comp.difficulty_profile.begin(), comp.difficulty_profile.end());
    c["tag_loadings"] = std::vector<double>(comp.tag_loadings.begin(), comp.tag_loadings.end());
    comps.push_back(c);
  }
  j["components"] = comps;

  json metrics;
  metrics["core_density"] = report.core_density;
  metrics["density_tol"] = report.density_tol;
  metrics["mean_pairwise_overlap"] = report.mean_pairwise_overlap();
  auto matrix_rows = [](const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  metrics["cosine_overlap"] = matrix_rows(report.cosine_overlap);
  metrics["support_jaccard"] = matrix_rows(report.support_jaccard);
  j["metrics"] = metrics;
  return j;
}

void write_topic_report(const fs::path& dir, const TopicReport& report) {
  fs::create_directories(dir);
  write_json_file(dir / "report.json", topic_report_json(report));
  for (const auto& comp : report.components) {
    const std::string stem = "topic_" + std::to_string(comp.index);
    {
      auto out = open_out(dir / (stem + "_words.tsv"));
      for (const auto& e : comp.word_support)
        out << report.vocab[static_cast<std::size_t>(e.index)] << '\t'
            << format_double(e.weight) << '\n';
    }
    {
      auto out = open_out(dir / (stem + "_time.tsv"));
      for (Index w = 0; w < comp.time_profile.size(); ++w)
        out << w << '\t' << format_double(comp.time_profile[w]) << '\n';
    }
    {
      auto out = open_out(dir / (stem + "_difficulty.tsv"));
      for (Index b = 0; b < comp.difficulty_profile.size(); ++b)
        out << b << '\t' << format_double(comp.difficulty_profile[b]) << '\n';
    }
  }
}

}  // namespace concmtf
