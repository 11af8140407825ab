#include "concmtf/io.hpp"

#include "concmtf/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

using namespace concmtf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("concmtf_test_" + std::to_string(RandomStream(std::random_device{}())
                                                 .below(1u << 30)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("tensor files round-trip bit exactly") {
  TempDir tmp;
  RandomStream rs(3);
  CooTensor t;
  t.dims = {4, 3, 2};
  for (int n = 0; n < 10; ++n)
    t.entries.push_back({static_cast<Index>(rs.below(4)), static_cast<Index>(rs.below(3)),
                         static_cast<Index>(rs.below(2)), rs.uniform(0.001, 5.0)});
  t.canonicalize();

  const fs::path file = tmp.path / "t.tsv";
  write_coo_tensor(file, t);
  CooTensor back = read_coo_tensor(file);
  CHECK(back.dims == t.dims);
  REQUIRE(back.entries.size() == t.entries.size());
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    CHECK(back.entries[i].i == t.entries[i].i);
    CHECK(back.entries[i].value == t.entries[i].value);  // exact doubles
  }

  // Header carries the dims; writes are stable byte-for-byte.
  std::string first = slurp(file);
  CHECK(first.starts_with("#tensor3 4 3 2\n"));
  write_coo_tensor(file, t);
  CHECK(slurp(file) == first);
}

TEST_CASE("matrix files round-trip bit exactly") {
  TempDir tmp;
  RandomStream rs(4);
  Matrix m = concmtf::testing::random_matrix(5, 3, rs, -2.0, 2.0);
  const fs::path file = tmp.path / "m.tsv";
  write_matrix(file, m);
  CHECK(read_matrix(file) == m);

  Matrix empty(3, 0);
  write_matrix(tmp.path / "e.tsv", empty);
  Matrix back = read_matrix(tmp.path / "e.tsv");
  CHECK(back.rows() == 3);
  CHECK(back.cols() == 0);
}

TEST_CASE("malformed files raise parse errors") {
  TempDir tmp;
  const fs::path bad = tmp.path / "bad.tsv";
  std::ofstream(bad) << "#matrix 2 2\n1\t2\n";  // truncated
  CHECK_THROWS_AS(read_matrix(bad), ParseError);
  std::ofstream(bad) << "#wrong 1 1\n";
  CHECK_THROWS_AS(read_coo_tensor(bad), ParseError);
  CHECK_THROWS_AS(read_matrix(tmp.path / "missing.tsv"), ParseError);
}

TEST_CASE("vocab and tags tables round-trip") {
  TempDir tmp;
  Vocabulary vocab;
  for (auto [w, c] : {std::pair{"flux", 101}, {"ring", 7}}) {
    vocab.index.emplace(w, vocab.size());
    vocab.words.push_back(w);
    vocab.counts.push_back(c);
  }
  write_vocab(tmp.path / "vocab.tsv", vocab);
  Vocabulary back = read_vocab(tmp.path / "vocab.tsv");
  CHECK(back.words == vocab.words);
  CHECK(back.counts == vocab.counts);
  CHECK(back.lookup("ring") == 1);

  write_tags(tmp.path / "tags.tsv", {"a", "b"}, {5, 2});
  CHECK(read_tags(tmp.path / "tags.tsv") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("post logs parse with line-accurate errors") {
  TempDir tmp;
  const fs::path file = tmp.path / "posts.jsonl";
  std::ofstream(file) << R"({"user":"u","ts":100,"tokens":["a","b"],"tags":["t"]})"
                      << "\n"
                      << "not json\n"
                      << R"({"user":"v","ts":200,"tokens":[]})"
                      << "\n"
                      << R"({"user":"w","tokens":[]})"
                      << "\n";
  JsonlReadResult result = read_posts_jsonl(file);
  CHECK(result.total_lines == 4);
  REQUIRE(result.posts.size() == 2);
  CHECK(result.posts[0].user == "u");
  CHECK(result.posts[0].tokens.size() == 2);
  CHECK(result.posts[1].tags.empty());
  REQUIRE(result.errors.size() == 2);
  CHECK(result.errors[0].first == 2);
  CHECK(result.errors[1].first == 4);  // missing ts
}

TEST_CASE("model directories round-trip through the interchange formats") {
  TempDir tmp;
  FactorModel m = init_factors({6, 5, 4, 3}, {2, 2, 2}, ModelKind::tucker3, 8);
  FitTrace trace;
  IterationStats row;
  row.iteration = 0;
  row.objective = 12.5;
  trace.iterations.push_back(row);
  row.iteration = 1;
  row.objective = 3.25;
  row.millis = 2.0;
  trace.iterations.push_back(row);
  trace.converged = true;

  ConstraintConfig ccfg;
  ccfg.a.nonneg = true;
  ccfg.a.l1_eps = 0.05;
  FitConfig fcfg;
  fcfg.seed = 8;

  write_model_dir(tmp.path / "model", m, trace, fit_manifest(m, trace, ccfg, fcfg, "concmtf"));
  FactorModel back = read_model_dir(tmp.path / "model");
  CHECK(back.kind == ModelKind::tucker3);
  CHECK(back.a == m.a);
  CHECK(back.b == m.b);
  CHECK(back.c == m.c);
  CHECK(back.d == m.d);
  CHECK(back.core == m.core);

  auto manifest = read_json_file(tmp.path / "model" / "manifest.json");
  CHECK(manifest.at("kind") == "tucker3");
  CHECK(manifest.at("seed") == 8);
  CHECK(manifest.at("final_objective") == 3.25);
  CHECK(manifest.at("constraints").at("a").at("l1_eps") == 0.05);

  // Round-trip of the constraint config through JSON.
  ConstraintConfig cc_back = constraint_config_from_json(manifest.at("constraints"));
  CHECK(cc_back.a.nonneg);
  CHECK(cc_back.a.l1_eps == 0.05);
  CHECK(!cc_back.b.l1_eps);

  std::string trace_text = slurp(tmp.path / "model" / "trace.tsv");
  CHECK(trace_text.starts_with("iteration\tobjective\tmax_violation\tmillis\n"));
}

TEST_CASE("topic reports serialize words, profiles and metrics") {
  TempDir tmp;
  FactorModel m;
  m.kind = ModelKind::cp;
  m.a = Matrix::Zero(3, 2);
  m.a(0, 0) = 0.9;
  m.a(2, 1) = 0.7;
  m.b = Matrix::Ones(4, 2);
  m.c = Matrix::Ones(2, 2);
  m.d = Matrix::Ones(1, 2);
  m.core = superdiagonal_core(Vector::Ones(2), 2);

  TopicReport report = build_report(m, {"alpha", "beta", "gamma"});
  write_topic_report(tmp.path, report);

  auto j = read_json_file(tmp.path / "report.json");
  REQUIRE(j.at("components").size() == 2);
  CHECK(j.at("components")[0].at("words")[0].at("word") == "alpha");
  CHECK(j.at("components")[1].at("words")[0].at("word") == "gamma");
  CHECK(j.at("metrics").contains("core_density"));
  CHECK(fs::exists(tmp.path / "topic_0_words.tsv"));
  CHECK(fs::exists(tmp.path / "topic_1_time.tsv"));
  CHECK(fs::exists(tmp.path / "topic_1_difficulty.tsv"));
}
