#pragma once

#include "concmtf/als.hpp"
#include "concmtf/corpus.hpp"
#include "concmtf/topics.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace concmtf {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; files written with it re-read to the
/// exact same double.
std::string format_double(double v);

// --- tensor and matrix interchange files (UTF-8, LF, TSV) ---
// Tensor: header "#tensor3 I J K", then "i<TAB>j<TAB>k<TAB>value" rows,
// 0-based, canonical entry order. Matrix: header "#matrix R C", then R rows
// of C tab-separated values.

void write_coo_tensor(const std::filesystem::path& path, const CooTensor& t);
CooTensor read_coo_tensor(const std::filesystem::path& path);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

// --- vocabulary and tag tables ---

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocab(const std::filesystem::path& path);

void write_tags(const std::filesystem::path& path, const std::vector<std::string>& tags,
                const std::vector<std::int64_t>& counts);
std::vector<std::string> read_tags(const std::filesystem::path& path);

// --- post logs: JSON lines with fields user, ts, tokens, tags ---

struct JsonlReadResult {
  std::vector<PostRecord> posts;
  std::vector<std::pair<std::size_t, std::string>> errors;  // (1-based line, message)
  std::size_t total_lines = 0;
};

JsonlReadResult read_posts_jsonl(const std::filesystem::path& path);

// --- fit outputs ---

/// TSV with columns iteration, objective, max_violation, millis.
void write_trace(const std::filesystem::path& path, const FitTrace& trace);

nlohmann::json constraint_config_json(const ConstraintConfig& cfg);
ConstraintConfig constraint_config_from_json(const nlohmann::json& j);

/// Manifest with ranks, kind, constraint config, seed, iterations, final
/// objective and max feasibility violation; `method` tags baseline runs.
nlohmann::json fit_manifest(const FactorModel& model, const FitTrace& trace,
                            const ConstraintConfig& ccfg, const FitConfig& fcfg,
                            const std::string& method);

/// Writes a.tsv, b.tsv, c.tsv, d.tsv, core.tsv, trace.tsv and manifest.json
/// into dir (created if missing).
void write_model_dir(const std::filesystem::path& dir, const FactorModel& model,
                     const FitTrace& trace, const nlohmann::json& manifest);

FactorModel read_model_dir(const std::filesystem::path& dir);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

// --- topic reports ---

nlohmann::json topic_report_json(const TopicReport& report);

/// report.json plus per-component plot TSVs (words, time, difficulty).
void write_topic_report(const std::filesystem::path& dir, const TopicReport& report);

}  // namespace concmtf
