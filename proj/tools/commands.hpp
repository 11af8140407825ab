#pragma once

#include <optional>
#include <string>
#include <vector>

namespace concmtf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> rank;
  std::optional<int> max_iters;
  std::optional<double> eps_a, eps_b, eps_c, eps_d, eps_core;
  std::optional<double> lambda;
  std::optional<std::string> kind;
};

int cmd_build(const std::string& input, const std::string& output,
              const std::optional<std::string>& config_path);

int cmd_decompose(const std::string& tensor_path, const std::string& matrix_path,
                  const std::string& output, const std::optional<std::string>& config_path,
                  const CommonOverrides& over);

int cmd_topics(const std::string& model_dir, const std::string& vocab_path,
               const std::string& output, std::optional<double> density_tol);

int cmd_synth(const std::string& output, const std::optional<std::string>& config_path,
              const CommonOverrides& over);

int cmd_eval(const std::string& output, const std::optional<std::string>& config_path,
             const std::vector<std::string>& model_dirs,
             const std::optional<std::string>& instance_dir);

}  // namespace concmtf::cli
