#include "concmtf/baselines.hpp"

namespace concmtf {

ConstraintConfig parafac_ns_config() {
  ConstraintConfig cfg;
  cfg.a.nonneg = cfg.b.nonneg = cfg.c.nonneg = cfg.d.nonneg = true;
  cfg.coupling_weight = 0.0;
  return cfg;
}

ConstraintConfig tucker3_ns_config(std::optional<double> core_l1) {
  ConstraintConfig cfg = parafac_ns_config();
  cfg.core.nonneg = true;
  cfg.core.l1_eps = core_l1;
  return cfg;
}

std::pair<FactorModel, FitTrace> parafac_ns_fit(const Tensor3& t, Index rank,
                                                const FitConfig& fcfg) {
  if (rank < 1) throw ConfigError("parafac_ns_fit: rank must be >= 1");
  Matrix y(t.dim(0), 0);
  return fit(t, y, {rank, rank, rank}, ModelKind::cp, parafac_ns_config(), fcfg);
}

std::pair<FactorModel, FitTrace> tucker3_ns_fit(const Tensor3& t, std::array<Index, 3> ranks,
                                                std::optional<double> core_l1,
                                                const FitConfig& fcfg) {
  Matrix y(t.dim(0), 0);
  return fit(t, y, ranks, ModelKind::tucker3, tucker3_ns_config(core_l1), fcfg);
}

}  // namespace concmtf
