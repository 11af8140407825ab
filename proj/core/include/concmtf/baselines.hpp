#pragma once

#include "concmtf/als.hpp"

namespace concmtf {

/// Non-negative PARAFAC comparator: the coupled engine run with kind CP,
/// lambda = 0, a zero-width coupled matrix and non-negativity only, so
/// differences against the constrained model are attributable to the
/// constraint system rather than solver internals.
std::pair<FactorModel, FitTrace> parafac_ns_fit(const Tensor3& t, Index rank,
                                                const FitConfig& fcfg);

/// Sparse non-negative Tucker3 comparator: Tucker3, lambda = 0,
/// non-negativity on factors and core, optional core L1 bound, no factor
/// sparsity or orthogonality.
std::pair<FactorModel, FitTrace> tucker3_ns_fit(const Tensor3& t, std::array<Index, 3> ranks,
                                                std::optional<double> core_l1,
                                                const FitConfig& fcfg);

/// The degenerate configs the baselines run with, exposed so callers can
/// reproduce a baseline through fit() directly.
ConstraintConfig parafac_ns_config();
ConstraintConfig tucker3_ns_config(std::optional<double> core_l1);

}  // namespace concmtf
