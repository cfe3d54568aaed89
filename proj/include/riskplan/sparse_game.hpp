#pragma once

#include <cstddef>
#include <string_view>

#include "riskplan/core_types.hpp"
#include "riskplan/risk.hpp"

namespace riskplan {

enum class NormalizationScope { kGlobal, kPerRow };

std::string_view to_string(NormalizationScope scope);
NormalizationScope normalization_scope_from_string(std::string_view label,
                                                   const std::string& field = "normalization_scope");

/// Per planning mode, the top-M agents by risk and their normalized risk.
struct SparseGameGraph {
  std::size_t top_m{4};
  Grid<bool> active;       // [p][k]
  Grid<double> normalized; // [p][k], zero where inactive

  std::size_t plans() const { return active.rows(); }
  std::size_t agents() const { return active.cols(); }
  std::size_t active_count(std::size_t p) const;
};

/// Keeps the `m` highest-risk agents of every row. Ties go to the lower agent
/// index. Throws std::invalid_argument for m == 0.
Grid<bool> select_top_m(const RiskMatrix& risk, std::size_t m);

/// Min-max normalization over the active entries (globally or per row).
/// A degenerate range (spread <= 1e-12) maps every active entry to 0.
Grid<double> normalize_risk(const RiskMatrix& risk, const Grid<bool>& mask,
                            NormalizationScope scope = NormalizationScope::kGlobal);

SparseGameGraph build_sparse_game_graph(const RiskMatrix& risk, std::size_t m,
                                        NormalizationScope scope = NormalizationScope::kGlobal);

}  // namespace riskplan
