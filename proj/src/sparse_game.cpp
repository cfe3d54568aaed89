#include "riskplan/sparse_game.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "riskplan/errors.hpp"

namespace riskplan {

std::string_view to_string(NormalizationScope scope) {
  return scope == NormalizationScope::kPerRow ? "per_row" : "global";
}

NormalizationScope normalization_scope_from_string(std::string_view label,
                                                   const std::string& field) {
  if (label == "global") return NormalizationScope::kGlobal;
  if (label == "per_row") return NormalizationScope::kPerRow;
  throw ValidationError(field, "expected 'global' or 'per_row', got '" + std::string(label) + "'");
}

std::size_t SparseGameGraph::active_count(std::size_t p) const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < agents(); ++k) {
    n += active(p, k) ? 1 : 0;
  }
  return n;
}

Grid<bool> select_top_m(const RiskMatrix& risk, std::size_t m) {
  if (m == 0) {
    throw std::invalid_argument("top_m must be >= 1");
  }
  const std::size_t agents = risk.agents();
  Grid<bool> mask(risk.plans(), agents, false);
  std::vector<std::size_t> order(agents);
  const std::size_t keep = std::min(m, agents);
  for (std::size_t p = 0; p < risk.plans(); ++p) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return risk.values(p, a) > risk.values(p, b);
    });
    for (std::size_t i = 0; i < keep; ++i) {
      mask(p, order[i]) = true;
    }
  }
  return mask;
}

namespace {

void normalize_block(const RiskMatrix& risk, const Grid<bool>& mask, std::size_t row_begin,
                     std::size_t row_end, Grid<double>& out) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t p = row_begin; p < row_end; ++p) {
    for (std::size_t k = 0; k < risk.agents(); ++k) {
      if (mask(p, k)) {
        lo = std::min(lo, risk.values(p, k));
        hi = std::max(hi, risk.values(p, k));
      }
    }
  }
  const double spread = hi - lo;
  for (std::size_t p = row_begin; p < row_end; ++p) {
    for (std::size_t k = 0; k < risk.agents(); ++k) {
      if (!mask(p, k)) {
        out(p, k) = 0.0;
      } else if (spread > 1e-12) {
        out(p, k) = std::clamp((risk.values(p, k) - lo) / spread, 0.0, 1.0);
      } else {
        out(p, k) = 0.0;
      }
    }
  }
}

}  // namespace

Grid<double> normalize_risk(const RiskMatrix& risk, const Grid<bool>& mask,
                            NormalizationScope scope) {
  if (mask.rows() != risk.plans() || mask.cols() != risk.agents()) {
    throw DimensionMismatch("mask shape does not match risk matrix");
  }
  Grid<double> out(risk.plans(), risk.agents(), 0.0);
  if (scope == NormalizationScope::kGlobal) {
    normalize_block(risk, mask, 0, risk.plans(), out);
  } else {
    for (std::size_t p = 0; p < risk.plans(); ++p) {
      normalize_block(risk, mask, p, p + 1, out);
    }
  }
  return out;
}

SparseGameGraph build_sparse_game_graph(const RiskMatrix& risk, std::size_t m,
                                        NormalizationScope scope) {
  SparseGameGraph graph;
  graph.top_m = m;
  graph.active = select_top_m(risk, m);
  graph.normalized = normalize_risk(risk, graph.active, scope);
  return graph;
}

}  // namespace riskplan
