#include "riskplan/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "riskplan/errors.hpp"

namespace riskplan {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_square(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw DimensionMismatch(std::string(name) + " is " + shape(m) + ", expected " +
                            std::to_string(n) + "x" + std::to_string(n));
  }
}

}  // namespace

Matrix self_attention(const Matrix& x, const Matrix& w_q, const Matrix& w_k, const Matrix& w_v) {
  const Matrix q = x * w_q;
  const Matrix k = x * w_k;
  const Matrix v = x * w_v;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w_k.cols()));
  Matrix out = Matrix::Zero(x.rows(), v.cols());
  std::vector<double> row(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      row[static_cast<std::size_t>(j)] = q.row(i).dot(k.row(j)) * scale;
    }
    const auto probs = softmax_row(row);
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      out.row(i) += probs[static_cast<std::size_t>(j)] * v.row(j);
    }
  }
  return out;
}

RtaOutput rta_gate(const EmbeddingSet& embeddings, const RtaWeights& weights) {
  const Matrix& map = embeddings.map_embeddings;
  const Matrix& det = embeddings.det_embeddings;
  if (map.rows() == 0) {
    throw EmptyMap("map gating needs at least one map embedding");
  }
  const Eigen::Index c = map.cols();
  if (det.rows() > 0 && det.cols() != c) {
    throw DimensionMismatch("detection embeddings are " + shape(det) + " but map width is " +
                            std::to_string(c));
  }
  require_square(weights.w_q, c, "rta.w_q");
  require_square(weights.w_k, c, "rta.w_k");
  require_square(weights.w_v, c, "rta.w_v");
  require_square(weights.w_mod, c, "rta.w_mod");
  if (weights.gate_bias.size() != c || weights.b_mod.size() != c) {
    throw DimensionMismatch("rta gate_bias and b_mod must have size " + std::to_string(c));
  }

  RtaOutput out;
  out.scene_embedding = map.colwise().mean();
  const Matrix augmented = map.rowwise() + out.scene_embedding;
  const Matrix attended = self_attention(augmented, weights.w_q, weights.w_k, weights.w_v);
  const RowVector pooled = attended.colwise().mean();
  out.gate.resize(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    out.gate(j) = sigmoid(pooled(j) + weights.gate_bias(j));
  }

  out.modulation = Matrix::Zero(det.rows(), c);
  out.gated_det = det;
  for (Eigen::Index i = 0; i < det.rows(); ++i) {
    const RowVector pre = det.row(i) * weights.w_mod + weights.b_mod.transpose();
    for (Eigen::Index j = 0; j < c; ++j) {
      out.modulation(i, j) = activate(weights.mod_activation, pre(j));
      out.gated_det(i, j) = det(i, j) + out.gate(j) * out.modulation(i, j);
    }
  }
  return out;
}

Matrix SceneContext::sequence() const {
  const Eigen::Index d = ego_token.cols();
  Matrix seq(ego_token.rows() + det_tokens.rows() + map_tokens.rows(), d);
  Eigen::Index r = 0;
  for (const Matrix* part : {&ego_token, &det_tokens, &map_tokens}) {
    if (part->rows() == 0) {
      continue;
    }
    if (part->cols() != d) {
      throw DimensionMismatch("scene context tokens must share width " + std::to_string(d));
    }
    seq.middleRows(r, part->rows()) = *part;
    r += part->rows();
  }
  return seq;
}

Matrix select_top_tokens(const Matrix& tokens, std::span<const double> scores, std::size_t k) {
  if (static_cast<std::size_t>(tokens.rows()) != scores.size()) {
    throw DimensionMismatch("one score per token row is required");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const std::size_t keep = std::min(k, order.size());
  Matrix out(static_cast<Eigen::Index>(keep), tokens.cols());
  for (std::size_t i = 0; i < keep; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = tokens.row(static_cast<Eigen::Index>(order[i]));
  }
  return out;
}

std::vector<Trajectory> spa_refine(std::span<const Trajectory> templates,
                                   const SceneContext& context, const SpaWeights& weights) {
  if (context.ego_token.rows() != 1) {
    throw DimensionMismatch("scene context needs exactly one ego token");
  }
  const Matrix seq = context.sequence();
  const Eigen::Index d = seq.cols();
  for (const auto& [m, name] : {std::pair{&weights.ctx_q, "spa.ctx_q"}, {&weights.ctx_k, "spa.ctx_k"},
                                {&weights.ctx_v, "spa.ctx_v"}, {&weights.cross_q, "spa.cross_q"},
                                {&weights.cross_k, "spa.cross_k"}, {&weights.cross_v, "spa.cross_v"}}) {
    require_square(*m, d, name);
  }
  const Eigen::Index flat = weights.template_proj.rows();
  if (weights.template_proj.cols() != d || weights.template_bias.size() != d ||
      weights.decoder.rows() != d || weights.decoder.cols() != flat ||
      weights.decoder_bias.size() != flat) {
    throw DimensionMismatch("spa projection/decoder shapes inconsistent with context width " +
                            std::to_string(d));
  }

  const Matrix attended = self_attention(seq, weights.ctx_q, weights.ctx_k, weights.ctx_v);
  const Matrix keys = attended * weights.cross_k;
  const Matrix values = attended * weights.cross_v;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<Trajectory> out;
  out.reserve(templates.size());
  std::vector<double> logits(static_cast<std::size_t>(keys.rows()));
  for (std::size_t p = 0; p < templates.size(); ++p) {
    const Trajectory& tmpl = templates[p];
    if (static_cast<Eigen::Index>(2 * tmpl.size()) != flat) {
      throw DimensionMismatch("template " + std::to_string(p) + " has " +
                              std::to_string(tmpl.size()) + " samples but projection expects " +
                              std::to_string(flat / 2));
    }
    RowVector x(flat);
    for (std::size_t t = 0; t < tmpl.size(); ++t) {
      x(static_cast<Eigen::Index>(2 * t)) = tmpl[t].pose.x;
      x(static_cast<Eigen::Index>(2 * t + 1)) = tmpl[t].pose.y;
    }
    const RowVector query =
        (x * weights.template_proj + weights.template_bias.transpose()) * weights.cross_q;
    for (Eigen::Index j = 0; j < keys.rows(); ++j) {
      logits[static_cast<std::size_t>(j)] = query.dot(keys.row(j)) * scale;
    }
    const auto probs = softmax_row(logits);
    RowVector mixed = RowVector::Zero(d);
    for (Eigen::Index j = 0; j < keys.rows(); ++j) {
      mixed += probs[static_cast<std::size_t>(j)] * values.row(j);
    }
    const RowVector offsets = mixed * weights.decoder + weights.decoder_bias.transpose();

    Trajectory refined = tmpl;
    const std::size_t n = tmpl.size();
    for (std::size_t t = 0; t < n; ++t) {
      auto& s = refined.samples[t];
      s.pose.x += offsets(static_cast<Eigen::Index>(2 * t));
      s.pose.y += offsets(static_cast<Eigen::Index>(2 * t + 1));
      if (n >= 2) {
        const std::size_t j = std::min(t, n - 2);
        const auto e = static_cast<Eigen::Index>(2 * j);
        s.velocity.vx += (offsets(e + 2) - offsets(e)) / tmpl.dt;
        s.velocity.vy += (offsets(e + 3) - offsets(e + 1)) / tmpl.dt;
      }
    }
    out.push_back(std::move(refined));
  }
  return out;
}

}  // namespace riskplan
