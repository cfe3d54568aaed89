#include "riskplan/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riskplan/errors.hpp"

namespace riskplan {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "relu";
}

Activation activation_from_string(std::string_view label, const std::string& field) {
  if (label == "relu") return Activation::kRelu;
  if (label == "tanh") return Activation::kTanh;
  if (label == "identity") return Activation::kIdentity;
  throw ValidationError(field, "unknown activation '" + std::string(label) + "'");
}

double activate(Activation activation, double x) {
  switch (activation) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

std::vector<double> softmax_row(std::span<const double> logits) {
  std::vector<double> out(logits.size(), 0.0);
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (v != -std::numeric_limits<double>::infinity()) {
      peak = std::max(peak, v);
    }
  }
  if (peak == -std::numeric_limits<double>::infinity()) {
    return out;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] != -std::numeric_limits<double>::infinity()) {
      out[i] = std::exp(logits[i] - peak);
      total += out[i];
    }
  }
  for (double& v : out) {
    v /= total;
  }
  return out;
}

RowVector FeedForward::apply(const RowVector& x) const {
  RowVector hidden = x * w1 + b1.transpose();
  for (Eigen::Index i = 0; i < hidden.size(); ++i) {
    hidden(i) = activate(activation, hidden(i));
  }
  return hidden * w2 + b2.transpose();
}

RowVector layer_norm(const RowVector& x, const LayerNormParams& params) {
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  const double inv = 1.0 / std::sqrt(var + params.eps);
  RowVector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out(i) = (x(i) - mean) * inv * params.scale(i) + params.shift(i);
  }
  return out;
}

void AttentionWeights::validate() const {
  const auto d_in = w_q.rows();
  const auto d_k = w_q.cols();
  if (d_k < 1) {
    throw DimensionMismatch("attention key dimension must be >= 1");
  }
  if (w_k.rows() != d_in || w_v.rows() != d_in || w_k.cols() != d_k || w_v.cols() != d_k) {
    throw DimensionMismatch("w_q, w_k and w_v must share shape " + std::to_string(d_in) + "x" +
                            std::to_string(d_k));
  }
  if (ffn.w1.rows() != d_k || ffn.b1.size() != ffn.w1.cols() || ffn.w2.rows() != ffn.w1.cols() ||
      ffn.w2.cols() != d_k || ffn.b2.size() != d_k) {
    throw DimensionMismatch("ffn shapes must map d_k -> hidden -> d_k");
  }
  if (norm.scale.size() != d_k || norm.shift.size() != d_k) {
    throw DimensionMismatch("layer norm scale/shift must have size d_k");
  }
  if (!std::isfinite(beta)) {
    throw DimensionMismatch("beta must be finite");
  }
}

namespace {

void check_shapes(const TokenSet& tokens, const SparseGameGraph& graph,
                  const AttentionWeights& weights) {
  weights.validate();
  const auto plans = static_cast<std::size_t>(tokens.plan_queries.rows());
  const auto agents = static_cast<std::size_t>(tokens.agent_tokens.rows());
  if (tokens.plan_queries.cols() != weights.input_dim() ||
      (agents > 0 && tokens.agent_tokens.cols() != weights.input_dim())) {
    throw DimensionMismatch("token width does not match attention input dimension " +
                            std::to_string(weights.input_dim()));
  }
  if (graph.plans() != plans || graph.agents() != agents ||
      graph.normalized.rows() != plans || graph.normalized.cols() != agents) {
    throw DimensionMismatch("sparse game graph is " + std::to_string(graph.plans()) + "x" +
                            std::to_string(graph.agents()) + " but tokens are " +
                            std::to_string(plans) + "x" + std::to_string(agents));
  }
}

Matrix logits_unchecked(const TokenSet& tokens, const SparseGameGraph& graph,
                        const AttentionWeights& weights) {
  const Eigen::Index plans = tokens.plan_queries.rows();
  const Eigen::Index agents = tokens.agent_tokens.rows();
  Matrix logits = Matrix::Constant(plans, agents, -std::numeric_limits<double>::infinity());
  if (agents == 0) {
    return logits;
  }
  const Matrix q = tokens.plan_queries * weights.w_q;
  const Matrix k = tokens.agent_tokens * weights.w_k;
  const double scale = 1.0 / std::sqrt(static_cast<double>(weights.key_dim()));
  for (Eigen::Index p = 0; p < plans; ++p) {
    for (Eigen::Index a = 0; a < agents; ++a) {
      const auto pu = static_cast<std::size_t>(p);
      const auto au = static_cast<std::size_t>(a);
      if (graph.active(pu, au)) {
        logits(p, a) = q.row(p).dot(k.row(a)) * scale + weights.beta * graph.normalized(pu, au);
      }
    }
  }
  return logits;
}

}  // namespace

Matrix attention_logits(const TokenSet& tokens, const SparseGameGraph& graph,
                        const AttentionWeights& weights) {
  check_shapes(tokens, graph, weights);
  return logits_unchecked(tokens, graph, weights);
}

AttentionResult risk_biased_attention(const TokenSet& tokens, const SparseGameGraph& graph,
                                      const AttentionWeights& weights) {
  check_shapes(tokens, graph, weights);
  AttentionResult out;
  out.logits = logits_unchecked(tokens, graph, weights);
  const Eigen::Index plans = tokens.plan_queries.rows();
  const Eigen::Index agents = tokens.agent_tokens.rows();
  const Eigen::Index d_k = weights.key_dim();
  const Matrix v = agents > 0 ? Matrix(tokens.agent_tokens * weights.w_v) : Matrix(0, d_k);

  out.weights = Matrix::Zero(plans, agents);
  out.aggregated = Matrix::Zero(plans, d_k);
  out.refined = Matrix::Zero(plans, d_k);
  std::vector<double> row(static_cast<std::size_t>(agents));
  for (Eigen::Index p = 0; p < plans; ++p) {
    for (Eigen::Index a = 0; a < agents; ++a) {
      row[static_cast<std::size_t>(a)] = out.logits(p, a);
    }
    const std::vector<double> probs = softmax_row(row);
    for (Eigen::Index a = 0; a < agents; ++a) {
      const double w = probs[static_cast<std::size_t>(a)];
      out.weights(p, a) = w;
      if (w != 0.0) {
        out.aggregated.row(p) += w * v.row(a);
      }
    }
    out.refined.row(p) = weights.ffn.apply(layer_norm(out.aggregated.row(p), weights.norm));
  }
  return out;
}

}  // namespace riskplan
