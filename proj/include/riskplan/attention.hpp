#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskplan/sparse_game.hpp"

namespace riskplan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { kRelu, kTanh, kIdentity };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view label, const std::string& field = "activation");
double activate(Activation activation, double x);

/// Numerically stable softmax. Entries equal to -inf are masked and receive
/// probability 0; an all-masked input yields the zero vector.
std::vector<double> softmax_row(std::span<const double> logits);

/// Two affine maps with an activation in between: in -> hidden -> out.
struct FeedForward {
  Matrix w1;  // in x hidden
  Vector b1;
  Matrix w2;  // hidden x out
  Vector b2;
  Activation activation{Activation::kRelu};

  RowVector apply(const RowVector& x) const;
};

struct LayerNormParams {
  Vector scale;
  Vector shift;
  double eps{1e-5};
};

/// (x - mean) / sqrt(var + eps) * scale + shift, population variance.
RowVector layer_norm(const RowVector& x, const LayerNormParams& params);

/// Single-head projection weights plus the post-aggregation LayerNorm and FFN.
/// `beta` scales the normalized risk added to the logits.
struct AttentionWeights {
  Matrix w_q;  // D_in x d_k
  Matrix w_k;
  Matrix w_v;
  FeedForward ffn;
  LayerNormParams norm;
  double beta{2.0};

  Eigen::Index input_dim() const { return w_q.rows(); }
  Eigen::Index key_dim() const { return w_q.cols(); }
  /// Throws DimensionMismatch on inconsistent shapes.
  void validate() const;
};

struct TokenSet {
  Matrix plan_queries;  // P x D_in
  Matrix agent_tokens;  // K x D_in
};

struct AttentionResult {
  Matrix logits;      // P x K, -inf where masked
  Matrix weights;     // P x K attention distribution
  Matrix aggregated;  // P x d_k, weighted value sum
  Matrix refined;     // P x d_k, FFN(LayerNorm(aggregated))
};

/// q.k / sqrt(d_k) + beta * normalized risk for active pairs, -inf otherwise.
Matrix attention_logits(const TokenSet& tokens, const SparseGameGraph& graph,
                        const AttentionWeights& weights);

/// Risk-biased sparse cross-attention from plan queries to agent tokens.
AttentionResult risk_biased_attention(const TokenSet& tokens, const SparseGameGraph& graph,
                                      const AttentionWeights& weights);

}  // namespace riskplan
