#pragma once

#include <span>
#include <vector>

#include "riskplan/attention.hpp"
#include "riskplan/core_types.hpp"

namespace riskplan {

/// Map and detection embeddings, one instance per row.
struct EmbeddingSet {
  Matrix map_embeddings;  // N_map x C
  Matrix det_embeddings;  // N_det x C
};

/// Weights for map-to-detection gating. The map self-attention works in the
/// embedding width C; the modulation is a per-row affine map (a kernel-size-1
/// convolution) followed by an activation.
struct RtaWeights {
  Matrix w_q;  // C x C
  Matrix w_k;
  Matrix w_v;
  Vector gate_bias;  // C, added before the sigmoid
  Matrix w_mod;      // C x C
  Vector b_mod;      // C
  Activation mod_activation{Activation::kRelu};
};

struct RtaOutput {
  RowVector scene_embedding;  // column mean of the map embeddings
  RowVector gate;             // in [0, 1]
  Matrix modulation;          // N_det x C
  Matrix gated_det;           // det + gate * modulation, row-broadcast
};

/// Injects pooled map context into detection embeddings. Map embeddings are
/// read only. Throws EmptyMap when there are no map rows and DimensionMismatch
/// on inconsistent widths.
RtaOutput rta_gate(const EmbeddingSet& embeddings, const RtaWeights& weights);

/// softmax(X Wq (X Wk)^T / sqrt(d)) X Wv with d = Wk.cols().
Matrix self_attention(const Matrix& x, const Matrix& w_q, const Matrix& w_k, const Matrix& w_v);

/// Ego, detection and map tokens that together form the scene sequence.
struct SceneContext {
  Matrix ego_token;   // 1 x D
  Matrix det_tokens;  // K_sel x D
  Matrix map_tokens;  // K'_sel x D

  /// Rows stacked as [ego; det; map].
  Matrix sequence() const;
};

/// Rows of `tokens` ordered by descending score (stable), truncated to `k`.
Matrix select_top_tokens(const Matrix& tokens, std::span<const double> scores, std::size_t k);

/// Template refinement weights for horizon T and context width D.
struct SpaWeights {
  Matrix template_proj;  // 2T x D, applied to [x0, y0, x1, y1, ...]
  Vector template_bias;  // D
  Matrix ctx_q;          // D x D, context self-attention
  Matrix ctx_k;
  Matrix ctx_v;
  Matrix cross_q;  // D x D, template-to-context cross-attention
  Matrix cross_k;
  Matrix cross_v;
  Matrix decoder;        // D x 2T, position offsets
  Vector decoder_bias;   // 2T
};

/// Refines each template by cross-attending to the self-attended scene
/// sequence and adding the decoded position offsets back onto the template.
/// Velocities receive the finite difference of the offsets; headings are kept.
std::vector<Trajectory> spa_refine(std::span<const Trajectory> templates,
                                   const SceneContext& context, const SpaWeights& weights);

}  // namespace riskplan
