#pragma once

#include <string>

#include "wsseg/graph.hpp"

namespace wsseg::objectives {

/// Background regularizer variants: EEM maximizes the entropy of the
/// background posterior directly, SEM matches it to the uniform surrogate.
enum class Variant { EEM, SEM };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

/// Point on the C-class probability simplex (C >= 2): components >= 0,
/// sum within 1e-4 of 1. Construction validates; the tensor stays in the
/// graph so objectives remain differentiable through it.
struct Probabilities {
  ad::Tensor p;  // [C]

  static Probabilities checked(const ad::Tensor& p, const std::string& context);
  std::size_t num_classes() const { return p.numel(); }
  std::size_t argmax() const;
};

Probabilities uniform(ad::Graph& g, std::size_t num_classes);
Probabilities one_hot(ad::Graph& g, std::size_t label, std::size_t num_classes);

struct ObjectiveConfig {
  Variant variant = Variant::SEM;
  double lambda = 1.0;  // weight of the background regularizer; 0 disables it
  double t = 1.0;       // barrier accuracy parameter, larger = weaker barrier
  std::size_t num_classes = 2;
  double omega_size = 0.0;  // |spatial domain|, set from the image by the pipeline

  void validate() const;
};

/// H(p) = -sum_c p_c log p_c, natural log, 0 log 0 := 0 (log clamped at
/// 1e-12). Differentiable.
ad::Tensor entropy(ad::Graph& g, const Probabilities& p);

/// H(p, p_hat) = -sum_c p_c log p_hat_c; differentiable with respect to
/// p_hat only (p enters as a constant).
ad::Tensor cross_entropy(ad::Graph& g, const Probabilities& p, const Probabilities& p_hat);

/// EEM: -H(p_bg). SEM: H(q, p_bg) with q uniform. Both enter the total
/// loss with weight +lambda and share the minimizer p_bg = q.
ad::Tensor background_regularizer(ad::Graph& g, const Probabilities& p_hat_bg,
                                  const ObjectiveConfig& cfg);

/// -(1/t) [log(s+/|O|) + log(s-/|O|)]. Sizes are normalized by the domain
/// size, which shifts the unnormalized form by a constant and leaves mask
/// gradients identical. s <= 0 is a hard error (mask-head bug), not a clamp.
ad::Tensor size_barrier(ad::Graph& g, const ad::Tensor& s_plus, const ad::Tensor& s_minus,
                        const ObjectiveConfig& cfg);

/// cross_entropy(p, p_fg) + lambda * regularizer(p_bg) + size_barrier.
ad::Tensor total_loss(ad::Graph& g, const Probabilities& p, const Probabilities& p_hat_fg,
                      const Probabilities& p_hat_bg, const ad::Tensor& s_plus,
                      const ad::Tensor& s_minus, const ObjectiveConfig& cfg);

}  // namespace wsseg::objectives
