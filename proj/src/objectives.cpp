#include "wsseg/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace wsseg::objectives {

Variant variant_from_string(const std::string& s) {
  if (s == "eem" || s == "EEM") return Variant::EEM;
  if (s == "sem" || s == "SEM") return Variant::SEM;
  throw std::invalid_argument("unknown regularizer variant '" + s + "' (valid: eem, sem)");
}

std::string to_string(Variant v) { return v == Variant::EEM ? "eem" : "sem"; }

Probabilities Probabilities::checked(const ad::Tensor& p, const std::string& context) {
  if (p.rank() != 1 || p.numel() < 2) {
    throw std::invalid_argument(context + ": probabilities must be a 1-D tensor with C >= 2, got " +
                                ad::shape_str(p.shape()));
  }
  double sum = 0.0;
  for (double v : p.values()) {
    if (v < -1e-12 || !std::isfinite(v)) {
      throw std::invalid_argument(context + ": probability component " + std::to_string(v) +
                                  " outside the simplex");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-4) {
    throw std::invalid_argument(context + ": probabilities sum to " + std::to_string(sum) +
                                ", expected 1");
  }
  return Probabilities{p};
}

std::size_t Probabilities::argmax() const {
  const auto& v = p.values();
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Probabilities uniform(ad::Graph&, std::size_t num_classes) {
  if (num_classes < 2) throw std::invalid_argument("uniform distribution needs C >= 2");
  return Probabilities{ad::Tensor::full({num_classes}, 1.0 / static_cast<double>(num_classes))};
}

Probabilities one_hot(ad::Graph&, std::size_t label, std::size_t num_classes) {
  if (num_classes < 2) throw std::invalid_argument("one_hot needs C >= 2");
  if (label >= num_classes) {
    throw std::invalid_argument("label " + std::to_string(label) + " out of range for " +
                                std::to_string(num_classes) + " classes");
  }
  ad::Tensor t = ad::Tensor::zeros({num_classes});
  t.values()[label] = 1.0;
  return Probabilities{t};
}

void ObjectiveConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!(t > 0.0)) throw std::invalid_argument("barrier parameter t must be > 0");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (!(omega_size > 0.0)) throw std::invalid_argument("omega_size must be > 0");
}

namespace {
constexpr double kLogEps = 1e-12;
}

ad::Tensor entropy(ad::Graph& g, const Probabilities& p) {
  Probabilities::checked(p.p, "entropy");
  ad::Tensor plogp = g.mul(p.p, g.log_clamped(p.p, kLogEps));
  return g.scalar_mul(g.sum(plogp), -1.0);
}

ad::Tensor cross_entropy(ad::Graph& g, const Probabilities& p, const Probabilities& p_hat) {
  Probabilities::checked(p.p, "cross_entropy target");
  Probabilities::checked(p_hat.p, "cross_entropy prediction");
  if (p.p.numel() != p_hat.p.numel()) {
    throw std::invalid_argument("cross_entropy dimension mismatch: " +
                                ad::shape_str(p.p.shape()) + " vs " +
                                ad::shape_str(p_hat.p.shape()));
  }
  // The target enters as a constant so gradients flow to p_hat only.
  ad::Tensor target = ad::Tensor::from(p.p.shape(), p.p.values());
  ad::Tensor weighted = g.mul(target, g.log_clamped(p_hat.p, kLogEps));
  return g.scalar_mul(g.sum(weighted), -1.0);
}

ad::Tensor background_regularizer(ad::Graph& g, const Probabilities& p_hat_bg,
                                  const ObjectiveConfig& cfg) {
  switch (cfg.variant) {
    case Variant::EEM:
      return g.scalar_mul(entropy(g, p_hat_bg), -1.0);
    case Variant::SEM:
      return cross_entropy(g, uniform(g, p_hat_bg.num_classes()), p_hat_bg);
  }
  throw std::invalid_argument("unknown regularizer variant");
}

ad::Tensor size_barrier(ad::Graph& g, const ad::Tensor& s_plus, const ad::Tensor& s_minus,
                        const ObjectiveConfig& cfg) {
  cfg.validate();
  if (s_plus.numel() != 1 || s_minus.numel() != 1) {
    throw std::invalid_argument("size_barrier expects scalar sizes");
  }
  if (!(s_plus.value() > 0.0) || !(s_minus.value() > 0.0)) {
    throw std::invalid_argument("size constraint violated: s+ = " +
                                std::to_string(s_plus.value()) + ", s- = " +
                                std::to_string(s_minus.value()) +
                                " (sizes must be strictly positive; mask head bug?)");
  }
  const double inv_omega = 1.0 / cfg.omega_size;
  ad::Tensor log_p = g.log(g.scalar_mul(s_plus, inv_omega));
  ad::Tensor log_m = g.log(g.scalar_mul(s_minus, inv_omega));
  return g.scalar_mul(g.add(log_p, log_m), -1.0 / cfg.t);
}

ad::Tensor total_loss(ad::Graph& g, const Probabilities& p, const Probabilities& p_hat_fg,
                      const Probabilities& p_hat_bg, const ad::Tensor& s_plus,
                      const ad::Tensor& s_minus, const ObjectiveConfig& cfg) {
  cfg.validate();
  ad::Tensor ce = cross_entropy(g, p, p_hat_fg);
  ad::Tensor reg = background_regularizer(g, p_hat_bg, cfg);
  ad::Tensor barrier = size_barrier(g, s_plus, s_minus, cfg);
  return g.add(g.add(ce, g.scalar_mul(reg, cfg.lambda)), barrier);
}

}  // namespace wsseg::objectives
