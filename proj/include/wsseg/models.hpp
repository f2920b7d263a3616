#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsseg/masking.hpp"
#include "wsseg/objectives.hpp"
#include "wsseg/rng.hpp"

namespace wsseg::models {

struct ConvLayer {
  ad::Tensor w;  // [K,C,kh,kw]
  ad::Tensor b;  // [K]
  int stride = 1;
  int pad = 1;
};

/// Convolutional encoder-decoder producing a 1-channel sigmoid mask with
/// the input's spatial shape. Three stride-2 stages down, three
/// upsample+conv stages up; the head bias starts at 0 so initial masks sit
/// near 0.5 everywhere.
struct LocalizerParams {
  int in_channels = 1;
  std::array<int, 3> widths = {8, 16, 32};
  ConvLayer enc1, enc2, enc3;
  ConvLayer dec1, dec2, dec3;  // dec3 is the 1-channel mask head

  std::vector<ad::Tensor> parameters() const;
  std::vector<std::pair<std::string, ad::Tensor>> named_parameters() const;
  std::size_t parameter_count() const;
};

/// Three stride-2 conv stages, global average pooling, one dense layer to
/// C logits. The same parameters serve the foreground and background pass.
struct ClassifierParams {
  int in_channels = 1;
  int num_classes = 2;
  std::array<int, 3> widths = {8, 16, 32};
  ConvLayer conv1, conv2, conv3;
  ad::Tensor fc_w;  // [widths[2], num_classes]
  ad::Tensor fc_b;  // [num_classes]

  std::vector<ad::Tensor> parameters() const;
  std::vector<std::pair<std::string, ad::Tensor>> named_parameters() const;
  std::size_t parameter_count() const;
};

LocalizerParams make_localizer(int in_channels, std::array<int, 3> widths, Rng& rng);
ClassifierParams make_classifier(int in_channels, int num_classes, std::array<int, 3> widths,
                                 Rng& rng);

/// Everything the objective needs, produced on one graph so backward
/// reaches both networks.
struct ForwardResult {
  masking::Mask mask;
  objectives::Probabilities p_hat_fg;
  objectives::Probabilities p_hat_bg;
  ad::Tensor s_plus;
  ad::Tensor s_minus;
  // Loss and its terms; defined only when a label was supplied.
  ad::Tensor loss;
  ad::Tensor ce;
  ad::Tensor regularizer;
  ad::Tensor barrier;
  bool has_loss = false;
};

/// x: [C,H,W] with H, W divisible by 8 (three stride-2 stages).
masking::Mask localize(ad::Graph& g, const ad::Tensor& x, const LocalizerParams& params);

objectives::Probabilities classify(ad::Graph& g, const ad::Tensor& x,
                                   const ClassifierParams& params);

/// m+ = localize(x); p_fg = classify(x . m+); p_bg = classify(x . (1-m+));
/// sizes from the soft masks; loss assembled when a label is present.
ForwardResult forward_pipeline(ad::Graph& g, const ad::Tensor& x, std::optional<int> label,
                               const LocalizerParams& loc, const ClassifierParams& cls,
                               objectives::ObjectiveConfig cfg);

}  // namespace wsseg::models
