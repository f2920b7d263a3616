#include "wsseg/models.hpp"

#include <cmath>
#include <stdexcept>

namespace wsseg::models {

namespace {

ConvLayer make_conv(int out_ch, int in_ch, int kh, int kw, int stride, int pad, Rng& rng) {
  ConvLayer layer;
  layer.stride = stride;
  layer.pad = pad;
  const std::size_t n = static_cast<std::size_t>(out_ch) * in_ch * kh * kw;
  std::vector<double> w(n);
  const double scale = std::sqrt(2.0 / (static_cast<double>(in_ch) * kh * kw));
  for (double& v : w) v = scale * rng.normal();
  layer.w = ad::Tensor::from({static_cast<std::size_t>(out_ch), static_cast<std::size_t>(in_ch),
                              static_cast<std::size_t>(kh), static_cast<std::size_t>(kw)},
                             std::move(w), /*requires_grad=*/true);
  layer.b = ad::Tensor::zeros({static_cast<std::size_t>(out_ch)}, /*requires_grad=*/true);
  return layer;
}

std::size_t count(const std::vector<ad::Tensor>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

void require_image(const char* who, const ad::Tensor& x, int in_channels) {
  if (x.rank() != 3) {
    throw std::invalid_argument(std::string(who) + " expects a [C,H,W] image, got shape " +
                                ad::shape_str(x.shape()));
  }
  if (static_cast<int>(x.shape()[0]) != in_channels) {
    throw std::invalid_argument(std::string(who) + " expects " + std::to_string(in_channels) +
                                " input channels, got shape " + ad::shape_str(x.shape()));
  }
}

}  // namespace

std::vector<ad::Tensor> LocalizerParams::parameters() const {
  return {enc1.w, enc1.b, enc2.w, enc2.b, enc3.w, enc3.b,
          dec1.w, dec1.b, dec2.w, dec2.b, dec3.w, dec3.b};
}

std::vector<std::pair<std::string, ad::Tensor>> LocalizerParams::named_parameters() const {
  return {{"enc1.w", enc1.w}, {"enc1.b", enc1.b}, {"enc2.w", enc2.w}, {"enc2.b", enc2.b},
          {"enc3.w", enc3.w}, {"enc3.b", enc3.b}, {"dec1.w", dec1.w}, {"dec1.b", dec1.b},
          {"dec2.w", dec2.w}, {"dec2.b", dec2.b}, {"dec3.w", dec3.w}, {"dec3.b", dec3.b}};
}

std::size_t LocalizerParams::parameter_count() const { return count(parameters()); }

std::vector<ad::Tensor> ClassifierParams::parameters() const {
  return {conv1.w, conv1.b, conv2.w, conv2.b, conv3.w, conv3.b, fc_w, fc_b};
}

std::vector<std::pair<std::string, ad::Tensor>> ClassifierParams::named_parameters() const {
  return {{"conv1.w", conv1.w}, {"conv1.b", conv1.b}, {"conv2.w", conv2.w}, {"conv2.b", conv2.b},
          {"conv3.w", conv3.w}, {"conv3.b", conv3.b}, {"fc.w", fc_w},       {"fc.b", fc_b}};
}

std::size_t ClassifierParams::parameter_count() const { return count(parameters()); }

LocalizerParams make_localizer(int in_channels, std::array<int, 3> widths, Rng& rng) {
  if (in_channels < 1) throw std::invalid_argument("localizer needs >= 1 input channel");
  LocalizerParams p;
  p.in_channels = in_channels;
  p.widths = widths;
  p.enc1 = make_conv(widths[0], in_channels, 3, 3, 2, 1, rng);
  p.enc2 = make_conv(widths[1], widths[0], 3, 3, 2, 1, rng);
  p.enc3 = make_conv(widths[2], widths[1], 3, 3, 2, 1, rng);
  p.dec1 = make_conv(widths[1], widths[2], 3, 3, 1, 1, rng);
  p.dec2 = make_conv(widths[0], widths[1], 3, 3, 1, 1, rng);
  // 1-channel mask head; zero bias keeps initial masks near 0.5.
  p.dec3 = make_conv(1, widths[0], 3, 3, 1, 1, rng);
  return p;
}

ClassifierParams make_classifier(int in_channels, int num_classes, std::array<int, 3> widths,
                                 Rng& rng) {
  if (num_classes < 2) throw std::invalid_argument("classifier needs >= 2 classes");
  ClassifierParams p;
  p.in_channels = in_channels;
  p.num_classes = num_classes;
  p.widths = widths;
  p.conv1 = make_conv(widths[0], in_channels, 3, 3, 2, 1, rng);
  p.conv2 = make_conv(widths[1], widths[0], 3, 3, 2, 1, rng);
  p.conv3 = make_conv(widths[2], widths[1], 3, 3, 2, 1, rng);
  const double scale = std::sqrt(1.0 / widths[2]);
  std::vector<double> w(static_cast<std::size_t>(widths[2]) * num_classes);
  for (double& v : w) v = scale * rng.normal();
  p.fc_w = ad::Tensor::from({static_cast<std::size_t>(widths[2]),
                             static_cast<std::size_t>(num_classes)},
                            std::move(w), /*requires_grad=*/true);
  p.fc_b = ad::Tensor::zeros({static_cast<std::size_t>(num_classes)}, /*requires_grad=*/true);
  return p;
}

masking::Mask localize(ad::Graph& g, const ad::Tensor& x, const LocalizerParams& params) {
  require_image("localize", x, params.in_channels);
  const std::size_t h = x.shape()[1], w = x.shape()[2];
  if (h % 8 != 0 || w % 8 != 0) {
    throw std::invalid_argument("localize: spatial dims " + ad::shape_str(x.shape()) +
                                " must be divisible by 8 (three stride-2 stages); pad the input");
  }
  ad::Tensor t = g.reshape(x, {1, x.shape()[0], h, w});
  t = g.relu(g.conv2d(t, params.enc1.w, params.enc1.b, params.enc1.stride, params.enc1.pad));
  t = g.relu(g.conv2d(t, params.enc2.w, params.enc2.b, params.enc2.stride, params.enc2.pad));
  t = g.relu(g.conv2d(t, params.enc3.w, params.enc3.b, params.enc3.stride, params.enc3.pad));
  t = g.relu(g.conv2d(g.upsample2x(t), params.dec1.w, params.dec1.b, 1, params.dec1.pad));
  t = g.relu(g.conv2d(g.upsample2x(t), params.dec2.w, params.dec2.b, 1, params.dec2.pad));
  t = g.conv2d(g.upsample2x(t), params.dec3.w, params.dec3.b, 1, params.dec3.pad);
  t = g.sigmoid(g.reshape(t, {h, w}));
  return masking::Mask{t};
}

objectives::Probabilities classify(ad::Graph& g, const ad::Tensor& x,
                                   const ClassifierParams& params) {
  require_image("classify", x, params.in_channels);
  const std::size_t h = x.shape()[1], w = x.shape()[2];
  if (h % 8 != 0 || w % 8 != 0) {
    throw std::invalid_argument("classify: spatial dims " + ad::shape_str(x.shape()) +
                                " must be divisible by 8 (three stride-2 stages)");
  }
  ad::Tensor t = g.reshape(x, {1, x.shape()[0], h, w});
  t = g.relu(g.conv2d(t, params.conv1.w, params.conv1.b, params.conv1.stride, params.conv1.pad));
  t = g.relu(g.conv2d(t, params.conv2.w, params.conv2.b, params.conv2.stride, params.conv2.pad));
  t = g.relu(g.conv2d(t, params.conv3.w, params.conv3.b, params.conv3.stride, params.conv3.pad));
  t = g.global_avg_pool(t);  // [1, widths[2]]
  ad::Tensor logits = g.add(
      g.reshape(g.matmul(t, params.fc_w), {static_cast<std::size_t>(params.num_classes)}),
      params.fc_b);
  return objectives::Probabilities{g.softmax(logits)};
}

ForwardResult forward_pipeline(ad::Graph& g, const ad::Tensor& x, std::optional<int> label,
                               const LocalizerParams& loc, const ClassifierParams& cls,
                               objectives::ObjectiveConfig cfg) {
  ForwardResult r;
  r.mask = localize(g, x, loc);
  ad::Tensor m_minus = masking::complement(g, r.mask.m_plus);
  r.p_hat_fg = classify(g, masking::compose(g, x, r.mask.m_plus), cls);
  r.p_hat_bg = classify(g, masking::compose(g, x, m_minus), cls);
  r.s_plus = masking::mask_size(g, r.mask.m_plus);
  r.s_minus = masking::mask_size(g, m_minus);
  if (label.has_value()) {
    cfg.omega_size = static_cast<double>(r.mask.omega());
    cfg.num_classes = static_cast<std::size_t>(cls.num_classes);
    objectives::Probabilities p =
        objectives::one_hot(g, static_cast<std::size_t>(*label), cfg.num_classes);
    r.ce = objectives::cross_entropy(g, p, r.p_hat_fg);
    r.regularizer = objectives::background_regularizer(g, r.p_hat_bg, cfg);
    r.barrier = objectives::size_barrier(g, r.s_plus, r.s_minus, cfg);
    r.loss = g.add(g.add(r.ce, g.scalar_mul(r.regularizer, cfg.lambda)), r.barrier);
    r.has_loss = true;
  }
  return r;
}

}  // namespace wsseg::models
