#include "greenspoof/budget.hpp"

#include <cmath>

#include <fmt/format.h>

#include "greenspoof/errors.hpp"
#include "greenspoof/selection.hpp"

namespace greenspoof::budget {

EncoderConfig EncoderConfig::base() {
  EncoderConfig cfg;
  cfg.conv_layers = {{512, 10, 5}, {512, 3, 2}, {512, 3, 2}, {512, 3, 2},
                     {512, 3, 2},  {512, 2, 2}, {512, 2, 2}};
  return cfg;
}

void EncoderConfig::validate() const {
  if (sample_rate <= 0 || input_channels <= 0 || conv_layers.empty()) {
    throw UsageError("EncoderConfig: sample rate, input channels and conv layers must be positive");
  }
  for (const auto& c : conv_layers) {
    if (c.channels <= 0 || c.kernel <= 0 || c.stride <= 0) throw UsageError("EncoderConfig: bad conv layer");
  }
  if (num_layers < 0 || model_dim <= 0 || ffn_dim <= 0 || attention_heads <= 0 || pos_conv_kernel <= 0 ||
      pos_conv_groups <= 0 || model_dim % pos_conv_groups != 0 || model_dim % attention_heads != 0) {
    throw UsageError("EncoderConfig: inconsistent transformer dimensions");
  }
}

namespace {

void check_slice(const EncoderConfig& cfg, const SliceSpec& slice) {
  cfg.validate();
  if (slice.keep_layers < 0 || slice.keep_layers > cfg.num_layers) {
    throw UsageError(fmt::format("keep_layers {} outside [0,{}]", slice.keep_layers, cfg.num_layers));
  }
}

std::int64_t linear(std::int64_t in, std::int64_t out) { return in * out + out; }

}  // namespace

ParamBreakdown slice_param_breakdown(const EncoderConfig& cfg, const SliceSpec& slice) {
  check_slice(cfg, slice);
  ParamBreakdown p;
  std::int64_t in = cfg.input_channels;
  for (const auto& c : cfg.conv_layers) {
    p.conv_encoder += std::int64_t{c.channels} * in * c.kernel + (cfg.conv_bias ? c.channels : 0);
    in = c.channels;
  }
  if (cfg.group_norm_first) p.conv_encoder += 2 * std::int64_t{cfg.conv_layers.front().channels};

  const std::int64_t d = cfg.model_dim;
  p.feature_projection = 2 * in + linear(in, d);

  p.positional_conv = d * (d / cfg.pos_conv_groups) * cfg.pos_conv_kernel + d;
  if (cfg.pos_conv_weight_norm) p.positional_conv += cfg.pos_conv_kernel;
  p.encoder_norm = 2 * d;

  const std::int64_t attention = 4 * linear(d, d);
  const std::int64_t ffn = linear(d, cfg.ffn_dim) + linear(cfg.ffn_dim, d);
  p.per_transformer_layer = attention + ffn + 2 * (2 * d);
  p.transformer_layers = p.per_transformer_layer * slice.keep_layers;

  p.total = p.conv_encoder + p.feature_projection + p.positional_conv + p.encoder_norm + p.transformer_layers;
  return p;
}

std::int64_t slice_params(const EncoderConfig& cfg, const SliceSpec& slice) {
  return slice_param_breakdown(cfg, slice).total;
}

std::int64_t encoder_frames(const EncoderConfig& cfg, std::int64_t samples) {
  std::int64_t len = samples;
  for (const auto& c : cfg.conv_layers) {
    if (len < c.kernel) return 0;
    len = (len - c.kernel) / c.stride + 1;
  }
  return len;
}

MacBreakdown slice_mac_breakdown(const EncoderConfig& cfg, const SliceSpec& slice, double input_seconds) {
  check_slice(cfg, slice);
  if (!(input_seconds > 0.0)) throw UsageError("slice_macs: input_seconds must be positive");
  MacBreakdown m;
  std::int64_t len = std::llround(input_seconds * cfg.sample_rate);
  std::int64_t in = cfg.input_channels;
  for (const auto& c : cfg.conv_layers) {
    if (len < c.kernel) throw UsageError("slice_macs: input shorter than the conv receptive field");
    len = (len - c.kernel) / c.stride + 1;
    m.conv_encoder += len * c.channels * in * c.kernel;
    in = c.channels;
  }
  const std::int64_t t = len;
  const std::int64_t d = cfg.model_dim;
  m.frames = t;
  m.feature_projection = t * in * d;
  m.positional_conv = t * d * (d / cfg.pos_conv_groups) * cfg.pos_conv_kernel;
  const std::int64_t k = slice.keep_layers;
  m.attention_projections = k * 4 * t * d * d;
  m.attention_scores = k * 2 * t * t * d;
  m.ffn = k * 2 * t * d * cfg.ffn_dim;
  m.total = m.conv_encoder + m.feature_projection + m.positional_conv + m.attention_projections +
            m.attention_scores + m.ffn;
  return m;
}

double slice_macs(const EncoderConfig& cfg, const SliceSpec& slice, double input_seconds) {
  return static_cast<double>(slice_mac_breakdown(cfg, slice, input_seconds).total) / 1e9;
}

CostReport cost_report(const GridSpec& grid, const DataSizes& sizes, const SliceSpec& slice,
                       const EncoderConfig& cfg, double input_seconds,
                       std::optional<std::int64_t> trainable_params) {
  CostReport r;
  r.encoder = cfg.name;
  r.keep_layers = slice.keep_layers;
  r.input_seconds = input_seconds;
  r.e_proxy_gmacs = slice_macs(cfg, slice, input_seconds);
  r.downstream_fit = downstream_cost_descriptor(grid.algorithm);
  r.d = sizes.train;
  r.h = grid.cells.size();
  r.cost_proxy = r.e_proxy_gmacs * static_cast<double>(r.d) * static_cast<double>(r.h);
  r.frozen_param_count = slice_params(cfg, slice);
  r.trainable_param_count = trainable_params;
  r.footnotes = {
      "1 MAC = 1 multiply + 1 add; layer norms, softmax, activations and biases excluded",
      "E is the frozen-encoder MAC count for one example of the stated duration; the downstream "
      "fit cost is given as a descriptor, not folded into E",
      "cost_proxy = E x D x H in GMAC x examples x grid cells; a relative proxy, not energy",
      "frozen parameters: conv encoder + feature projection + positional conv + encoder norm + "
      "kept transformer layers",
  };
  return r;
}

nlohmann::json to_json(const CostReport& r) {
  nlohmann::json j;
  j["encoder"] = r.encoder;
  j["keep_layers"] = r.keep_layers;
  j["input_seconds"] = r.input_seconds;
  j["E_proxy_gmacs"] = r.e_proxy_gmacs;
  j["downstream_fit"] = r.downstream_fit;
  j["D"] = r.d;
  j["H"] = r.h;
  j["cost_proxy_gmac_examples_cells"] = r.cost_proxy;
  j["frozen_param_count"] = r.frozen_param_count;
  j["trainable_param_count"] =
      r.trainable_param_count ? nlohmann::json(*r.trainable_param_count) : nlohmann::json(nullptr);
  j["footnotes"] = r.footnotes;
  return j;
}

}  // namespace greenspoof::budget
