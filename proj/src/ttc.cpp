#include "dttc/ttc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "dttc/error.hpp"
#include "dttc/kernels.hpp"

namespace dttc {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Base:
      return "base";
    case Variant::D:
      return "d";
    case Variant::H:
      return "h";
    case Variant::HD:
      return "hd";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "base") return Variant::Base;
  if (lower == "d") return Variant::D;
  if (lower == "h") return Variant::H;
  if (lower == "hd") return Variant::HD;
  throw std::invalid_argument("unknown variant '" + std::string(text) + "' (expected base, d, h or hd)");
}

ModelParams ModelParams::zeros(const Taxonomy& tax, std::size_t dim, Variant variant, double tau) {
  ModelParams p;
  p.variant = variant;
  p.tau = tau;
  for (std::size_t level = 0; level < tax.n_levels(); ++level) p.heads.emplace_back(tax.level_size(level), dim);
  return p;
}

namespace {

std::string shape_string(const std::vector<std::size_t>& sizes, std::size_t dim) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "/" : "") + std::to_string(sizes[i]);
  if (dim) s += " x d=" + std::to_string(dim);
  return s;
}

}  // namespace

void ModelParams::check_compatible(const Taxonomy& tax, std::size_t features_dim) const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("model: temperature must be positive");
  std::vector<std::size_t> mine;
  for (const auto& h : heads) mine.push_back(h.classes);
  const auto theirs = tax.level_sizes();
  bool ok = mine == theirs;
  for (const auto& h : heads) ok = ok && h.dim == dim() && h.weights.size() == h.classes * h.dim && h.bias.size() == h.classes;
  if (!ok) {
    throw ShapeError("model levels " + shape_string(mine, dim()) + " do not match taxonomy levels " +
                     shape_string(theirs, 0));
  }
  if (features_dim != 0 && features_dim != dim()) {
    throw ShapeError("model expects d=" + std::to_string(dim()) + " features but got d=" + std::to_string(features_dim));
  }
}

void ModelParams::round_to_float() {
  for (auto& h : heads) {
    for (auto& w : h.weights) w = static_cast<double>(static_cast<float>(w));
    for (auto& b : h.bias) b = static_cast<double>(static_cast<float>(b));
  }
}

std::vector<TransitionMatrix> transition_stack(const Taxonomy& tax) {
  std::vector<TransitionMatrix> out;
  for (std::size_t level = 0; level + 1 < tax.n_levels(); ++level) out.push_back(transition_matrix(tax, level));
  return out;
}

std::vector<double> level_logits(const ModelParams& params, std::size_t level, std::span<const float> a) {
  const auto& head = params.heads.at(level);
  if (a.size() != head.dim) {
    throw ShapeError("level_logits: feature length " + std::to_string(a.size()) + " != model dimension " +
                     std::to_string(head.dim));
  }
  std::vector<double> z(head.classes);
  kernels::affine(head.weights, head.bias, a, z);
  return z;
}

std::vector<double> softmax_t(std::span<const double> v, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_t: temperature must be positive");
  double hi = -INFINITY;
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("softmax_t: non-finite input");
    hi = std::max(hi, x);
  }
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = std::exp((v[k] - hi) / tau);
    sum += out[k];
  }
  for (auto& p : out) p /= sum;
  return out;
}

std::vector<double> attention_mask(std::span<const double> parent_probs, const TransitionMatrix& m) {
  if (parent_probs.size() != m.rows()) {
    throw ShapeError("attention_mask: " + std::to_string(parent_probs.size()) + " parent probabilities for a " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " transition matrix");
  }
  std::vector<double> mask(m.cols(), 0.0);
  for (std::size_t k = 0; k < m.rows(); ++k) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(k, j)) mask[j] += parent_probs[k];
    }
  }
  return mask;
}

ForwardTrace forward(const ModelParams& params, std::span<const TransitionMatrix> transitions,
                     std::span<const float> a) {
  if (transitions.size() + 1 != params.n_levels()) throw ShapeError("forward: transition count does not match levels");
  ForwardTrace trace;
  trace.levels.resize(params.n_levels());
  const bool masked = uses_mask(params.variant);
  for (std::size_t level = 0; level < params.n_levels(); ++level) {
    auto& t = trace.levels[level];
    t.logits = level_logits(params, level, a);
    if (level == 0) {
      t.mask.assign(t.logits.size(), 1.0);
      t.probs = softmax_t(t.logits, params.tau);
      continue;
    }
    t.mask = attention_mask(trace.levels[level - 1].probs, transitions[level - 1]);
    if (masked) {
      std::vector<double> scaled(t.logits.size());
      for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k] = t.logits[k] * t.mask[k];
      t.probs = softmax_t(scaled, params.tau);
    } else {
      t.probs = softmax_t(t.logits, params.tau);
    }
  }
  return trace;
}

ForwardTrace forward(const ModelParams& params, const Taxonomy& tax, std::span<const float> a) {
  params.check_compatible(tax, a.size());
  const auto transitions = transition_stack(tax);
  return forward(params, transitions, a);
}

std::uint32_t argmax(std::span<const double> v) {
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

std::vector<Prediction> predict(const ModelParams& params, const Taxonomy& tax, const FeatureMatrix& features) {
  std::vector<Prediction> out;
  if (features.rows() == 0) return out;
  params.check_compatible(tax, features.cols());
  const auto transitions = transition_stack(tax);
  out.reserve(features.rows());
  for (std::size_t j = 0; j < features.rows(); ++j) {
    const auto trace = forward(params, transitions, features.row(j));
    Prediction p;
    for (const auto& level : trace.levels) {
      const auto k = argmax(level.probs);
      p.path.push_back(k);
      p.confidence.push_back(level.probs[k]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LabelPath> predict_paths(const ModelParams& params, const Taxonomy& tax, const FeatureMatrix& features) {
  std::vector<LabelPath> paths;
  for (auto& p : predict(params, tax, features)) paths.push_back(std::move(p.path));
  return paths;
}

}  // namespace dttc
