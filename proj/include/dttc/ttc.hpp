#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dttc/dataset.hpp"
#include "dttc/taxonomy.hpp"

namespace dttc {

// Ablation grid: flat heads, flat + reweighting, masked heads, masked + reweighting.
enum class Variant : std::uint8_t { Base = 0, D = 1, H = 2, HD = 3 };

constexpr bool uses_mask(Variant v) { return v == Variant::H || v == Variant::HD; }
constexpr bool uses_reweighting(Variant v) { return v == Variant::D || v == Variant::HD; }
std::string_view variant_name(Variant v);  // "base", "d", "h", "hd"
Variant parse_variant(std::string_view text);  // case-insensitive

// Affine head for one level: logits = weights * a + bias, weights row-major
// (classes x dim).
struct LevelHead {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  LevelHead() = default;
  LevelHead(std::size_t classes, std::size_t dim)
      : classes(classes), dim(dim), weights(classes * dim, 0.0), bias(classes, 0.0) {}

  std::span<const double> row(std::size_t k) const { return {weights.data() + k * dim, dim}; }
  std::span<double> row(std::size_t k) { return {weights.data() + k * dim, dim}; }
  bool operator==(const LevelHead&) const = default;
};

struct ModelParams {
  Variant variant = Variant::Base;
  double tau = 1.0;
  std::vector<LevelHead> heads;

  // Zero-initialised heads shaped for `tax` and feature dimension `dim`.
  static ModelParams zeros(const Taxonomy& tax, std::size_t dim, Variant variant, double tau = 1.0);

  std::size_t n_levels() const { return heads.size(); }
  std::size_t dim() const { return heads.empty() ? 0 : heads.front().dim; }

  // Throws ShapeError naming both shapes when the heads do not match `tax`
  // (and `dim`, when nonzero); std::invalid_argument when tau <= 0.
  void check_compatible(const Taxonomy& tax, std::size_t dim = 0) const;

  // Rounds every parameter to the nearest float, the checkpoint precision.
  void round_to_float();

  bool operator==(const ModelParams&) const = default;
};

struct LevelTrace {
  std::vector<double> logits;
  std::vector<double> mask;   // all ones on the first level
  std::vector<double> probs;
};

struct ForwardTrace {
  std::vector<LevelTrace> levels;
};

// Transition matrices for every adjacent level pair of `tax`.
std::vector<TransitionMatrix> transition_stack(const Taxonomy& tax);

std::vector<double> level_logits(const ModelParams& params, std::size_t level, std::span<const float> a);

// exp(v_k / tau) / sum_j exp(v_j / tau) with max subtraction.
std::vector<double> softmax_t(std::span<const double> v, double tau);

// Row vector times matrix: entry j is the probability mass of j's parent.
std::vector<double> attention_mask(std::span<const double> parent_probs, const TransitionMatrix& m);

// Levels are evaluated top-down. Masked variants feed softmax_t with
// logits * mask (element-wise, raw logits); flat variants record the mask
// but ignore it.
ForwardTrace forward(const ModelParams& params, std::span<const TransitionMatrix> transitions,
                     std::span<const float> a);
ForwardTrace forward(const ModelParams& params, const Taxonomy& tax, std::span<const float> a);

// Lowest index among the maxima.
std::uint32_t argmax(std::span<const double> v);

struct Prediction {
  LabelPath path;
  std::vector<double> confidence;  // probability of the chosen class per level
};

std::vector<Prediction> predict(const ModelParams& params, const Taxonomy& tax, const FeatureMatrix& features);
std::vector<LabelPath> predict_paths(const ModelParams& params, const Taxonomy& tax, const FeatureMatrix& features);

// Checkpoint: "DTTM", u32 version=1, u8 variant, f64 tau, then per level
// u32 rows, u32 cols, rows*cols f32 weights, rows f32 bias (little-endian).
std::string encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dttc
