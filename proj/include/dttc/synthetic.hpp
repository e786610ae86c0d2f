#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dttc/dataset.hpp"
#include "dttc/taxonomy.hpp"

namespace dttc {

struct SyntheticGroup {
  std::string name;
  double proportion = 0.0;
  bool sensitive = true;
  // Samples of this group are subject to sibling-cluster corruption.
  bool biased = false;
};

// Seeded recipe for a hierarchically clustered, group-biased dataset.
struct SyntheticSpec {
  // Children per node at each level; shape[0] is the number of roots, so
  // {2, 2, 2} yields level sizes 2/4/8.
  std::vector<std::size_t> shape = {2, 2, 2};
  std::size_t samples_per_leaf = 100;
  // When nonzero, overrides samples_per_leaf and spreads this many rows over
  // the leaves as evenly as possible.
  std::size_t total_samples = 0;
  std::size_t dim = 16;
  // Norm of the first-level offset vectors, in units of the unit-variance noise.
  double separation = 4.0;
  // Offset norm multiplier per level below the first.
  double level_decay = 0.6;
  // Probability that a biased-group sample is moved toward a sibling cluster.
  double bias = 0.0;
  // Fraction of the distance to the sibling cluster mean that a corrupted
  // sample is moved.
  double corruption_shift = 1.0;
  // Norm of a per-group offset added to every sensitive-group sample.
  double group_signal = 0.0;
  std::vector<SyntheticGroup> groups = {
      {"Male", 0.3, true, false},
      {"Female", 0.3, true, true},
      {"Background", 0.4, false, false},
  };
  std::uint64_t seed = 0;

  // Throws std::invalid_argument when the recipe is unusable.
  void validate() const;
  GroupVocab vocab() const;
};

// Level-major names "A", "A.1", "A.1.2", ... for the given shape.
Taxonomy make_synthetic_taxonomy(const std::vector<std::size_t>& shape);

// Per-leaf cluster means (leaf-major, dim floats each), the sum of one offset
// vector per ancestor. Deterministic in (spec, tax).
std::vector<std::vector<double>> synthetic_cluster_means(const SyntheticSpec& spec, const Taxonomy& tax);

Dataset generate_synthetic(const SyntheticSpec& spec, const Taxonomy& tax);

}  // namespace dttc
