#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alearn/matrix.hpp"
#include "alearn/rng.hpp"

namespace alearn {

struct Example {
  std::size_t id = 0;
  std::vector<double> features;
  int true_label = 0;
};

// Apportions `total` into one integer count per weight, proportional to the
// weights, using largest-remainder rounding; tied remainders favor the
// lower index. The counts always sum to exactly `total`.
std::vector<std::size_t> largest_remainder_counts(std::span<const double> weights,
                                                  std::size_t total);

// Isotropic Gaussian clusters (unit variance). Class centers sit at
// `separation` times seeded random unit directions; class sizes follow
// class_weights by largest remainder (uniform when empty). Example order
// is shuffled and ids are assigned 0..n-1 in that order, so id carries no
// class information.
std::vector<Example> make_blobs(std::size_t n, std::size_t dim, std::size_t n_classes,
                                double separation, std::span<const double> class_weights,
                                std::uint64_t seed);

enum class TableFormat { delimited, idx_images };

// Loads a dataset from disk.
//  - delimited: one example per line, comma-separated numeric features with
//    the label as the last column; features are min-max scaled per column
//    to [0, 1] (constant columns become 0).
//  - idx_images: byte-image file plus companion byte-label file; pixels are
//    scaled by 1/255. When labels_path is empty it is derived from `path`
//    by replacing the last occurrence of "images" with "labels".
// Malformed input throws ParseError naming the offending line or byte offset.
std::vector<Example> load_table(const std::string& path, TableFormat format,
                                const std::string& labels_path = "");

// Writes examples as comma-separated rows, features first then the label.
// Doubles are rendered shortest-round-trip, so save/load is exact.
void save_delimited(const std::string& path, std::span<const Example> examples);

// Splits into (pool, test). The test side receives ceil(n * test_fraction)
// examples, apportioned across classes by largest remainder and drawn at
// random within each class. Both sides preserve ascending id order.
std::pair<std::vector<Example>, std::vector<Example>> stratified_split(
    std::span<const Example> examples, double test_fraction, std::uint64_t seed);

// Owns the example partitions of one active-learning run:
//   train  - labeled, feeds the learner
//   oracle - unlabeled; labels are hidden until label() is called
//   test   - held-out evaluation set
//   val    - optional held-out set for early-stopping metrics
// Train ids are kept in labeling order; the other partitions in ascending
// id order. labels_of refuses oracle members, which makes label leakage a
// hard error rather than a silent bug.
class DatasetPool {
 public:
  DatasetPool(std::vector<Example> pool_part, std::vector<Example> test_part,
              std::vector<Example> val_part = {});

  const std::vector<std::size_t>& train_ids() const { return train_ids_; }
  const std::vector<std::size_t>& oracle_ids() const { return oracle_ids_; }
  const std::vector<std::size_t>& test_ids() const { return test_ids_; }
  const std::vector<std::size_t>& val_ids() const { return val_ids_; }

  std::size_t total_size() const { return examples_.size(); }
  // The labelable universe: train plus oracle.
  std::size_t al_pool_size() const { return train_ids_.size() + oracle_ids_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t n_classes() const { return n_classes_; }

  Matrix features_of(std::span<const std::size_t> ids) const;
  // Throws DataError if any id is still in the oracle partition.
  std::vector<int> labels_of(std::span<const std::size_t> ids) const;

  // Moves ids from oracle to train, preserving the given order. Validates
  // the whole batch before mutating anything, so a bad id changes nothing.
  void label(std::span<const std::size_t> ids);

  // Setup-time helper for the initial labeled set: a class-stratified
  // random draw from the oracle partition (largest-remainder class counts,
  // uniform within class). Returns ids only; callers still label() them.
  std::vector<std::size_t> stratified_oracle_draw(std::size_t count, RngStream& rng) const;

  bool is_labeled(std::size_t id) const;

 private:
  enum class Part : unsigned char { train, oracle, test, val };

  const Example& example_at(std::size_t id) const;

  std::vector<Example> examples_;         // indexed by position
  std::vector<std::size_t> id_to_pos_;
  std::vector<Part> part_;                // parallel to examples_

  std::vector<std::size_t> train_ids_;    // labeling order
  std::vector<std::size_t> oracle_ids_;   // ascending
  std::vector<std::size_t> test_ids_;     // ascending
  std::vector<std::size_t> val_ids_;      // ascending

  std::size_t feature_dim_ = 0;
  std::size_t n_classes_ = 0;
};

}  // namespace alearn
