#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alearn/matrix.hpp"
#include "alearn/rng.hpp"

namespace alearn {

// Two scores tie when they agree to within this relative tolerance; ties
// are always resolved toward the lowest original example id.
inline constexpr double kScoreTieRelTol = 1e-9;

struct SamplerConfig {
  std::size_t top_m = 50;         // entropy filter keeps this many candidates
  std::size_t labels_per_iter = 20;

  void validate() const;  // throws ConfigError

  bool operator==(const SamplerConfig&) const = default;
};

// Shannon entropy of a class distribution, in nats. Zero probabilities
// contribute zero. Throws DataError unless entries are nonnegative and sum
// to 1 within 1e-6.
double predictive_entropy(std::span<const double> probabilities);

// Positions of the m highest-entropy rows, ordered by descending entropy;
// tied entropies order by lower position. m is clipped to the input size.
std::vector<std::size_t> top_m_candidates(std::span<const double> entropies, std::size_t m);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Column mean of a non-empty embedding matrix.
std::vector<double> centroid(const Matrix& embeddings);

// Mean Euclidean distance from a candidate embedding to every row of the
// training matrix; adds one evaluation per row to the counter.
double score_pairwise(std::span<const double> candidate, const Matrix& train_embeddings,
                      std::uint64_t& distance_evaluations);

// Euclidean distance from a candidate embedding to the training centroid;
// adds exactly one evaluation to the counter.
double score_centroid(std::span<const double> candidate, std::span<const double> y,
                      std::uint64_t& distance_evaluations);

// Approximate-tie argmax: position of the highest score, where scores
// within kScoreTieRelTol of each other count as equal and the lowest id
// wins. ids must parallel scores.
std::size_t argmax_score(std::span<const double> scores, std::span<const std::size_t> ids);

struct CandidateSet {
  std::vector<std::size_t> ids;  // original example ids, row-aligned
  Matrix embeddings;
};

struct Selection {
  std::vector<std::size_t> chosen;  // ids in pick order
  std::vector<double> scores;       // winning score of each pick
  std::vector<std::vector<double>> centroids;  // training centroid after each pick
  std::uint64_t distance_evaluations = 0;
};

// Sequentially picks up to `count` candidates maximizing distance to the
// current training-set centroid; after each pick the centroid absorbs the
// chosen embedding via the running-mean update y' = y + (e - y) / (N + 1),
// so each pick costs one distance per surviving candidate. count is
// clipped to the candidate set size; empty candidates yield an empty
// Selection.
Selection select_batch(const Matrix& train_embeddings, const CandidateSet& candidates,
                       std::size_t count);

// Reference route: same sequential protocol, but each candidate is scored
// by its mean distance to every member of the growing training set. Costs
// O(candidates x train) distances per pick. Kept separate from
// select_batch so the two routes can be compared, never merged.
Selection select_batch_pairwise(const Matrix& train_embeddings, const CandidateSet& candidates,
                                std::size_t count);

// Uniform draw without replacement from pool_ids; count clipped to the
// pool size.
std::vector<std::size_t> random_select(std::span<const std::size_t> pool_ids,
                                       std::size_t count, RngStream& rng);

// Positions of the `count` highest-entropy probability rows, descending,
// with lowest-position tie-break; count clipped to the row count. Rows are
// validated like predictive_entropy.
std::vector<std::size_t> uncertainty_select(const Matrix& pool_probabilities,
                                            std::size_t count);

}  // namespace alearn
