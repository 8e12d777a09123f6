#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finkg/embedding.hpp"
#include "finkg/kg_schema.hpp"
#include "finkg/preprocess.hpp"

namespace finkg {

inline constexpr double kTemporalDistanceCap = 10.0;

/// Semantic and structural relevance signals for one (question, triplet)
/// pair.
struct FeatureVector {
  Embedding q_emb;
  Embedding t_emb;
  double cos_sim = 0.0;
  double temporal_distance = kTemporalDistanceCap;  // years, in [0, cap]
  double temporal_missing = 1.0;
  double metric_overlap = 0.0;  // Jaccard, [0, 1]
  double company_match = 0.0;
  double unit_is_percent = 0.0;

  static constexpr std::size_t kScalarCount = 6;
  static std::size_t flattened_size(std::size_t dim) { return 2 * dim + kScalarCount; }

  /// [q_emb | t_emb | cos, distance / cap, missing, overlap, company, percent]
  std::vector<double> flatten() const;
};

/// First 4-digit year token (1900..2100) in the question text.
std::optional<int> question_year(std::string_view question);

/// Jaccard overlap of the metric's underscore-separated tokens with the
/// question's word tokens (both lowercased).
double metric_overlap(std::string_view metric_type, std::string_view question);

FeatureVector build_features(const QuestionRecord& question, const Triplet& triplet, EmbeddingProvider& provider);

/// Two-layer perceptron: sigmoid(w2 . relu(W1 x + b1) + b2).
/// W1 is stored row-major, one row per hidden unit.
struct MlpModel {
  std::size_t input_dim = 0;
  std::size_t hidden_size = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
  std::uint64_t seed = 0;
  std::string provider_tag;  // embedding provider the features came from

  static MlpModel zeros(std::size_t input_dim, std::size_t hidden_size);
  /// Dimensions agree and every entry is finite.
  bool consistent() const;

  std::string to_json() const;
  /// Throws ParseError on malformed files and DimensionMismatch when the
  /// stored dimensions disagree with each other or with `expected_input_dim`.
  static MlpModel from_json(std::string_view text, std::optional<std::size_t> expected_input_dim = std::nullopt);

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

double mlp_logit(const MlpModel& m, std::span<const double> x);
/// Score in (0, 1). Throws DimensionMismatch.
double mlp_forward(const MlpModel& m, std::span<const double> x);

inline constexpr double kScoreClamp = 1e-7;

/// Mean of -[w*y*log(s) + (1-y)*log(1-s)], s clamped to [1e-7, 1-1e-7].
/// Throws LengthMismatch (also for empty input).
double bce_loss(std::span<const double> scores, std::span<const int> labels, double positive_weight);

struct MlpGradients {
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
};

/// Batch-mean weighted BCE of `m` and, when `grads` is non-null, its exact
/// gradient with respect to every parameter.
double loss_and_gradients(const MlpModel& m, std::span<const std::vector<double>> inputs, std::span<const int> labels,
                          double positive_weight, MlpGradients* grads);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 20;
  int batch_size = 64;
  std::uint64_t seed = 42;
  int hidden_size = 64;
  double positive_weight = 1.0;

  /// Throws ConfigError unless every field is strictly positive.
  void validate() const;
};

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // mean loss per epoch
};

/// #negatives / #positives.
double balanced_positive_weight(std::span<const LabeledExample> data);

/// Mini-batch Adam on weighted BCE. Glorot-uniform init and per-epoch
/// shuffles come from a seeded mt19937_64, so equal inputs give a
/// bit-identical model. Throws DegenerateData when only one class is present.
TrainResult train(std::span<const LabeledExample> data, const TrainConfig& cfg);

struct LabeledTriplet {
  Triplet triplet;
  int label = 0;
};

/// Positive iff |value| equals a numeric token of some gold supporting fact
/// and the triplet's year (if any) appears in that same fact or the fact
/// mentions no year at all.
std::vector<LabeledTriplet> label_triplets(const FinDocument& doc, std::span<const Triplet> triplets);

struct ScoredTriplet {
  Triplet triplet;
  double score = 0.0;
};

/// Sorts by descending score, ties by ascending triplet_id, and keeps k.
std::vector<ScoredTriplet> select_topk(std::vector<ScoredTriplet> scored, std::size_t k);

std::vector<ScoredTriplet> score_triplets(const QuestionRecord& question, std::span<const Triplet> triplets,
                                          const MlpModel& model, EmbeddingProvider& provider);

std::vector<ScoredTriplet> filter_topk(const QuestionRecord& question, std::span<const Triplet> triplets,
                                       const MlpModel& model, EmbeddingProvider& provider, std::size_t k);

/// Everything scoring at least `threshold`, in the same order as top-k.
std::vector<ScoredTriplet> filter_threshold(const QuestionRecord& question, std::span<const Triplet> triplets,
                                            const MlpModel& model, EmbeddingProvider& provider,
                                            double threshold = 0.5);

}  // namespace finkg
