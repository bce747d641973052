#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "userscope/corpus.hpp"
#include "userscope/vectorize.hpp"

namespace userscope {

/// CW-U: concept bag -> user and word bag -> user, two examples per post.
/// W-UC: word bag -> user plus every concept of the post.
enum class Setup { ConceptsWordsToUser, WordsToUserConcepts };

std::string_view setup_name(Setup setup);  // "cwu" | "wuc"
Setup parse_setup(std::string_view name);   // throws Error{UNKNOWN_SETUP}

/// Registry names: "words:<token>", "<channel>:<token>" for concepts,
/// "user:<id>" for users.
std::string word_key(std::string_view token);
std::string concept_key(std::string_view channel, std::string_view token);
std::string user_key(std::string_view user_id);

class IdRegistry {
 public:
  std::size_t add(std::string name);
  std::optional<std::size_t> find(std::string_view name) const;
  const std::string& name(std::size_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  bool operator==(const IdRegistry& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> ids_;
};

struct TrainingExample {
  /// Feature ids; repeats are meaningful (the document is a multiset).
  std::vector<std::size_t> input;
  std::vector<std::size_t> positive_labels;
};

struct ExampleSet {
  Setup setup = Setup::ConceptsWordsToUser;
  IdRegistry features;
  IdRegistry labels;
  std::vector<TrainingExample> examples;
};

/// Registries cover every corpus word (and, for CW-U, concept) as a feature
/// and every corpus user (and, for W-UC, concept) as a label.
ExampleSet build_examples(const Corpus& corpus, Setup setup);

struct Hyperparams {
  std::size_t dim = 128;
  double margin = 0.05;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  /// Decays linearly to zero over all updates.
  double learning_rate = 0.01;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws Error{INVALID_CONFIG}
};

/// Joint space over words, concepts and users.
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  /// Uniform initialisation in [-1/dim, 1/dim], features first, then labels.
  EmbeddingSpace(Setup setup, IdRegistry features, IdRegistry labels, std::size_t dim, std::uint64_t seed);
  EmbeddingSpace(Setup setup, IdRegistry features, IdRegistry labels, RowMatrixF feature_vectors,
                 RowMatrixF label_vectors);

  Setup setup() const { return setup_; }
  std::size_t dim() const { return static_cast<std::size_t>(features_table_.cols()); }
  const IdRegistry& features() const { return features_; }
  const IdRegistry& labels() const { return labels_; }
  const RowMatrixF& feature_table() const { return features_table_; }
  const RowMatrixF& label_table() const { return labels_table_; }
  RowMatrixF& feature_table() { return features_table_; }
  RowMatrixF& label_table() { return labels_table_; }

  /// Looks a registry name up in the feature table, then the label table.
  std::optional<Eigen::VectorXd> find(std::string_view name) const;

  /// Stable content hash, used as a cache key.
  std::uint64_t checksum() const;

  bool operator==(const EmbeddingSpace& other) const;

 private:
  Setup setup_ = Setup::ConceptsWordsToUser;
  IdRegistry features_;
  IdRegistry labels_;
  RowMatrixF features_table_;
  RowMatrixF labels_table_;
};

/// Cosine similarity; 0 when either vector has zero norm.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Sum of the feature vectors of `bag`; unknown ids are skipped.
/// Throws Error{NO_EMBEDDABLE_CONTENT} when nothing is left.
Eigen::VectorXd embed_document(const EmbeddingSpace& space, std::span<const std::size_t> bag);

struct HingeResult {
  double loss = 0.0;
  Eigen::VectorXd grad_document;
  Eigen::VectorXd grad_positive;
  std::vector<Eigen::VectorXd> grad_negatives;
};

/// sum_i max(0, margin - cos(doc, positive) + cos(doc, negative_i)) and its
/// gradient with respect to each vector.
HingeResult hinge_loss(const Eigen::VectorXd& document, const Eigen::VectorXd& positive,
                       const std::vector<Eigen::VectorXd>& negatives, double margin);

struct ExampleLoss {
  double loss = 0.0;
  /// Per positive label, one hinge term set; feature gradients are per
  /// distinct feature id (already multiplied by multiplicity).
  std::vector<std::pair<std::size_t, Eigen::VectorXd>> feature_gradients;
  std::vector<std::pair<std::size_t, Eigen::VectorXd>> label_gradients;
};

/// Loss of one example against the given negatives (one list per positive
/// label), summed over its positives. Throws Error{INVALID_ARGUMENT} when a
/// negative is also a positive.
ExampleLoss example_loss(const EmbeddingSpace& space, const TrainingExample& example,
                         const std::vector<std::vector<std::size_t>>& negatives, double margin);

struct TrainingResult {
  EmbeddingSpace space;
  std::vector<double> epoch_loss;  // mean loss per (example, positive) update
};

/// Single-threaded SGD, one update per (example, positive) pair with its own
/// k negatives. Deterministic given the seed.
TrainingResult train(const ExampleSet& examples, const Hyperparams& params);

/// Rows are the users' label vectors in corpus order. Throws Error{UNKNOWN_USER}.
UserMatrix user_matrix(const EmbeddingSpace& space, const Corpus& corpus);

enum class Pool { Features, Labels, Users };

struct Neighbor {
  std::string name;
  double score = 0.0;
};

/// Descending cosine, ties by ascending name. Throws Error{INVALID_ARGUMENT}
/// for top_k < 1 or an empty pool.
std::vector<Neighbor> nearest(const EmbeddingSpace& space, const Eigen::VectorXd& query, Pool pool,
                              std::size_t top_k);

void write_space(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace read_space(const std::string& path);

/// Convenience: build examples from `corpus` and train.
TrainingResult train_embeddings(const Corpus& corpus, Setup setup, const Hyperparams& params);

}  // namespace userscope
