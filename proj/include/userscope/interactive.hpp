#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "userscope/vectorize.hpp"

namespace userscope {

inline constexpr std::size_t kDefaultTopN = 15;

struct ClassifierParams {
  double lambda = 1e-4;
  std::size_t epochs = 100;
};

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double score(const Eigen::VectorXd& x) const { return weights.dot(x) + bias; }
};

struct LabeledRow {
  std::size_t row = 0;
  bool relevant = false;
};

/// Class-balanced hinge loss averaged over `examples` plus lambda * |w|^2 / 2.
double svm_objective(const UserMatrix& data, const std::vector<LabeledRow>& examples, const LinearModel& model,
                     double lambda);

/// Pegasos-style SGD on the class-balanced hinge loss: step 1 / (lambda * t),
/// examples reshuffled every epoch. Both classes must be present.
LinearModel train_linear_svm(const UserMatrix& data, std::vector<LabeledRow> examples,
                             const ClassifierParams& params, std::mt19937_64& rng);

struct Judgment {
  bool relevant = false;
  std::size_t round = 0;  // rank calls completed when the judgment was recorded
};

struct RankResult {
  std::vector<double> scores;    // by matrix row
  std::vector<std::string> top;  // unjudged users, descending score, ties by id
  std::size_t round = 0;         // 1-based index of this rank call
};

/// One analyst's relevance-feedback loop over a fixed representation.
/// Single writer; distinct sessions are independent.
class Session {
 public:
  Session(std::shared_ptr<const UserMatrix> representation, std::size_t top_n = kDefaultTopN,
          std::uint64_t seed = 0, ClassifierParams params = {});

  /// Records judgments; re-judging overwrites. Throws Error{UNKNOWN_USER}
  /// (and records nothing) if any user is unknown.
  void judge(const std::vector<std::pair<std::string, bool>>& judgments);
  void forget(const std::string& user_id);

  /// Retrains from scratch on every judgment and scores all users.
  /// Throws Error{NEED_BOTH_CLASSES}.
  RankResult train_and_rank();

  /// Uniform sample without replacement of unjudged users.
  std::vector<std::string> bootstrap_negatives(std::size_t count);
  /// Same sampling from a generator derived from the seed and the current
  /// judgment state; leaves the session untouched.
  std::vector<std::string> bootstrap_preview(std::size_t count) const;

  const UserMatrix& representation() const { return *representation_; }
  std::shared_ptr<const UserMatrix> representation_ptr() const { return representation_; }
  const std::map<std::string, Judgment>& judgments() const { return judgments_; }
  bool is_judged(const std::string& user_id) const { return judgments_.contains(user_id); }
  std::size_t round() const { return round_; }
  std::size_t top_n() const { return top_n_; }
  std::uint64_t seed() const { return seed_; }
  const LinearModel& model() const { return model_; }
  const std::optional<RankResult>& last_result() const { return last_; }

 private:
  std::shared_ptr<const UserMatrix> representation_;
  std::size_t top_n_;
  std::uint64_t seed_;
  ClassifierParams params_;
  std::map<std::string, Judgment> judgments_;
  std::size_t round_ = 0;
  std::mt19937_64 sampler_;
  LinearModel model_;
  std::optional<RankResult> last_;

  std::vector<std::string> sample_unjudged(std::size_t count, std::mt19937_64& rng) const;
};

Session start_session(std::shared_ptr<const UserMatrix> representation, std::size_t top_n = kDefaultTopN,
                      std::uint64_t seed = 0);

}  // namespace userscope
