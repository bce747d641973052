#include "userscope/interactive.hpp"

#include <algorithm>
#include <numeric>

#include "userscope/error.hpp"

namespace userscope {

namespace {

struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

// Inverse class frequency, normalised so a balanced set gets weight 1.
ClassWeights class_weights(const std::vector<LabeledRow>& examples) {
  std::size_t pos = 0;
  for (const auto& e : examples) pos += e.relevant ? 1 : 0;
  const std::size_t neg = examples.size() - pos;
  const double n = static_cast<double>(examples.size());
  return {pos ? n / (2.0 * static_cast<double>(pos)) : 0.0, neg ? n / (2.0 * static_cast<double>(neg)) : 0.0};
}

Eigen::VectorXd row_of(const UserMatrix& data, std::size_t r) { return data.row_vector(r).cast<double>().transpose(); }

}  // namespace

double svm_objective(const UserMatrix& data, const std::vector<LabeledRow>& examples, const LinearModel& model,
                     double lambda) {
  const ClassWeights cw = class_weights(examples);
  double hinge = 0.0;
  for (const auto& e : examples) {
    const double y = e.relevant ? 1.0 : -1.0;
    const double margin = y * model.score(row_of(data, e.row));
    hinge += (e.relevant ? cw.positive : cw.negative) * std::max(0.0, 1.0 - margin);
  }
  return hinge / static_cast<double>(examples.size()) + 0.5 * lambda * model.weights.squaredNorm();
}

LinearModel train_linear_svm(const UserMatrix& data, std::vector<LabeledRow> examples, const ClassifierParams& params,
                             std::mt19937_64& rng) {
  const bool has_pos = std::any_of(examples.begin(), examples.end(), [](const LabeledRow& e) { return e.relevant; });
  const bool has_neg = std::any_of(examples.begin(), examples.end(), [](const LabeledRow& e) { return !e.relevant; });
  if (!has_pos || !has_neg) throw Error("NEED_BOTH_CLASSES", "need both positive and negative judgments");

  // Canonical order first so the result depends only on the set of judgments.
  std::sort(examples.begin(), examples.end(), [](const LabeledRow& a, const LabeledRow& b) { return a.row < b.row; });
  const ClassWeights cw = class_weights(examples);

  std::vector<Eigen::VectorXd> xs;
  xs.reserve(examples.size());
  for (const auto& e : examples) xs.push_back(row_of(data, e.row));

  LinearModel model{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.dim())), 0.0};
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  double t = 0.0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      t += 1.0;
      const double eta = 1.0 / (params.lambda * t);
      const double y = examples[i].relevant ? 1.0 : -1.0;
      const double margin = y * model.score(xs[i]);
      model.weights *= 1.0 - eta * params.lambda;
      if (margin < 1.0) {
        const double step = eta * (examples[i].relevant ? cw.positive : cw.negative) * y;
        model.weights += step * xs[i];
        model.bias += step;
      }
    }
  }
  return model;
}

Session::Session(std::shared_ptr<const UserMatrix> representation, std::size_t top_n, std::uint64_t seed,
                 ClassifierParams params)
    : representation_(std::move(representation)),
      top_n_(top_n),
      seed_(seed),
      params_(params),
      sampler_(seed),
      model_{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(representation_ ? representation_->dim() : 0)), 0.0} {
  if (!representation_ || representation_->num_users() == 0) {
    throw Error("INVALID_ARGUMENT", "session needs a nonempty representation");
  }
}

void Session::judge(const std::vector<std::pair<std::string, bool>>& judgments) {
  for (const auto& [user, _] : judgments) {
    if (!representation_->row(user)) throw Error("UNKNOWN_USER", "unknown user " + user);
  }
  for (const auto& [user, relevant] : judgments) judgments_[user] = Judgment{relevant, round_};
}

void Session::forget(const std::string& user_id) { judgments_.erase(user_id); }

RankResult Session::train_and_rank() {
  std::vector<LabeledRow> examples;
  examples.reserve(judgments_.size());
  for (const auto& [user, j] : judgments_) examples.push_back({*representation_->row(user), j.relevant});

  // Shuffling depends only on the seed and the round being trained.
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(round_ + 1)};
  std::mt19937_64 rng(seq);
  LinearModel model = train_linear_svm(*representation_, std::move(examples), params_, rng);

  const UserMatrix& data = *representation_;
  RankResult result;
  const Eigen::VectorXd scores = data.vectors().cast<double>() * model.weights;
  result.scores.resize(data.num_users());
  for (std::size_t r = 0; r < data.num_users(); ++r) result.scores[r] = scores(static_cast<Eigen::Index>(r)) + model.bias;

  std::vector<std::size_t> unjudged;
  for (std::size_t r = 0; r < data.num_users(); ++r) {
    if (!judgments_.contains(data.user_ids()[r])) unjudged.push_back(r);
  }
  const auto better = [&](std::size_t a, std::size_t b) {
    if (result.scores[a] != result.scores[b]) return result.scores[a] > result.scores[b];
    return data.user_ids()[a] < data.user_ids()[b];
  };
  const std::size_t n = std::min(top_n_, unjudged.size());
  std::partial_sort(unjudged.begin(), unjudged.begin() + static_cast<std::ptrdiff_t>(n), unjudged.end(), better);
  for (std::size_t i = 0; i < n; ++i) result.top.push_back(data.user_ids()[unjudged[i]]);

  model_ = std::move(model);
  result.round = ++round_;
  last_ = result;
  return result;
}

std::vector<std::string> Session::sample_unjudged(std::size_t count, std::mt19937_64& rng) const {
  std::vector<std::string> pool;
  for (const auto& id : representation_->user_ids()) {
    if (!judgments_.contains(id)) pool.push_back(id);
  }
  const std::size_t take = std::min(count, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(pool[i], pool[std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng)]);
  }
  pool.resize(take);
  return pool;
}

std::vector<std::string> Session::bootstrap_negatives(std::size_t count) { return sample_unjudged(count, sampler_); }

std::vector<std::string> Session::bootstrap_preview(std::size_t count) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(judgments_.size()), static_cast<std::uint32_t>(round_), 0xb007u};
  std::mt19937_64 rng(seq);
  return sample_unjudged(count, rng);
}

Session start_session(std::shared_ptr<const UserMatrix> representation, std::size_t top_n, std::uint64_t seed) {
  return Session(std::move(representation), top_n, seed);
}

}  // namespace userscope
