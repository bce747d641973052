#include "userscope/embed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "userscope/error.hpp"

namespace userscope {

std::string_view setup_name(Setup setup) {
  return setup == Setup::ConceptsWordsToUser ? "cwu" : "wuc";
}

Setup parse_setup(std::string_view name) {
  if (name == "cwu") return Setup::ConceptsWordsToUser;
  if (name == "wuc") return Setup::WordsToUserConcepts;
  throw Error("UNKNOWN_SETUP", "unknown embedding setup " + std::string(name));
}

std::string word_key(std::string_view token) { return std::string(kWordsChannel) + ":" + std::string(token); }

std::string concept_key(std::string_view channel, std::string_view token) {
  return std::string(channel) + ":" + std::string(token);
}

std::string user_key(std::string_view user_id) { return "user:" + std::string(user_id); }

std::size_t IdRegistry::add(std::string name) {
  auto [it, inserted] = ids_.emplace(name, names_.size());
  if (inserted) names_.push_back(std::move(name));
  return it->second;
}

std::optional<std::size_t> IdRegistry::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

ExampleSet build_examples(const Corpus& corpus, Setup setup) {
  ExampleSet set;
  set.setup = setup;
  const bool concepts_as_features = setup == Setup::ConceptsWordsToUser;
  const auto concept_channels = corpus.concept_channel_names();

  for (const auto& tok : corpus.channel(kWordsChannel).vocabulary.tokens()) set.features.add(word_key(tok));
  for (const auto& id : corpus.user_ids()) set.labels.add(user_key(id));
  for (const auto& ch : concept_channels) {
    for (const auto& tok : corpus.channel(ch).vocabulary.tokens()) {
      (concepts_as_features ? set.features : set.labels).add(concept_key(ch, tok));
    }
  }

  for (const auto& post : corpus.posts()) {
    const std::size_t user = *set.labels.find(user_key(post.user_id));
    TrainingExample words;
    for (const auto& tok : tokenize(post.text)) words.input.push_back(*set.features.find(word_key(tok)));

    if (concepts_as_features) {
      TrainingExample concepts;
      for (const auto& ch : concept_channels) {
        auto it = post.channels.find(ch);
        if (it == post.channels.end()) continue;
        for (const auto& tok : it->second) concepts.input.push_back(*set.features.find(concept_key(ch, tok)));
      }
      if (!concepts.input.empty()) {
        concepts.positive_labels = {user};
        set.examples.push_back(std::move(concepts));
      }
      if (!words.input.empty()) {
        words.positive_labels = {user};
        set.examples.push_back(std::move(words));
      }
    } else {
      if (words.input.empty()) continue;
      words.positive_labels = {user};
      for (const auto& ch : concept_channels) {
        auto it = post.channels.find(ch);
        if (it == post.channels.end()) continue;
        for (const auto& tok : it->second) {
          const std::size_t label = *set.labels.find(concept_key(ch, tok));
          if (std::find(words.positive_labels.begin(), words.positive_labels.end(), label) ==
              words.positive_labels.end()) {
            words.positive_labels.push_back(label);
          }
        }
      }
      set.examples.push_back(std::move(words));
    }
  }
  return set;
}

void Hyperparams::validate() const {
  if (dim < 1) throw Error("INVALID_CONFIG", "dim must be positive");
  if (!(margin > 0.0)) throw Error("INVALID_CONFIG", "margin must be positive");
  if (negatives < 1) throw Error("INVALID_CONFIG", "negatives must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("INVALID_CONFIG", "learning rate must be positive");
}

EmbeddingSpace::EmbeddingSpace(Setup setup, IdRegistry features, IdRegistry labels, std::size_t dim,
                               std::uint64_t seed)
    : setup_(setup), features_(std::move(features)), labels_(std::move(labels)) {
  std::mt19937_64 rng(seed);
  const float bound = 1.0f / static_cast<float>(dim);
  std::uniform_real_distribution<float> init(-bound, bound);
  const auto d = static_cast<Eigen::Index>(dim);
  features_table_.resize(static_cast<Eigen::Index>(features_.size()), d);
  labels_table_.resize(static_cast<Eigen::Index>(labels_.size()), d);
  for (Eigen::Index i = 0; i < features_table_.size(); ++i) features_table_.data()[i] = init(rng);
  for (Eigen::Index i = 0; i < labels_table_.size(); ++i) labels_table_.data()[i] = init(rng);
}

EmbeddingSpace::EmbeddingSpace(Setup setup, IdRegistry features, IdRegistry labels, RowMatrixF feature_vectors,
                               RowMatrixF label_vectors)
    : setup_(setup),
      features_(std::move(features)),
      labels_(std::move(labels)),
      features_table_(std::move(feature_vectors)),
      labels_table_(std::move(label_vectors)) {
  if (features_table_.rows() != static_cast<Eigen::Index>(features_.size()) ||
      labels_table_.rows() != static_cast<Eigen::Index>(labels_.size()) ||
      features_table_.cols() != labels_table_.cols()) {
    throw Error("INVALID_ARGUMENT", "embedding tables do not match their registries");
  }
}

std::optional<Eigen::VectorXd> EmbeddingSpace::find(std::string_view name) const {
  if (auto id = features_.find(name)) {
    return features_table_.row(static_cast<Eigen::Index>(*id)).cast<double>().transpose();
  }
  if (auto id = labels_.find(name)) {
    return labels_table_.row(static_cast<Eigen::Index>(*id)).cast<double>().transpose();
  }
  return std::nullopt;
}

std::uint64_t EmbeddingSpace::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) h = (h ^ p[i]) * 1099511628211ull;
  };
  const int tag = setup_ == Setup::ConceptsWordsToUser ? 0 : 1;
  mix(&tag, sizeof tag);
  for (const auto& n : features_.names()) mix(n.data(), n.size() + 1);
  for (const auto& n : labels_.names()) mix(n.data(), n.size() + 1);
  mix(features_table_.data(), static_cast<std::size_t>(features_table_.size()) * sizeof(float));
  mix(labels_table_.data(), static_cast<std::size_t>(labels_table_.size()) * sizeof(float));
  return h;
}

bool EmbeddingSpace::operator==(const EmbeddingSpace& other) const {
  return setup_ == other.setup_ && features_ == other.features_ && labels_ == other.labels_ &&
         features_table_ == other.features_table_ && labels_table_ == other.labels_table_;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

Eigen::VectorXd embed_document(const EmbeddingSpace& space, std::span<const std::size_t> bag) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dim()));
  bool any = false;
  for (std::size_t id : bag) {
    if (id >= space.features().size()) continue;
    sum += space.feature_table().row(static_cast<Eigen::Index>(id)).cast<double>().transpose();
    any = true;
  }
  if (!any) throw Error("NO_EMBEDDABLE_CONTENT", "no embeddable content");
  return sum;
}

namespace {

// d cos(x, y) / dx; zero when either norm vanishes (cosine is defined as 0 there).
Eigen::VectorXd cosine_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double cos_xy) {
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return Eigen::VectorXd::Zero(x.size());
  return y / (nx * ny) - cos_xy * x / (nx * nx);
}

}  // namespace

HingeResult hinge_loss(const Eigen::VectorXd& document, const Eigen::VectorXd& positive,
                       const std::vector<Eigen::VectorXd>& negatives, double margin) {
  HingeResult r;
  r.grad_document = Eigen::VectorXd::Zero(document.size());
  r.grad_positive = Eigen::VectorXd::Zero(positive.size());
  r.grad_negatives.assign(negatives.size(), Eigen::VectorXd::Zero(document.size()));

  const double pos_sim = cosine(document, positive);
  Eigen::VectorXd dpos_doc;
  Eigen::VectorXd dpos_pos;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    const double neg_sim = cosine(document, negatives[i]);
    const double term = margin - pos_sim + neg_sim;
    if (term <= 0.0) continue;
    r.loss += term;
    if (dpos_doc.size() == 0) {
      dpos_doc = cosine_gradient(document, positive, pos_sim);
      dpos_pos = cosine_gradient(positive, document, pos_sim);
    }
    r.grad_document += cosine_gradient(document, negatives[i], neg_sim) - dpos_doc;
    r.grad_positive -= dpos_pos;
    r.grad_negatives[i] = cosine_gradient(negatives[i], document, neg_sim);
  }
  return r;
}

namespace {

Eigen::VectorXd label_vector(const EmbeddingSpace& space, std::size_t id) {
  return space.label_table().row(static_cast<Eigen::Index>(id)).cast<double>().transpose();
}

// Distinct feature ids of a bag with their multiplicities, in id order.
std::vector<std::pair<std::size_t, double>> multiplicities(const std::vector<std::size_t>& bag) {
  std::map<std::size_t, double> counts;
  for (std::size_t id : bag) counts[id] += 1.0;
  return {counts.begin(), counts.end()};
}

}  // namespace

ExampleLoss example_loss(const EmbeddingSpace& space, const TrainingExample& example,
                         const std::vector<std::vector<std::size_t>>& negatives, double margin) {
  if (negatives.size() != example.positive_labels.size()) {
    throw Error("INVALID_ARGUMENT", "need one negative list per positive label");
  }
  const Eigen::VectorXd doc = embed_document(space, example.input);
  ExampleLoss out;
  std::map<std::size_t, Eigen::VectorXd> label_grads;
  Eigen::VectorXd doc_grad = Eigen::VectorXd::Zero(doc.size());
  const auto accumulate = [&](std::size_t id, const Eigen::VectorXd& g) {
    auto [it, inserted] = label_grads.emplace(id, g);
    if (!inserted) it->second += g;
  };

  for (std::size_t p = 0; p < example.positive_labels.size(); ++p) {
    const std::size_t pos = example.positive_labels[p];
    std::vector<Eigen::VectorXd> neg_vectors;
    for (std::size_t n : negatives[p]) {
      if (std::find(example.positive_labels.begin(), example.positive_labels.end(), n) !=
          example.positive_labels.end()) {
        throw Error("INVALID_ARGUMENT", "negative label is also a positive");
      }
      neg_vectors.push_back(label_vector(space, n));
    }
    HingeResult h = hinge_loss(doc, label_vector(space, pos), neg_vectors, margin);
    out.loss += h.loss;
    doc_grad += h.grad_document;
    accumulate(pos, h.grad_positive);
    for (std::size_t i = 0; i < negatives[p].size(); ++i) accumulate(negatives[p][i], h.grad_negatives[i]);
  }
  for (const auto& [id, mult] : multiplicities(example.input)) {
    if (id < space.features().size()) out.feature_gradients.emplace_back(id, mult * doc_grad);
  }
  out.label_gradients.assign(label_grads.begin(), label_grads.end());
  return out;
}

TrainingResult train(const ExampleSet& set, const Hyperparams& params) {
  params.validate();
  TrainingResult result{EmbeddingSpace(set.setup, set.features, set.labels, params.dim, params.rng_seed), {}};
  EmbeddingSpace& space = result.space;
  if (params.epochs == 0 || set.examples.empty()) return result;

  // A second stream keeps sampling independent of the initialisation draws.
  std::mt19937_64 rng(params.rng_seed ^ 0x9e3779b97f4a7c15ull);
  const std::size_t n_labels = set.labels.size();
  std::uniform_int_distribution<std::size_t> any_label(0, n_labels - 1);

  std::size_t pairs_per_epoch = 0;
  for (const auto& ex : set.examples) pairs_per_epoch += ex.positive_labels.size();
  const double total_updates = static_cast<double>(pairs_per_epoch * params.epochs);
  std::size_t update = 0;

  std::vector<std::size_t> order(set.examples.size());
  std::iota(order.begin(), order.end(), 0);
  auto& features = space.feature_table();
  auto& labels = space.label_table();
  const auto d = static_cast<Eigen::Index>(params.dim);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const TrainingExample& ex = set.examples[idx];
      const auto bag = multiplicities(ex.input);
      for (std::size_t pos : ex.positive_labels) {
        std::vector<std::size_t> negs;
        for (std::size_t k = 0; k < params.negatives; ++k) {
          for (int attempt = 0; attempt < 100; ++attempt) {
            const std::size_t cand = any_label(rng);
            if (std::find(ex.positive_labels.begin(), ex.positive_labels.end(), cand) == ex.positive_labels.end()) {
              negs.push_back(cand);
              break;
            }
          }
        }

        Eigen::VectorXd doc = Eigen::VectorXd::Zero(d);
        for (const auto& [id, mult] : bag) doc += mult * features.row(static_cast<Eigen::Index>(id)).cast<double>().transpose();
        std::vector<Eigen::VectorXd> neg_vectors;
        neg_vectors.reserve(negs.size());
        for (std::size_t n : negs) neg_vectors.push_back(label_vector(space, n));
        const HingeResult h = hinge_loss(doc, label_vector(space, pos), neg_vectors, params.margin);

        const double lr = params.learning_rate * (1.0 - static_cast<double>(update) / total_updates);
        ++update;
        epoch_loss += h.loss;
        if (h.loss == 0.0) continue;
        for (const auto& [id, mult] : bag) {
          features.row(static_cast<Eigen::Index>(id)) -= (lr * mult * h.grad_document).cast<float>().transpose();
        }
        labels.row(static_cast<Eigen::Index>(pos)) -= (lr * h.grad_positive).cast<float>().transpose();
        for (std::size_t i = 0; i < negs.size(); ++i) {
          labels.row(static_cast<Eigen::Index>(negs[i])) -= (lr * h.grad_negatives[i]).cast<float>().transpose();
        }
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(pairs_per_epoch));
  }
  return result;
}

TrainingResult train_embeddings(const Corpus& corpus, Setup setup, const Hyperparams& params) {
  return train(build_examples(corpus, setup), params);
}

UserMatrix user_matrix(const EmbeddingSpace& space, const Corpus& corpus) {
  RowMatrixF rows(static_cast<Eigen::Index>(corpus.num_users()), static_cast<Eigen::Index>(space.dim()));
  for (std::size_t r = 0; r < corpus.num_users(); ++r) {
    auto id = space.labels().find(user_key(corpus.user_ids()[r]));
    if (!id) throw Error("UNKNOWN_USER", "user " + corpus.user_ids()[r] + " has no embedding");
    rows.row(static_cast<Eigen::Index>(r)) = space.label_table().row(static_cast<Eigen::Index>(*id));
  }
  return UserMatrix(corpus.user_ids(), std::move(rows), Provenance::Embedding);
}

std::vector<Neighbor> nearest(const EmbeddingSpace& space, const Eigen::VectorXd& query, Pool pool,
                              std::size_t top_k) {
  if (top_k < 1) throw Error("INVALID_ARGUMENT", "top_k must be at least 1");
  const bool from_features = pool == Pool::Features;
  const IdRegistry& registry = from_features ? space.features() : space.labels();
  const RowMatrixF& table = from_features ? space.feature_table() : space.label_table();

  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < registry.size(); ++i) {
    const std::string& name = registry.name(i);
    if (pool == Pool::Users && !name.starts_with("user:")) continue;
    all.push_back({name, cosine(query, table.row(static_cast<Eigen::Index>(i)).cast<double>().transpose())});
  }
  if (all.empty()) throw Error("INVALID_ARGUMENT", "empty pool");
  const auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.name < b.name;
  };
  const std::size_t k = std::min(top_k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

}  // namespace userscope
