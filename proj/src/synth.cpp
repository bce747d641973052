#include <cstdio>
#include <random>

#include "userscope/corpus.hpp"
#include "userscope/error.hpp"

namespace userscope {

void SynthConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error("INVALID_CONFIG", what);
  };
  require(n_communities > 0, "n_communities must be positive");
  require(users_per_community > 0, "users_per_community must be positive");
  require(min_posts_per_user > 0 && min_posts_per_user <= max_posts_per_user, "invalid posts-per-user range");
  require(vocab_per_community > 0, "vocab_per_community must be positive");
  require(concepts_per_community > 0, "concepts_per_community must be positive");
  require(mixing >= 0.0 && mixing <= 1.0, "mixing must lie in [0, 1]");
  require(min_words_per_post > 0 && min_words_per_post <= max_words_per_post, "invalid words-per-post range");
  require(reply_probability >= 0.0 && reply_probability <= 1.0, "reply_probability must lie in [0, 1]");
  require(intra_community_reply >= 0.0 && intra_community_reply <= 1.0,
          "intra_community_reply must lie in [0, 1]");
  if (contextual_mode) {
    require(topics_per_community > 0, "topics_per_community must be positive");
    require(words_per_topic > 0 && words_per_topic <= vocab_per_community,
            "words_per_topic must lie in [1, vocab_per_community]");
    require(concepts_per_topic > 0 && concepts_per_topic <= concepts_per_community,
            "concepts_per_topic must lie in [1, concepts_per_community]");
  }
}

namespace {

struct ChannelShape {
  const char* name;
  const char* prefix;
  std::size_t max_per_post;
};

// Visual concepts mirror a "top 5 concepts per image" annotation.
constexpr ChannelShape kShapes[] = {
    {"visual_concepts", "vc", 5},
    {"entities", "en", 3},
    {"hashtags", "ht", 2},
};

std::string padded(std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, value);
  return buf;
}

class Generator {
 public:
  explicit Generator(const SynthConfig& config) : cfg_(config), rng_(config.rng_seed) {}

  Corpus run() {
    const std::size_t k = cfg_.n_communities;
    const std::size_t m = cfg_.users_per_community;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < m; ++i) user_ids_.push_back("u" + padded(c * m + i, 5));
    }
    if (cfg_.contextual_mode) build_topics();

    std::vector<Post> posts;
    std::uniform_int_distribution<std::size_t> n_posts(cfg_.min_posts_per_user, cfg_.max_posts_per_user);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t g = c * m + i;
        const std::size_t count = n_posts(rng_);
        for (std::size_t p = 0; p < count; ++p) {
          Post post;
          post.post_id = user_ids_[g] + "_p" + padded(p, 3);
          post.user_id = user_ids_[g];
          post.category = "c" + std::to_string(c);
          if (cfg_.contextual_mode) {
            fill_contextual(post, c);
          } else {
            fill_disjoint(post, c);
          }
          maybe_reply(post, c, i);
          posts.push_back(std::move(post));
        }
      }
    }
    return Corpus::from_posts(std::move(posts), 1);
  }

 private:
  struct Topic {
    std::vector<std::size_t> words;
    std::vector<std::vector<std::size_t>> concepts;  // per channel shape
  };

  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  // Community that supplies the next token or topic.
  std::size_t source_community(std::size_t own) {
    const std::size_t k = cfg_.n_communities;
    if (k == 1 || !coin(cfg_.mixing)) return own;
    std::size_t other = uniform(0, k - 2);
    return other >= own ? other + 1 : other;
  }

  // Zipf-like popularity inside a pool so that every community has frequent items.
  std::size_t zipf(std::size_t n) {
    auto& dist = zipf_cache_[n];
    if (dist.probabilities().size() != n) {
      std::vector<double> w(n);
      for (std::size_t j = 0; j < n; ++j) w[j] = 1.0 / static_cast<double>(j + 1);
      dist = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }
    return dist(rng_);
  }

  void fill_disjoint(Post& post, std::size_t c) {
    const std::size_t n_words = uniform(cfg_.min_words_per_post, cfg_.max_words_per_post);
    for (std::size_t w = 0; w < n_words; ++w) {
      if (w) post.text += ' ';
      post.text += "c" + std::to_string(source_community(c)) + "w" + std::to_string(zipf(cfg_.vocab_per_community));
    }
    for (const auto& shape : kShapes) {
      auto& tokens = post.channels[shape.name];
      const std::size_t n = uniform(0, shape.max_per_post);
      for (std::size_t t = 0; t < n; ++t) {
        tokens.push_back("c" + std::to_string(source_community(c)) + shape.prefix +
                         std::to_string(zipf(cfg_.concepts_per_community)));
      }
    }
  }

  void build_topics() {
    topics_.resize(cfg_.n_communities);
    for (auto& community : topics_) {
      community.resize(cfg_.topics_per_community);
      for (auto& topic : community) {
        topic.words = sample_distinct(cfg_.vocab_per_community, cfg_.words_per_topic);
        for (std::size_t s = 0; s < std::size(kShapes); ++s) {
          topic.concepts.push_back(sample_distinct(cfg_.concepts_per_community, cfg_.concepts_per_topic));
        }
      }
    }
  }

  std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t count) {
    std::vector<std::size_t> all(n);
    for (std::size_t j = 0; j < n; ++j) all[j] = j;
    for (std::size_t j = 0; j < count; ++j) std::swap(all[j], all[uniform(j, n - 1)]);
    all.resize(count);
    return all;
  }

  // Shared vocabulary: the community is only visible through which words
  // and concepts are drawn together from the same topic.
  void fill_contextual(Post& post, std::size_t c) {
    const Topic& topic = topics_[source_community(c)][uniform(0, cfg_.topics_per_community - 1)];
    const std::size_t n_words = uniform(cfg_.min_words_per_post, cfg_.max_words_per_post);
    for (std::size_t w = 0; w < n_words; ++w) {
      if (w) post.text += ' ';
      post.text += "w" + std::to_string(topic.words[uniform(0, topic.words.size() - 1)]);
    }
    for (std::size_t s = 0; s < std::size(kShapes); ++s) {
      auto& tokens = post.channels[kShapes[s].name];
      const std::size_t n = uniform(1, kShapes[s].max_per_post);
      const auto& pool = topic.concepts[s];
      for (std::size_t t = 0; t < n; ++t) {
        tokens.push_back(kShapes[s].prefix + std::to_string(pool[uniform(0, pool.size() - 1)]));
      }
    }
  }

  void maybe_reply(Post& post, std::size_t c, std::size_t i) {
    if (!coin(cfg_.reply_probability)) return;
    const std::size_t k = cfg_.n_communities;
    const std::size_t m = cfg_.users_per_community;
    const bool intra = (k == 1 || coin(cfg_.intra_community_reply)) && m > 1;
    std::size_t target;
    if (intra || k == 1) {
      if (m == 1) return;
      std::size_t j = uniform(0, m - 2);
      target = c * m + (j >= i ? j + 1 : j);
    } else {
      std::size_t other = uniform(0, k - 2);
      if (other >= c) ++other;
      target = other * m + uniform(0, m - 1);
    }
    post.reply_to_user = user_ids_[target];
  }

  const SynthConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<std::string> user_ids_;
  std::vector<std::vector<Topic>> topics_;
  std::map<std::size_t, std::discrete_distribution<std::size_t>> zipf_cache_;
};

}  // namespace

Corpus generate_synthetic(const SynthConfig& config) {
  config.validate();
  return Generator(config).run();
}

std::optional<std::size_t> synthetic_community(const User& user) {
  if (user.categories.size() != 1) return std::nullopt;
  const std::string& cat = *user.categories.begin();
  if (cat.size() < 2 || cat[0] != 'c') return std::nullopt;
  try {
    return static_cast<std::size_t>(std::stoul(cat.substr(1)));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace userscope
