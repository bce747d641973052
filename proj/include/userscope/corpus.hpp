#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace userscope {

/// Reserved channel derived from post text.
inline constexpr std::string_view kWordsChannel = "words";

/// Annotation channels every corpus carries (possibly empty), in fusion order.
const std::vector<std::string>& standard_concept_channels();

struct Post {
  std::string post_id;
  std::string user_id;
  std::string text;
  /// Concept channel name -> tokens, e.g. "visual_concepts" -> {"dog", "flag"}.
  std::map<std::string, std::vector<std::string>> channels;
  std::optional<std::string> reply_to_user;
  std::optional<std::string> category;
};

struct User {
  std::string user_id;
  std::vector<std::string> post_ids;  // file order
  std::size_t post_count = 0;
  std::set<std::string> categories;
};

/// Aggregated reply/retweet edge. `external` marks targets that are not
/// retained users (suspended, filtered by min_posts, or never seen).
struct InteractionEdge {
  std::string from;
  std::string to;
  std::size_t count = 0;
  bool external = false;

  bool operator==(const InteractionEdge&) const = default;
};

/// Dense token ids in [0, size()) assigned in lexicographic token order.
/// Document frequency counts users, not posts.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> document_frequency);

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::size_t> id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t document_frequency(std::size_t id) const { return df_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && df_ == other.df_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> ids_;
};

struct TermCount {
  std::size_t term = 0;
  std::size_t count = 0;

  bool operator==(const TermCount&) const = default;
};

/// One channel viewed with the user as the document unit.
struct ChannelIndex {
  Vocabulary vocabulary;
  /// Indexed by user row; each list sorted by term id, counts >= 1.
  std::vector<std::vector<TermCount>> user_terms;

  bool operator==(const ChannelIndex&) const = default;
};

/// Immutable after construction; safe for concurrent readers.
class Corpus {
 public:
  Corpus() = default;

  /// Validates posts, drops users with fewer than `min_posts` posts and
  /// builds per-channel vocabularies and the interaction graph.
  static Corpus from_posts(std::vector<Post> posts, std::size_t min_posts);

  /// Retained user ids in ascending order; this is the canonical row order.
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  std::size_t num_users() const { return user_ids_.size(); }
  std::optional<std::size_t> user_row(std::string_view user_id) const;
  bool has_user(std::string_view user_id) const { return user_row(user_id).has_value(); }
  /// Throws Error{UNKNOWN_USER}.
  const User& user(std::string_view user_id) const;
  const User& user_at(std::size_t row) const { return users_.at(row); }

  /// Retained posts in input order.
  const std::vector<Post>& posts() const { return posts_; }
  const Post& post(std::string_view post_id) const;

  /// "words" first, then the standard concept channels, then any extra
  /// channels seen in the input in lexicographic order.
  const std::vector<std::string>& channel_names() const { return channel_names_; }
  std::vector<std::string> concept_channel_names() const;
  bool has_channel(std::string_view name) const;
  /// Throws Error{UNKNOWN_CHANNEL}.
  const ChannelIndex& channel(std::string_view name) const;

  const std::vector<InteractionEdge>& interaction_edges() const { return edges_; }
  /// Distinct post categories in ascending order.
  std::vector<std::string> categories() const;

  bool operator==(const Corpus& other) const;

 private:
  std::vector<std::string> user_ids_;
  std::vector<User> users_;
  std::unordered_map<std::string, std::size_t> user_rows_;
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> post_index_;
  std::vector<std::string> channel_names_;
  std::map<std::string, ChannelIndex, std::less<>> channels_;
  std::vector<InteractionEdge> edges_;
};

/// Lowercases and splits on every non-alphanumeric codepoint.
std::vector<std::string> tokenize(std::string_view text);

/// Parses one JSONL corpus line. Throws Error{MALFORMED_CORPUS}.
Post parse_post_json(std::string_view line);
std::string post_to_json(const Post& post);

Corpus load_corpus(std::istream& in, std::size_t min_posts = 3);
Corpus load_corpus(const std::string& path, std::size_t min_posts = 3);
void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::string& path);

/// R_U: reply/retweet targets of `user_id` with usage counts. External
/// targets are excluded. Throws Error{UNKNOWN_USER}.
std::map<std::string, std::size_t> interaction_targets(const Corpus& corpus,
                                                       std::string_view user_id);

struct SearchHit {
  std::string user_id;
  double score = 0.0;
};

/// Ranks users by the summed TFIDF weight of `query` tokens in `channel`
/// (descending, ties by ascending id). Users with zero weight are omitted.
/// Throws Error{UNKNOWN_CHANNEL}.
std::vector<SearchHit> search_users(const Corpus& corpus, const std::vector<std::string>& query,
                                    std::string_view channel);

struct SynthConfig {
  std::size_t n_communities = 4;
  std::size_t users_per_community = 50;
  std::size_t min_posts_per_user = 10;
  std::size_t max_posts_per_user = 30;
  std::size_t vocab_per_community = 50;
  std::size_t concepts_per_community = 20;
  /// Fraction of tokens (or topics, in contextual mode) drawn from a foreign community.
  double mixing = 0.1;
  /// One shared vocabulary; communities differ only in which word+concept
  /// combinations co-occur within posts.
  bool contextual_mode = false;
  std::uint64_t rng_seed = 0;

  std::size_t min_words_per_post = 6;
  std::size_t max_words_per_post = 12;
  double reply_probability = 0.3;
  double intra_community_reply = 0.8;
  /// Contextual mode only: topics per community and their size per channel.
  std::size_t topics_per_community = 6;
  std::size_t words_per_topic = 6;
  std::size_t concepts_per_topic = 3;

  /// Throws Error{INVALID_CONFIG}.
  void validate() const;
};

/// Deterministic given rng_seed. User i of community c gets category "c<c>".
Corpus generate_synthetic(const SynthConfig& config);

/// Community index of a synthetic user, parsed from its category "c<k>".
std::optional<std::size_t> synthetic_community(const User& user);

}  // namespace userscope
