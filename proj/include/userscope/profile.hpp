#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "userscope/corpus.hpp"
#include "userscope/embed.hpp"
#include "userscope/vectorize.hpp"

namespace userscope {

enum class ItemKind { Word, Concept, User };

std::string_view item_kind_name(ItemKind kind);

/// A candidate summary item. `id` is the embedding registry name
/// ("words:flag", "hashtags:x", "user:u1") and doubles as the tie-break key.
struct ProfileItem {
  std::string id;
  ItemKind kind = ItemKind::Word;
  std::string channel;  // "words", a concept channel, or "user"
  std::string token;    // display form without the channel prefix
  std::size_t usage_count = 0;
  Eigen::VectorXd vector;
};

struct Profile {
  std::string subject;
  std::vector<ProfileItem> items;  // selection order
  std::size_t nn = 0;
};

/// W_U + C_U + R_U for one user with usage counts, sorted by id. Items
/// without an embedding are dropped. Throws Error{UNKNOWN_USER}.
std::vector<ProfileItem> candidate_set(const Corpus& corpus, const EmbeddingSpace& space, std::string_view user_id);

/// Cosine distance in the joint space.
double item_distance(const ProfileItem& a, const ProfileItem& b);

struct ItemScores {
  double usage = 0.0;           // SU
  double representative = 0.0;  // SR: summed distance to every candidate
  double diversity = 0.0;       // SD: summed distance to the selected items
};

std::vector<ItemScores> score_items(const std::vector<ProfileItem>& candidates,
                                    const std::vector<ProfileItem>& selected);

/// One ranking; tied items share the position of their first member.
struct RankedItem {
  std::string id;
  std::size_t position = 0;
};
using Ranking = std::vector<RankedItem>;

/// Plain ordering with positions 0..m-1.
Ranking ordering(const std::vector<std::string>& ids);

/// Sorts by score (then id) and gives equal scores a shared position.
Ranking rank_by_score(const std::vector<std::string>& ids, const std::vector<double>& scores, bool descending);

struct BordaEntry {
  std::string id;
  double points = 0.0;
};

/// Position p of m items earns m - p points per ranking. Result sorted by
/// descending points, ties by ascending id. Throws Error{RANKING_MISMATCH}
/// when rankings cover different item sets.
std::vector<BordaEntry> borda_aggregate(const std::vector<Ranking>& rankings);

/// Greedy selection over a prepared candidate set: each round ranks by
/// descending usage, ascending representativeness distance and descending
/// diversity distance, aggregates with Borda and moves the winner to the profile.
Profile select_profile(std::string subject, std::vector<ProfileItem> candidates, std::size_t nn);

Profile build_profile(const Corpus& corpus, const EmbeddingSpace& space, std::string_view user_id, std::size_t nn);

struct CommunityAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // by user row
  Eigen::MatrixXd centroids;            // k x d, in normalised space
  std::vector<double> objective_trace;  // within-cluster sum of squares per iteration

  std::vector<std::size_t> members(std::size_t community) const;
};

/// k-means on L2-normalised rows with k-means++ seeding; at most 100 Lloyd
/// iterations or until no centroid moves more than 1e-6.
/// Throws Error{INVALID_ARGUMENT} unless 1 <= k <= n_users.
CommunityAssignment detect_communities(const UserMatrix& users, std::size_t k, std::uint64_t seed);

/// Candidate union over `members` with usage counts summed. Throws
/// Error{EMPTY_COMMUNITY} when `members` is empty.
Profile build_group_profile(const Corpus& corpus, const EmbeddingSpace& space, std::string subject,
                            const std::vector<std::string>& members, std::size_t nn);

/// Throws Error{UNKNOWN_COMMUNITY} for an out-of-range index and
/// Error{EMPTY_COMMUNITY} for a community without members.
Profile build_community_profile(const Corpus& corpus, const EmbeddingSpace& space,
                                const CommunityAssignment& communities, std::size_t community, std::size_t nn);

/// Memoises profiles per (subject, space checksum, nn). Safe for concurrent use.
class ProfileCache {
 public:
  Profile get_or_compute(const std::string& subject, std::uint64_t space_checksum, std::size_t nn,
                         const std::function<Profile()>& compute);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::tuple<std::string, std::uint64_t, std::size_t>, Profile> entries_;
};

}  // namespace userscope
