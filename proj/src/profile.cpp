#include "userscope/profile.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "userscope/error.hpp"

namespace userscope {

std::string_view item_kind_name(ItemKind kind) {
  switch (kind) {
    case ItemKind::Word:
      return "word";
    case ItemKind::Concept:
      return "concept";
    case ItemKind::User:
      return "user";
  }
  return "word";
}

namespace {

void add_candidates(const Corpus& corpus, const EmbeddingSpace& space, std::size_t row,
                    std::map<std::string, ProfileItem>& into) {
  const auto add = [&](std::string id, ItemKind kind, const std::string& channel, const std::string& token,
                       std::size_t usage) {
    auto it = into.find(id);
    if (it != into.end()) {
      it->second.usage_count += usage;
      return;
    }
    auto vec = space.find(id);
    if (!vec) return;
    into.emplace(id, ProfileItem{id, kind, channel, token, usage, std::move(*vec)});
  };

  for (const auto& channel : corpus.channel_names()) {
    const ChannelIndex& index = corpus.channel(channel);
    const bool words = channel == kWordsChannel;
    for (const auto& tc : index.user_terms[row]) {
      const std::string& tok = index.vocabulary.token(tc.term);
      add(words ? word_key(tok) : concept_key(channel, tok), words ? ItemKind::Word : ItemKind::Concept, channel,
          tok, tc.count);
    }
  }
  for (const auto& [target, count] : interaction_targets(corpus, corpus.user_ids()[row])) {
    add(user_key(target), ItemKind::User, "user", target, count);
  }
}

std::vector<ProfileItem> flatten(std::map<std::string, ProfileItem> items) {
  std::vector<ProfileItem> out;
  out.reserve(items.size());
  for (auto& [_, item] : items) out.push_back(std::move(item));
  return out;
}

}  // namespace

std::vector<ProfileItem> candidate_set(const Corpus& corpus, const EmbeddingSpace& space, std::string_view user_id) {
  const User& user = corpus.user(user_id);
  std::map<std::string, ProfileItem> items;
  add_candidates(corpus, space, *corpus.user_row(user.user_id), items);
  return flatten(std::move(items));
}

double item_distance(const ProfileItem& a, const ProfileItem& b) { return 1.0 - cosine(a.vector, b.vector); }

std::vector<ItemScores> score_items(const std::vector<ProfileItem>& candidates,
                                    const std::vector<ProfileItem>& selected) {
  std::vector<ItemScores> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i].usage = static_cast<double>(candidates[i].usage_count);
    for (const auto& other : candidates) scores[i].representative += item_distance(candidates[i], other);
    for (const auto& other : selected) scores[i].diversity += item_distance(candidates[i], other);
  }
  return scores;
}

Ranking ordering(const std::vector<std::string>& ids) {
  Ranking r;
  r.reserve(ids.size());
  for (std::size_t p = 0; p < ids.size(); ++p) r.push_back({ids[p], p});
  return r;
}

Ranking rank_by_score(const std::vector<std::string>& ids, const std::vector<double>& scores, bool descending) {
  std::vector<std::size_t> idx(ids.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    return ids[a] < ids[b];
  });
  Ranking r;
  r.reserve(ids.size());
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const bool tied = p > 0 && scores[idx[p]] == scores[idx[p - 1]];
    r.push_back({ids[idx[p]], tied ? r.back().position : p});
  }
  return r;
}

std::vector<BordaEntry> borda_aggregate(const std::vector<Ranking>& rankings) {
  if (rankings.empty()) return {};
  std::map<std::string, double> points;
  for (const auto& item : rankings.front()) points.emplace(item.id, 0.0);
  const std::size_t m = rankings.front().size();
  if (points.size() != m) throw Error("RANKING_MISMATCH", "ranking repeats an item");

  for (const auto& ranking : rankings) {
    if (ranking.size() != m) throw Error("RANKING_MISMATCH", "rankings cover different item sets");
    std::set<std::string> seen;
    for (const auto& item : ranking) {
      auto it = points.find(item.id);
      if (it == points.end() || !seen.insert(item.id).second || item.position >= m) {
        throw Error("RANKING_MISMATCH", "rankings cover different item sets");
      }
      it->second += static_cast<double>(m - item.position);
    }
  }

  std::vector<BordaEntry> out;
  out.reserve(m);
  for (const auto& [id, p] : points) out.push_back({id, p});
  std::stable_sort(out.begin(), out.end(), [](const BordaEntry& a, const BordaEntry& b) { return a.points > b.points; });
  return out;
}

Profile select_profile(std::string subject, std::vector<ProfileItem> candidates, std::size_t nn) {
  std::sort(candidates.begin(), candidates.end(),
            [](const ProfileItem& a, const ProfileItem& b) { return a.id < b.id; });
  Profile profile{std::move(subject), {}, nn};

  // Pairwise distances once; sums are re-accumulated in candidate order each round.
  const std::size_t n = candidates.size();
  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = item_distance(candidates[i], candidates[j]);
  }

  std::vector<std::size_t> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::size_t> chosen;

  while (chosen.size() < nn && !remaining.empty()) {
    std::vector<std::string> ids;
    std::vector<double> su, sr, sd;
    for (std::size_t i : remaining) {
      ids.push_back(candidates[i].id);
      su.push_back(static_cast<double>(candidates[i].usage_count));
      double r = 0.0;
      for (std::size_t j : remaining) r += dist[i * n + j];
      sr.push_back(r);
      double d = 0.0;
      for (std::size_t j : chosen) d += dist[i * n + j];
      sd.push_back(d);
    }
    const auto final_order = borda_aggregate({rank_by_score(ids, su, true), rank_by_score(ids, sr, false),
                                              rank_by_score(ids, sd, true)});
    const std::string& winner = final_order.front().id;
    auto it = std::find_if(remaining.begin(), remaining.end(),
                           [&](std::size_t i) { return candidates[i].id == winner; });
    chosen.push_back(*it);
    remaining.erase(it);
  }

  for (std::size_t i : chosen) profile.items.push_back(candidates[i]);
  return profile;
}

Profile build_profile(const Corpus& corpus, const EmbeddingSpace& space, std::string_view user_id, std::size_t nn) {
  return select_profile(std::string(user_id), candidate_set(corpus, space, user_id), nn);
}

Profile build_group_profile(const Corpus& corpus, const EmbeddingSpace& space, std::string subject,
                            const std::vector<std::string>& members, std::size_t nn) {
  if (members.empty()) throw Error("EMPTY_COMMUNITY", "community " + subject + " has no members");
  std::map<std::string, ProfileItem> items;
  for (const auto& id : members) add_candidates(corpus, space, *corpus.user_row(corpus.user(id).user_id), items);
  return select_profile(std::move(subject), flatten(std::move(items)), nn);
}

Profile build_community_profile(const Corpus& corpus, const EmbeddingSpace& space,
                                const CommunityAssignment& communities, std::size_t community, std::size_t nn) {
  if (community >= communities.k) {
    throw Error("UNKNOWN_COMMUNITY", "no community " + std::to_string(community));
  }
  std::vector<std::string> members;
  for (std::size_t row : communities.members(community)) members.push_back(corpus.user_ids().at(row));
  return build_group_profile(corpus, space, "community:" + std::to_string(community), members, nn);
}

Profile ProfileCache::get_or_compute(const std::string& subject, std::uint64_t space_checksum, std::size_t nn,
                                     const std::function<Profile()>& compute) {
  auto key = std::make_tuple(subject, space_checksum, nn);
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  // Computed outside the lock; a concurrent duplicate computes the same value.
  Profile profile = compute();
  std::lock_guard lock(mutex_);
  return entries_.emplace(std::move(key), std::move(profile)).first->second;
}

std::size_t ProfileCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace userscope
