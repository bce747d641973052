#include <algorithm>

#include "userscope/corpus.hpp"
#include "userscope/error.hpp"
#include "userscope/vectorize.hpp"

namespace userscope {

std::vector<SearchHit> search_users(const Corpus& corpus, const std::vector<std::string>& query,
                                    std::string_view channel) {
  const ChannelIndex& index = corpus.channel(channel);
  std::vector<std::size_t> terms;
  for (const auto& tok : query) {
    if (auto id = index.vocabulary.id(tok)) terms.push_back(*id);
  }

  std::vector<SearchHit> hits;
  if (terms.empty()) return hits;
  for (std::size_t u = 0; u < corpus.num_users(); ++u) {
    const auto& row = index.user_terms[u];
    double score = 0.0;
    for (std::size_t term : terms) {
      auto it = std::lower_bound(row.begin(), row.end(), term,
                                 [](const TermCount& tc, std::size_t t) { return tc.term < t; });
      if (it != row.end() && it->term == term) {
        score += tfidf_weight(static_cast<double>(it->count), corpus.num_users(),
                              index.vocabulary.document_frequency(term));
      }
    }
    if (score > 0.0) hits.push_back({corpus.user_ids()[u], score});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    return a.score != b.score ? a.score > b.score : a.user_id < b.user_id;
  });
  return hits;
}

}  // namespace userscope
