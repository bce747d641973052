#pragma once

#include <optional>
#include <string>
#include <vector>

#include "userscope/corpus.hpp"

namespace fixtures {

struct PostSpec {
  std::string user;
  std::string text;
  std::vector<std::string> visual_concepts = {};
  std::vector<std::string> entities = {};
  std::vector<std::string> hashtags = {};
  std::optional<std::string> reply_to = std::nullopt;
  std::optional<std::string> category = std::nullopt;
};

inline userscope::Post make_post(const std::string& id, const PostSpec& s) {
  userscope::Post p;
  p.post_id = id;
  p.user_id = s.user;
  p.text = s.text;
  p.channels["visual_concepts"] = s.visual_concepts;
  p.channels["entities"] = s.entities;
  p.channels["hashtags"] = s.hashtags;
  p.reply_to_user = s.reply_to;
  p.category = s.category;
  return p;
}

inline userscope::Corpus corpus(const std::vector<PostSpec>& specs, std::size_t min_posts = 1) {
  std::vector<userscope::Post> posts;
  for (std::size_t i = 0; i < specs.size(); ++i) posts.push_back(make_post("p" + std::to_string(i), specs[i]));
  return userscope::Corpus::from_posts(std::move(posts), min_posts);
}

// Ten users with overlapping vocabularies, concepts, replies and categories.
inline userscope::Corpus ten_users() {
  return corpus({
      {"alice", "flag march flag rally", {"flag", "crowd"}, {"Berlin"}, {"march"}, "bob", "politics"},
      {"alice", "rally tonight near the river", {"crowd"}, {}, {}, "carol", "politics"},
      {"bob", "the match was great great game", {"ball"}, {"Madrid"}, {"football"}, std::nullopt, "sport"},
      {"bob", "flag waving fans at the game", {"flag", "ball"}, {}, {"football"}, "alice", "sport"},
      {"carol", "recipe with garlic and basil", {"food"}, {"Italy"}, {"cooking"}, std::nullopt, "food"},
      {"carol", "garlic bread recipe", {"food", "bread"}, {}, {}, "dave", "food"},
      {"dave", "bread and river walk", {"bread", "river"}, {}, {}, "carol", "food"},
      {"dave", "walk walk walk", {}, {}, {"walking"}, std::nullopt, "food"},
      {"erin", "march for the river", {"crowd", "river"}, {"Berlin"}, {"march"}, "alice", "politics"},
      {"frank", "game night with fans", {"ball"}, {"Madrid"}, {"football"}, "bob", "sport"},
      {"frank", "great match", {}, {}, {}, "bob", "sport"},
      {"grace", "basil garden", {"plant"}, {}, {"garden"}, std::nullopt, "food"},
      {"heidi", "flag rally march", {"flag"}, {}, {"march"}, "erin", "politics"},
      {"ivan", "ball game fans match", {"ball", "crowd"}, {}, {"football"}, "frank", "sport"},
      {"judy", "garden river walk basil", {"plant", "river"}, {"Italy"}, {"garden"}, "grace", "food"},
      {"judy", "suspended reply", {}, {}, {}, "ghost", "food"},
  });
}

}  // namespace fixtures
