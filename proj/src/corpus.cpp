#include "userscope/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "userscope/error.hpp"

namespace userscope {

using nlohmann::json;

const std::vector<std::string>& standard_concept_channels() {
  static const std::vector<std::string> channels = {"visual_concepts", "entities", "hashtags"};
  return channels;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> document_frequency)
    : tokens_(std::move(tokens)), df_(std::move(document_frequency)) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], i);
}

std::optional<std::size_t> Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

namespace {

// Decodes one UTF-8 codepoint starting at `pos`; invalid bytes decode as
// themselves so tokenization never fails.
char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  unsigned char c = byte(pos);
  std::size_t len = 1;
  char32_t cp = c;
  if (c >= 0xF0 && c < 0xF8) {
    len = 4;
    cp = c & 0x07;
  } else if (c >= 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if (c >= 0xC0) {
    len = 2;
    cp = c & 0x1F;
  }
  if (len == 1 || pos + len > s.size()) {
    ++pos;
    return c;
  }
  for (std::size_t i = 1; i < len; ++i) {
    if ((byte(pos + i) & 0xC0) != 0x80) {
      ++pos;
      return c;
    }
    cp = (cp << 6) | (byte(pos + i) & 0x3F);
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Non-ASCII codepoints count as letters except for the common punctuation,
// symbol and space blocks.
bool is_alnum(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, arrows, math, box drawing
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp >= 0xFF1A && cp <= 0xFF20) return false;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji
  if (cp == 0xFEFF) return false;
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error("MALFORMED_CORPUS", "line " + std::to_string(line) + ": " + what);
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error("MALFORMED_CORPUS", std::string(key) + " must be a string or null");
  return it->get<std::string>();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = decode_utf8(text, pos);
    if (is_alnum(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Post parse_post_json(std::string_view line) {
  json obj = json::parse(line.begin(), line.end());
  if (!obj.is_object()) throw Error("MALFORMED_CORPUS", "expected a JSON object");

  Post post;
  const auto required = [&](const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
      throw Error("MALFORMED_CORPUS", std::string("missing string field ") + key);
    }
    return it->get<std::string>();
  };
  post.post_id = required("post_id");
  post.user_id = required("user_id");
  if (post.post_id.empty()) throw Error("MALFORMED_CORPUS", "empty post_id");
  if (post.user_id.empty()) throw Error("MALFORMED_CORPUS", "empty user_id");
  if (auto it = obj.find("text"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw Error("MALFORMED_CORPUS", "text must be a string");
    post.text = it->get<std::string>();
  }
  post.reply_to_user = optional_string(obj, "reply_to_user");
  post.category = optional_string(obj, "category");

  for (const auto& name : standard_concept_channels()) post.channels[name];
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    if (key == "post_id" || key == "user_id" || key == "text" || key == "reply_to_user" ||
        key == "category" || key == kWordsChannel) {
      continue;
    }
    if (it->is_null()) continue;
    if (!it->is_array()) {
      if (post.channels.contains(key)) throw Error("MALFORMED_CORPUS", key + " must be a list");
      continue;  // unrelated scalar metadata
    }
    auto& tokens = post.channels[key];
    for (const auto& tok : *it) {
      if (!tok.is_string()) throw Error("MALFORMED_CORPUS", key + " must contain strings");
      auto value = tok.get<std::string>();
      if (value.empty()) throw Error("MALFORMED_CORPUS", key + " contains an empty token");
      tokens.push_back(std::move(value));
    }
  }
  return post;
}

std::string post_to_json(const Post& post) {
  // ordered_json keeps the documented key order in written files.
  nlohmann::ordered_json obj;
  obj["post_id"] = post.post_id;
  obj["user_id"] = post.user_id;
  obj["text"] = post.text;
  for (const auto& name : standard_concept_channels()) {
    auto it = post.channels.find(name);
    obj[name] = it == post.channels.end() ? std::vector<std::string>{} : it->second;
  }
  for (const auto& [name, tokens] : post.channels) {
    if (!obj.contains(name)) obj[name] = tokens;
  }
  obj["reply_to_user"] = post.reply_to_user ? json(*post.reply_to_user) : json(nullptr);
  obj["category"] = post.category ? json(*post.category) : json(nullptr);
  return obj.dump();
}

Corpus Corpus::from_posts(std::vector<Post> posts, std::size_t min_posts) {
  {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < posts.size(); ++i) {
      if (!seen.emplace(posts[i].post_id, i).second) {
        throw Error("DUPLICATE_POST", "duplicate post_id " + posts[i].post_id);
      }
    }
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& p : posts) ++counts[p.user_id];

  Corpus corpus;
  for (const auto& [id, n] : counts) {
    if (n >= min_posts) corpus.user_ids_.push_back(id);
  }
  corpus.users_.resize(corpus.user_ids_.size());
  for (std::size_t row = 0; row < corpus.user_ids_.size(); ++row) {
    corpus.user_rows_.emplace(corpus.user_ids_[row], row);
    corpus.users_[row].user_id = corpus.user_ids_[row];
  }

  std::set<std::string> extra_channels;
  for (auto& p : posts) {
    auto row = corpus.user_row(p.user_id);
    if (!row) continue;
    User& u = corpus.users_[*row];
    u.post_ids.push_back(p.post_id);
    ++u.post_count;
    if (p.category) u.categories.insert(*p.category);
    for (const auto& name : standard_concept_channels()) p.channels[name];
    for (const auto& [name, _] : p.channels) extra_channels.insert(name);
    corpus.post_index_.emplace(p.post_id, corpus.posts_.size());
    corpus.posts_.push_back(std::move(p));
  }

  corpus.channel_names_.emplace_back(kWordsChannel);
  for (const auto& name : standard_concept_channels()) {
    corpus.channel_names_.push_back(name);
    extra_channels.erase(name);
  }
  for (const auto& name : extra_channels) corpus.channel_names_.push_back(name);

  // Per channel: user -> token -> count, then dense vocabulary ids.
  const std::size_t n_users = corpus.user_ids_.size();
  for (const auto& name : corpus.channel_names_) {
    std::vector<std::map<std::string, std::size_t>> per_user(n_users);
    for (const auto& p : corpus.posts_) {
      auto& bag = per_user[corpus.user_rows_.at(p.user_id)];
      if (name == kWordsChannel) {
        for (auto& tok : tokenize(p.text)) ++bag[tok];
      } else if (auto it = p.channels.find(name); it != p.channels.end()) {
        for (const auto& tok : it->second) ++bag[tok];
      }
    }
    std::map<std::string, std::size_t> df;
    for (const auto& bag : per_user) {
      for (const auto& [tok, _] : bag) ++df[tok];
    }
    std::vector<std::string> tokens;
    std::vector<std::size_t> freqs;
    for (const auto& [tok, f] : df) {
      tokens.push_back(tok);
      freqs.push_back(f);
    }
    ChannelIndex index{Vocabulary(std::move(tokens), std::move(freqs)), {}};
    index.user_terms.resize(n_users);
    for (std::size_t row = 0; row < n_users; ++row) {
      for (const auto& [tok, c] : per_user[row]) {
        index.user_terms[row].push_back({*index.vocabulary.id(tok), c});
      }
    }
    corpus.channels_.emplace(name, std::move(index));
  }

  std::map<std::pair<std::string, std::string>, std::size_t> edge_counts;
  for (const auto& p : corpus.posts_) {
    if (p.reply_to_user && !p.reply_to_user->empty()) ++edge_counts[{p.user_id, *p.reply_to_user}];
  }
  for (const auto& [key, c] : edge_counts) {
    corpus.edges_.push_back({key.first, key.second, c, !corpus.has_user(key.second)});
  }
  return corpus;
}

std::optional<std::size_t> Corpus::user_row(std::string_view user_id) const {
  auto it = user_rows_.find(std::string(user_id));
  if (it == user_rows_.end()) return std::nullopt;
  return it->second;
}

const User& Corpus::user(std::string_view user_id) const {
  auto row = user_row(user_id);
  if (!row) throw Error("UNKNOWN_USER", "unknown user " + std::string(user_id));
  return users_[*row];
}

const Post& Corpus::post(std::string_view post_id) const {
  auto it = post_index_.find(std::string(post_id));
  if (it == post_index_.end()) throw Error("UNKNOWN_POST", "unknown post " + std::string(post_id));
  return posts_[it->second];
}

std::vector<std::string> Corpus::concept_channel_names() const {
  return {channel_names_.begin() + 1, channel_names_.end()};
}

bool Corpus::has_channel(std::string_view name) const { return channels_.find(name) != channels_.end(); }

const ChannelIndex& Corpus::channel(std::string_view name) const {
  auto it = channels_.find(name);
  if (it == channels_.end()) throw Error("UNKNOWN_CHANNEL", "unknown channel " + std::string(name));
  return it->second;
}

std::vector<std::string> Corpus::categories() const {
  std::set<std::string> all;
  for (const auto& u : users_) all.insert(u.categories.begin(), u.categories.end());
  return {all.begin(), all.end()};
}

bool Corpus::operator==(const Corpus& other) const {
  if (user_ids_ != other.user_ids_ || channel_names_ != other.channel_names_ || edges_ != other.edges_ ||
      posts_.size() != other.posts_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    const Post& a = posts_[i];
    const Post& b = other.posts_[i];
    if (a.post_id != b.post_id || a.user_id != b.user_id || a.text != b.text || a.channels != b.channels ||
        a.reply_to_user != b.reply_to_user || a.category != b.category) {
      return false;
    }
  }
  for (std::size_t i = 0; i < users_.size(); ++i) {
    if (users_[i].post_ids != other.users_[i].post_ids || users_[i].categories != other.users_[i].categories) {
      return false;
    }
  }
  for (const auto& [name, index] : channels_) {
    if (!(index == other.channel(name))) return false;
  }
  return true;
}

Corpus load_corpus(std::istream& in, std::size_t min_posts) {
  std::vector<Post> posts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      posts.push_back(parse_post_json(line));
    } catch (const json::exception& e) {
      malformed(line_no, e.what());
    } catch (const Error& e) {
      malformed(line_no, e.what());
    }
  }
  return Corpus::from_posts(std::move(posts), min_posts);
}

Corpus load_corpus(const std::string& path, std::size_t min_posts) {
  std::ifstream in(path);
  if (!in) throw Error("IO_ERROR", "cannot open " + path);
  return load_corpus(in, min_posts);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& p : corpus.posts()) out << post_to_json(p) << '\n';
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IO_ERROR", "cannot write " + path);
  write_corpus(corpus, out);
}

std::map<std::string, std::size_t> interaction_targets(const Corpus& corpus, std::string_view user_id) {
  corpus.user(user_id);
  std::map<std::string, std::size_t> targets;
  for (const auto& e : corpus.interaction_edges()) {
    if (e.from == user_id && !e.external) targets[e.to] += e.count;
  }
  return targets;
}

}  // namespace userscope
