#include "userscope/server.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

#include <httplib.h>

#include "userscope/error.hpp"

namespace userscope {

using nlohmann::json;

std::vector<std::array<double, 2>> layout_2d(const UserMatrix& users) {
  if (users.num_users() < 2) throw Error("INVALID_ARGUMENT", "layout needs at least 2 users");
  const Eigen::MatrixXd data = users.vectors().cast<double>();
  const PcaModel model = pca_fit(data, 2);
  const Eigen::MatrixXd projected = pca_transform(model, data);

  std::vector<std::array<double, 2>> points(users.num_users(), {0.5, 0.5});
  for (Eigen::Index axis = 0; axis < projected.cols(); ++axis) {
    const double lo = projected.col(axis).minCoeff();
    const double hi = projected.col(axis).maxCoeff();
    const double span = hi - lo;
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
      points[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] =
          span > 1e-12 ? std::clamp((projected(i, axis) - lo) / span, 0.0, 1.0) : 0.5;
    }
  }
  return points;
}

AppState::AppState(Corpus corpus, ServerOptions options) : corpus_(std::move(corpus)), options_(std::move(options)) {
  if (corpus_.num_users() < 2) throw Error("INVALID_ARGUMENT", "server needs a corpus with at least 2 users");

  // Profiles need the joint space even when sessions run on TFIDF vectors.
  const Setup setup = options_.representation == "wuc" ? Setup::WordsToUserConcepts : Setup::ConceptsWordsToUser;
  if (options_.representation != "tfidf" && options_.representation != "cwu" && options_.representation != "wuc") {
    throw Error("UNKNOWN_REPRESENTATION", "unknown representation " + options_.representation);
  }
  Hyperparams params = options_.embedding;
  params.rng_seed = options_.seed;
  space_ = train_embeddings(corpus_, setup, params).space;

  representations_["tfidf"] = std::make_shared<const UserMatrix>(
      build_tfidf_representation(corpus_, corpus_.channel_names(), options_.tfidf));
  representations_[std::string(setup_name(setup))] = std::make_shared<const UserMatrix>(user_matrix(space_, corpus_));

  const auto& primary = *representations_.at(options_.representation);
  std::size_t k = options_.communities.value_or(corpus_.categories().empty() ? 10 : corpus_.categories().size());
  k = std::clamp<std::size_t>(k, 1, corpus_.num_users());
  communities_ = detect_communities(primary, k, options_.seed);
  layout_ = layout_2d(primary);
}

std::shared_ptr<const UserMatrix> AppState::representation(const std::string& name) const {
  auto it = representations_.find(name);
  if (it == representations_.end()) {
    throw Error("UNKNOWN_REPRESENTATION", "representation " + name + " is not loaded");
  }
  return it->second;
}

std::vector<std::string> AppState::representation_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : representations_) names.push_back(name);
  return names;
}

std::string AppState::create_session(const std::string& representation) {
  auto rep = this->representation(representation);
  std::lock_guard lock(sessions_mutex_);
  const std::uint64_t n = next_session_++;
  char id[32];
  std::snprintf(id, sizeof id, "s%06llu", static_cast<unsigned long long>(n));
  auto entry = std::shared_ptr<SessionEntry>(
      new SessionEntry{{}, Session(rep, options_.top_n, options_.seed + n), std::chrono::steady_clock::now()});
  sessions_.emplace(id, std::move(entry));
  return id;
}

std::shared_ptr<AppState::SessionEntry> AppState::session(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error("UNKNOWN_SESSION", "unknown session " + id);
  return it->second;
}

bool AppState::delete_session(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.erase(id) > 0;
}

std::size_t AppState::expire_sessions(std::chrono::steady_clock::time_point now) {
  std::lock_guard lock(sessions_mutex_);
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock entry_lock(it->second->mutex, std::try_to_lock);
    if (entry_lock.owns_lock() && now - it->second->last_used > options_.session_ttl) {
      entry_lock.unlock();
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::size_t AppState::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

namespace {

ApiResponse error_response(const std::string& code, const std::string& message) {
  return {Api::status_for(code), json{{"code", code}, {"message", message}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : path) {
    if (c == '/') {
      if (!current.empty()) parts.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

std::optional<std::string> param(const std::map<std::string, std::string>& query, const std::string& key) {
  auto it = query.find(key);
  if (it == query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::size_t parse_count(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(what);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error("BAD_REQUEST", std::string("invalid ") + what + ": " + text);
  }
}

}  // namespace

int Api::status_for(const std::string& code) {
  static const std::map<std::string, int> statuses = {
      {"BAD_REQUEST", 400},          {"UNKNOWN_CHANNEL", 400},  {"UNKNOWN_REPRESENTATION", 400},
      {"INVALID_ARGUMENT", 400},     {"UNKNOWN_USER", 404},     {"UNKNOWN_SESSION", 404},
      {"UNKNOWN_COMMUNITY", 404},    {"NOT_FOUND", 404},        {"METHOD_NOT_ALLOWED", 405},
      {"NEED_BOTH_CLASSES", 409},    {"EMPTY_COMMUNITY", 409},  {"NO_EMBEDDABLE_CONTENT", 422},
  };
  auto it = statuses.find(code);
  return it == statuses.end() ? 500 : it->second;
}

ApiResponse Api::handle(const std::string& method, const std::string& path,
                        const std::map<std::string, std::string>& query, const std::string& body) {
  try {
    // Reads leave every piece of state untouched, including idle timers.
    if (method != "GET") state_.expire_sessions(std::chrono::steady_clock::now());
    const auto parts = split_path(path);
    const auto is = [&](std::initializer_list<const char*> shape) {
      if (parts.size() != shape.size()) return false;
      std::size_t i = 0;
      for (const char* s : shape) {
        if (s[0] != '*' && parts[i] != s) return false;
        ++i;
      }
      return true;
    };

    if (method == "GET" && is({"overview"})) return overview(query);
    if (method == "GET" && is({"users"})) return users(query);
    if (method == "GET" && is({"users", "*", "profile"})) return user_profile(parts[1], query);
    if (method == "GET" && is({"communities", "*", "profile"})) return community_profile(parts[1], query);
    if (method == "POST" && is({"sessions"})) return create_session(body);
    if (method == "DELETE" && is({"sessions", "*"})) return delete_session(parts[1]);
    if (method == "POST" && is({"sessions", "*", "judgments"})) return add_judgments(parts[1], body);
    if (method == "POST" && is({"sessions", "*", "rank"})) return rank(parts[1]);
    if (method == "GET" && is({"sessions", "*", "bootstrap"})) return bootstrap(parts[1], query);
    return error_response("NOT_FOUND", "no route for " + method + " " + path);
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const json::exception& e) {
    return error_response("BAD_REQUEST", e.what());
  } catch (const std::exception& e) {
    return error_response("INTERNAL", e.what());
  }
}

std::size_t Api::nn_param(const std::map<std::string, std::string>& query) const {
  auto nn = param(query, "nn");
  return nn ? parse_count(*nn, "nn") : state_.options().default_nn;
}

ApiResponse Api::overview(const std::map<std::string, std::string>& query) {
  const Corpus& corpus = state_.corpus();
  std::shared_ptr<AppState::SessionEntry> entry;
  if (auto id = param(query, "session")) entry = state_.session(*id);

  std::optional<RankResult> result;
  std::map<std::string, Judgment> judgments;
  std::shared_ptr<const UserMatrix> rep;
  if (entry) {
    std::lock_guard lock(entry->mutex);
    result = entry->session.last_result();
    judgments = entry->session.judgments();
    rep = entry->session.representation_ptr();
  }

  // Scores are min-max normalised for node colouring.
  double lo = 0.0, hi = 0.0;
  if (result && !result->scores.empty()) {
    lo = *std::min_element(result->scores.begin(), result->scores.end());
    hi = *std::max_element(result->scores.begin(), result->scores.end());
  }
  std::set<std::string> highlighted;
  if (result) highlighted.insert(result->top.begin(), result->top.end());

  json users = json::array();
  for (std::size_t r = 0; r < corpus.num_users(); ++r) {
    const std::string& id = corpus.user_ids()[r];
    json u{{"id", id},
           {"x", state_.layout()[r][0]},
           {"y", state_.layout()[r][1]},
           {"community", state_.communities().assignment[r]},
           {"post_count", corpus.user_at(r).post_count},
           {"judged", judgments.contains(id)},
           {"highlighted", highlighted.contains(id)}};
    if (auto it = judgments.find(id); it != judgments.end()) u["relevant"] = it->second.relevant;
    if (result) {
      const double raw = result->scores[*rep->row(id)];
      u["score"] = hi > lo ? (raw - lo) / (hi - lo) : 0.0;
    }
    users.push_back(std::move(u));
  }
  json out{{"users", std::move(users)}, {"communities", state_.communities().k}};
  if (result) out["round"] = result->round;
  return {200, std::move(out)};
}

ApiResponse Api::users(const std::map<std::string, std::string>& query) {
  const Corpus& corpus = state_.corpus();
  const std::string channel = param(query, "channel").value_or(std::string(kWordsChannel));
  const auto category = param(query, "category");
  const std::size_t page = param(query, "page") ? parse_count(*param(query, "page"), "page") : 0;
  corpus.channel(channel);

  std::vector<std::pair<std::string, std::optional<double>>> hits;
  if (auto q = param(query, "query")) {
    // Free text for words; concept channels take comma/space separated tokens verbatim.
    std::vector<std::string> tokens;
    if (channel == kWordsChannel) {
      tokens = tokenize(*q);
    } else {
      std::string cur;
      for (char c : *q + ",") {
        if (c == ',' || c == ' ') {
          if (!cur.empty()) tokens.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
    }
    for (auto& h : search_users(corpus, tokens, channel)) hits.emplace_back(h.user_id, h.score);
  } else {
    for (const auto& id : corpus.user_ids()) hits.emplace_back(id, std::nullopt);
  }
  if (category) {
    std::erase_if(hits, [&](const auto& h) { return !corpus.user(h.first).categories.contains(*category); });
  }

  const std::size_t size = state_.options().page_size;
  json users = json::array();
  for (std::size_t i = page * size; i < std::min(hits.size(), (page + 1) * size); ++i) {
    const User& u = corpus.user(hits[i].first);
    json item{{"id", u.user_id}, {"post_count", u.post_count}, {"categories", u.categories}};
    if (hits[i].second) item["score"] = *hits[i].second;
    users.push_back(std::move(item));
  }
  return {200, json{{"users", std::move(users)}, {"page", page}, {"page_size", size}, {"total", hits.size()}}};
}

json Api::profile_json(const Profile& profile) const {
  json items = json::array();
  for (std::size_t i = 0; i < profile.items.size(); ++i) {
    const auto& item = profile.items[i];
    json j{{"id", item.id},
           {"token", item.token},
           {"kind", item_kind_name(item.kind)},
           {"usage", item.usage_count},
           {"score_rank", i + 1}};
    if (item.kind == ItemKind::Concept) j["channel"] = item.channel;
    items.push_back(std::move(j));
  }
  return json{{"subject", profile.subject}, {"nn", profile.nn}, {"items", std::move(items)}};
}

ApiResponse Api::user_profile(const std::string& id, const std::map<std::string, std::string>& query) {
  const std::size_t nn = nn_param(query);
  state_.corpus().user(id);
  Profile p = state_.profile_cache().get_or_compute(id, state_.space().checksum(), nn, [&] {
    return build_profile(state_.corpus(), state_.space(), id, nn);
  });
  return {200, profile_json(p)};
}

ApiResponse Api::community_profile(const std::string& idx, const std::map<std::string, std::string>& query) {
  const std::size_t nn = nn_param(query);
  std::size_t community = 0;
  try {
    community = parse_count(idx, "community");
  } catch (const Error&) {
    throw Error("UNKNOWN_COMMUNITY", "no community " + idx);
  }
  if (community >= state_.communities().k) throw Error("UNKNOWN_COMMUNITY", "no community " + idx);
  Profile p = state_.profile_cache().get_or_compute("community:" + idx, state_.space().checksum(), nn, [&] {
    return build_community_profile(state_.corpus(), state_.space(), state_.communities(), community, nn);
  });
  return {200, profile_json(p)};
}

ApiResponse Api::create_session(const std::string& body) {
  std::string rep = state_.options().representation;
  if (!body.empty()) {
    const json req = json::parse(body);
    if (req.contains("rep") && !req["rep"].is_null()) rep = req["rep"].get<std::string>();
  }
  const std::string id = state_.create_session(rep);
  return {201, json{{"session_id", id}, {"rep", rep}}};
}

ApiResponse Api::delete_session(const std::string& id) {
  if (!state_.delete_session(id)) throw Error("UNKNOWN_SESSION", "unknown session " + id);
  return {200, json{{"deleted", id}}};
}

ApiResponse Api::add_judgments(const std::string& id, const std::string& body) {
  const json req = json::parse(body);
  if (!req.is_array()) throw Error("BAD_REQUEST", "expected a JSON array of {user_id, relevant}");
  std::vector<std::pair<std::string, bool>> judgments;
  for (const auto& j : req) {
    if (!j.is_object() || !j.contains("user_id") || !j.contains("relevant")) {
      throw Error("BAD_REQUEST", "each judgment needs user_id and relevant");
    }
    judgments.emplace_back(j["user_id"].get<std::string>(), j["relevant"].get<bool>());
  }
  auto entry = state_.session(id);
  std::lock_guard lock(entry->mutex);
  entry->last_used = std::chrono::steady_clock::now();
  entry->session.judge(judgments);
  return {200, json{{"accepted", judgments.size()}, {"judged", entry->session.judgments().size()}}};
}

ApiResponse Api::rank(const std::string& id) {
  auto entry = state_.session(id);
  std::lock_guard lock(entry->mutex);
  entry->last_used = std::chrono::steady_clock::now();
  RankResult r = entry->session.train_and_rank();
  return {200, json{{"round", r.round}, {"scores_ref", "/overview?session=" + id}, {"top", r.top}}};
}

ApiResponse Api::bootstrap(const std::string& id, const std::map<std::string, std::string>& query) {
  const std::size_t count = param(query, "count") ? parse_count(*param(query, "count"), "count") : 15;
  if (count < 1) throw Error("BAD_REQUEST", "count must be at least 1");
  auto entry = state_.session(id);
  std::lock_guard lock(entry->mutex);
  return {200, json{{"candidates", entry->session.bootstrap_preview(count)}}};
}

void serve_http(Api& api, const std::string& host, int port) {
  httplib::Server server;
  const auto adapt = [&api](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    ApiResponse out = api.handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  const char* pattern = R"(/.*)";
  server.Get(pattern, adapt);
  server.Post(pattern, adapt);
  server.Delete(pattern, adapt);
  std::cerr << "listening on http://" << host << ":" << port << "\n";
  if (!server.listen(host, port)) throw Error("IO_ERROR", "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace userscope
