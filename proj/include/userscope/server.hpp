#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "userscope/corpus.hpp"
#include "userscope/embed.hpp"
#include "userscope/interactive.hpp"
#include "userscope/profile.hpp"
#include "userscope/vectorize.hpp"

namespace userscope {

/// PCA to two components, min-max scaled into [0, 1]^2 per axis (a constant
/// axis maps to 0.5). Throws Error{INVALID_ARGUMENT} for fewer than 2 users.
std::vector<std::array<double, 2>> layout_2d(const UserMatrix& users);

struct ServerOptions {
  /// Representation used for the overview layout, communities and default sessions.
  std::string representation = "cwu";
  Hyperparams embedding;
  TfidfRepresentationOptions tfidf;
  std::uint64_t seed = 0;
  std::size_t top_n = kDefaultTopN;
  std::size_t default_nn = 15;
  /// Defaults to the number of categories, or 10 without metadata.
  std::optional<std::size_t> communities;
  std::chrono::seconds session_ttl{3600};
  std::size_t page_size = 50;
};

/// Everything built before serving. Sessions are the only mutable part.
class AppState {
 public:
  AppState(Corpus corpus, ServerOptions options);

  const Corpus& corpus() const { return corpus_; }
  const ServerOptions& options() const { return options_; }
  const EmbeddingSpace& space() const { return space_; }
  const CommunityAssignment& communities() const { return communities_; }
  const std::vector<std::array<double, 2>>& layout() const { return layout_; }
  std::shared_ptr<const UserMatrix> representation(const std::string& name) const;
  std::vector<std::string> representation_names() const;
  ProfileCache& profile_cache() { return cache_; }

  struct SessionEntry {
    std::mutex mutex;
    Session session;
    std::chrono::steady_clock::time_point last_used;
  };

  std::string create_session(const std::string& representation);
  /// Throws Error{UNKNOWN_SESSION}.
  std::shared_ptr<SessionEntry> session(const std::string& id);
  bool delete_session(const std::string& id);
  std::size_t expire_sessions(std::chrono::steady_clock::time_point now);
  std::size_t session_count() const;

 private:
  Corpus corpus_;
  ServerOptions options_;
  std::map<std::string, std::shared_ptr<const UserMatrix>> representations_;
  EmbeddingSpace space_;
  CommunityAssignment communities_;
  std::vector<std::array<double, 2>> layout_;
  ProfileCache cache_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
  std::uint64_t next_session_ = 1;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent request handling; the HTTP server is a thin shell
/// over `handle`. Errors become {code, message} payloads.
class Api {
 public:
  explicit Api(AppState& state) : state_(state) {}

  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& query, const std::string& body);

  static int status_for(const std::string& code);

 private:
  ApiResponse overview(const std::map<std::string, std::string>& query);
  ApiResponse users(const std::map<std::string, std::string>& query);
  ApiResponse user_profile(const std::string& id, const std::map<std::string, std::string>& query);
  ApiResponse community_profile(const std::string& idx, const std::map<std::string, std::string>& query);
  ApiResponse create_session(const std::string& body);
  ApiResponse delete_session(const std::string& id);
  ApiResponse add_judgments(const std::string& id, const std::string& body);
  ApiResponse rank(const std::string& id);
  ApiResponse bootstrap(const std::string& id, const std::map<std::string, std::string>& query);

  nlohmann::json profile_json(const Profile& profile) const;
  std::size_t nn_param(const std::map<std::string, std::string>& query) const;

  AppState& state_;
};

/// Blocks serving `api` over HTTP until the process is stopped.
void serve_http(Api& api, const std::string& host, int port);

}  // namespace userscope
