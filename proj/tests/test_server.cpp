#include <doctest.h>

#include <thread>

#include "userscope/error.hpp"
#include "userscope/server.hpp"

// After Eigen: <resolv.h> defines a macro named _res that Eigen uses as an identifier.
#include <httplib.h>

using namespace userscope;
using nlohmann::json;

namespace {

AppState& shared_state() {
  static AppState state = [] {
    SynthConfig cfg;
    cfg.rng_seed = 12;
    cfg.users_per_community = 25;
    ServerOptions opts;
    opts.embedding.dim = 32;
    opts.embedding.epochs = 3;
    opts.tfidf.dim = 32;
    opts.seed = 1;
    return AppState(generate_synthetic(cfg), opts);
  }();
  return state;
}

ApiResponse call(Api& api, const std::string& method, const std::string& path,
                 std::map<std::string, std::string> query = {}, const std::string& body = "") {
  return api.handle(method, path, query, body);
}

std::string new_session(Api& api, const std::string& rep = "") {
  const auto r = call(api, "POST", "/sessions", {}, rep.empty() ? "" : json{{"rep", rep}}.dump());
  REQUIRE(r.status == 201);
  return r.body["session_id"].get<std::string>();
}

json judgments_for(const Corpus& c, std::size_t positives, std::size_t negatives) {
  json out = json::array();
  for (std::size_t i = 0; i < positives; ++i) out.push_back({{"user_id", c.user_ids()[i]}, {"relevant", true}});
  for (std::size_t i = 0; i < negatives; ++i) {
    out.push_back({{"user_id", c.user_ids()[c.num_users() - 1 - i]}, {"relevant", false}});
  }
  return out;
}

}  // namespace

TEST_CASE("layout_2d") {
  RowMatrixF v(5, 3);
  v << 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4;
  const auto pts = layout_2d(UserMatrix({"a", "b", "c", "d", "e"}, v, Provenance::Embedding));
  for (const auto& p : pts) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] <= 1.0);
    CHECK(p[1] == 0.5);  // collinear data has no second axis
  }
  CHECK(pts.front()[0] != pts.back()[0]);

  RowMatrixF one(1, 3);
  one << 1, 2, 3;
  CHECK_THROWS_AS(layout_2d(UserMatrix({"a"}, one, Provenance::Embedding)), Error);

  // Separated communities stay separated in the plane.
  const AppState& s = shared_state();
  const auto& layout = s.layout();
  double intra = 0, inter = 0;
  std::size_t ni = 0, nx = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    CHECK(std::isfinite(layout[i][0]));
    for (std::size_t j = i + 1; j < layout.size(); ++j) {
      const double d = std::hypot(layout[i][0] - layout[j][0], layout[i][1] - layout[j][1]);
      if (synthetic_community(s.corpus().user_at(i)) == synthetic_community(s.corpus().user_at(j))) {
        intra += d;
        ++ni;
      } else {
        inter += d;
        ++nx;
      }
    }
  }
  CHECK(intra / ni < inter / nx);
}

TEST_CASE("error status mapping") {
  CHECK(Api::status_for("NEED_BOTH_CLASSES") == 409);
  CHECK(Api::status_for("UNKNOWN_USER") == 404);
  CHECK(Api::status_for("UNKNOWN_SESSION") == 404);
  CHECK(Api::status_for("UNKNOWN_CHANNEL") == 400);
  CHECK(Api::status_for("SOMETHING_ELSE") == 500);
}

TEST_CASE("overview and user listing") {
  AppState& s = shared_state();
  Api api(s);
  const auto o = call(api, "GET", "/overview");
  REQUIRE(o.status == 200);
  CHECK(o.body["users"].size() == 100);
  CHECK(o.body["communities"] == 4);
  CHECK_FALSE(o.body["users"][0].contains("score"));

  const auto page = call(api, "GET", "/users", {{"page", "1"}});
  CHECK(page.body["users"].size() == 50);
  CHECK(page.body["total"] == 100);
  CHECK(call(api, "GET", "/users", {{"page", "5"}}).body["users"].empty());

  const auto cat = call(api, "GET", "/users", {{"category", "c2"}});
  CHECK(cat.body["total"] == 25);
  const auto q = call(api, "GET", "/users", {{"query", "c1w0"}});
  REQUIRE(q.status == 200);
  CHECK(q.body["total"].get<int>() > 0);
  CHECK(q.body["users"][0].contains("score"));
  const auto tag = call(api, "GET", "/users", {{"query", "c1ht0"}, {"channel", "hashtags"}, {"category", "c1"}});
  CHECK(tag.body["total"].get<int>() > 0);

  const auto bad = call(api, "GET", "/users", {{"channel", "emoji"}});
  CHECK(bad.status == 400);
  CHECK(bad.body["code"] == "UNKNOWN_CHANNEL");
  CHECK(call(api, "GET", "/users", {{"page", "x"}}).status == 400);
  CHECK(call(api, "GET", "/nowhere").status == 404);
}

TEST_CASE("profiles") {
  AppState& s = shared_state();
  Api api(s);
  const std::string id = s.corpus().user_ids()[3];
  const auto p = call(api, "GET", "/users/" + id + "/profile", {{"nn", "15"}});
  REQUIRE(p.status == 200);
  CHECK(p.body["items"].size() <= 15);
  CHECK(p.body["items"].size() > 0);
  std::set<std::string> unique;
  for (const auto& item : p.body["items"]) unique.insert(item["id"].get<std::string>());
  CHECK(unique.size() == p.body["items"].size());
  CHECK(call(api, "GET", "/users/" + id + "/profile", {{"nn", "3"}}).body["items"].size() == 3);
  CHECK(call(api, "GET", "/users/nobody/profile").status == 404);

  const auto c = call(api, "GET", "/communities/1/profile", {{"nn", "5"}});
  REQUIRE(c.status == 200);
  CHECK(c.body["subject"] == "community:1");
  CHECK(c.body["items"].size() == 5);
  CHECK(call(api, "GET", "/communities/9/profile").status == 404);
  CHECK(call(api, "GET", "/communities/x/profile").status == 404);
}

TEST_CASE("session lifecycle") {
  AppState& s = shared_state();
  Api api(s);
  const Corpus& c = s.corpus();
  const std::string sid = new_session(api);

  auto r = call(api, "POST", "/sessions/" + sid + "/judgments", {}, judgments_for(c, 3, 0).dump());
  CHECK(r.status == 200);
  r = call(api, "POST", "/sessions/" + sid + "/rank");
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "NEED_BOTH_CLASSES");

  const auto boot = call(api, "GET", "/sessions/" + sid + "/bootstrap", {{"count", "15"}});
  REQUIRE(boot.status == 200);
  CHECK(boot.body["candidates"].size() == 15);
  // Reads do not move the session forward.
  CHECK(call(api, "GET", "/sessions/" + sid + "/bootstrap", {{"count", "15"}}).body == boot.body);

  json negs = json::array();
  for (const auto& id : boot.body["candidates"]) {
    if (c.user(id.get<std::string>()).categories != c.user(c.user_ids()[0]).categories) {
      negs.push_back({{"user_id", id}, {"relevant", false}});
    }
  }
  REQUIRE(!negs.empty());
  CHECK(call(api, "POST", "/sessions/" + sid + "/judgments", {}, negs.dump()).status == 200);
  const auto ranked = call(api, "POST", "/sessions/" + sid + "/rank");
  REQUIRE(ranked.status == 200);
  CHECK(ranked.body["round"] == 1);
  CHECK(ranked.body["top"].size() == 15);

  const auto o = call(api, "GET", "/overview", {{"session", sid}});
  std::size_t highlighted = 0;
  for (const auto& u : o.body["users"]) {
    if (u["highlighted"].get<bool>()) {
      ++highlighted;
      CHECK_FALSE(u["judged"].get<bool>());
    }
    CHECK(u["score"].get<double>() >= 0.0);
    CHECK(u["score"].get<double>() <= 1.0);
  }
  CHECK(highlighted == 15);

  CHECK(call(api, "POST", "/sessions/" + sid + "/judgments", {}, R"([{"user_id":"nobody","relevant":true}])").status == 404);
  CHECK(call(api, "POST", "/sessions/" + sid + "/judgments", {}, "not json").status == 400);
  CHECK(call(api, "POST", "/sessions/" + sid + "/judgments", {}, R"({"user_id":"x"})").status == 400);

  CHECK(call(api, "DELETE", "/sessions/" + sid).status == 200);
  CHECK(call(api, "DELETE", "/sessions/" + sid).status == 404);
  CHECK(call(api, "POST", "/sessions/" + sid + "/rank").status == 404);
  CHECK(call(api, "GET", "/overview", {{"session", sid}}).status == 404);
  CHECK(call(api, "POST", "/sessions", {}, R"({"rep":"bogus"})").status == 400);
}

TEST_CASE("sessions are isolated") {
  AppState& s = shared_state();
  Api api(s);
  const Corpus& c = s.corpus();
  const std::string a = new_session(api, "tfidf");
  const std::string b = new_session(api, "tfidf");
  call(api, "POST", "/sessions/" + a + "/judgments", {}, judgments_for(c, 5, 5).dump());
  call(api, "POST", "/sessions/" + b + "/judgments", {}, judgments_for(c, 5, 5).dump());
  const auto before = s.session(a)->session.judgments().size();
  call(api, "POST", "/sessions/" + b + "/judgments", {}, judgments_for(c, 20, 20).dump());
  CHECK(s.session(a)->session.judgments().size() == before);
  const auto ra = call(api, "POST", "/sessions/" + a + "/rank");
  CHECK(ra.status == 200);
  CHECK(s.session(b)->session.round() == 0);
}

TEST_CASE("session expiry") {
  AppState& s = shared_state();
  const std::string id = s.create_session("cwu");
  CHECK(s.expire_sessions(std::chrono::steady_clock::now()) == 0);
  const std::size_t before = s.session_count();
  CHECK(s.expire_sessions(std::chrono::steady_clock::now() + std::chrono::hours(2)) == before);
  CHECK(s.session_count() == 0);
  CHECK_THROWS_AS(s.session(id), Error);
}

TEST_CASE("HTTP round trip") {
  AppState& s = shared_state();
  Api api(s);
  httplib::Server server;
  const auto adapt = [&api](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query(req.params.begin(), req.params.end());
    const ApiResponse out = api.handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/.*)", adapt);
  server.Post(R"(/.*)", adapt);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/sessions", "{}", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto res = client.Get("/users?category=c0&page=0");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["total"] == 25);
  const auto missing = client.Get("/users/nobody/profile");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["code"] == "UNKNOWN_USER");
  server.stop();
  t.join();
}
