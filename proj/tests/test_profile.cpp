#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "userscope/error.hpp"
#include "userscope/profile.hpp"

using namespace userscope;

namespace {

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

ProfileItem item(std::string id, std::size_t usage, std::vector<double> v) {
  ProfileItem it;
  it.id = std::move(id);
  it.token = it.id;
  it.usage_count = usage;
  it.vector = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return it;
}

std::vector<std::string> ids_of(const Profile& p) {
  std::vector<std::string> out;
  for (const auto& i : p.items) out.push_back(i.id);
  return out;
}

std::vector<oracle::Item> to_oracle(const std::vector<ProfileItem>& items) {
  std::vector<oracle::Item> out;
  for (const auto& i : items) out.push_back({i.id, static_cast<double>(i.usage_count), {i.vector.data(), i.vector.data() + i.vector.size()}});
  return out;
}

std::map<std::string, double> points(const std::vector<BordaEntry>& entries) {
  std::map<std::string, double> out;
  for (const auto& e : entries) out[e.id] = e.points;
  return out;
}

EmbeddingSpace trained_space(const Corpus& c) {
  Hyperparams hp;
  hp.dim = 16;
  hp.epochs = 3;
  hp.rng_seed = 1;
  return train_embeddings(c, Setup::WordsToUserConcepts, hp).space;
}

}  // namespace

TEST_CASE("borda hand totals") {
  const auto r = borda_aggregate({ordering({"a", "b", "c"}), ordering({"a", "c", "b"}), ordering({"b", "a", "c"})});
  REQUIRE(r.size() == 3);
  CHECK(r[0].id == "a");
  CHECK(points(r) == std::map<std::string, double>{{"a", 8}, {"b", 6}, {"c", 4}});

  const auto same = borda_aggregate({ordering({"c", "a", "b"}), ordering({"c", "a", "b"}), ordering({"c", "a", "b"})});
  CHECK(same[0].id == "c");
  CHECK(same[1].id == "a");
  CHECK(same[2].id == "b");

  const auto reversed = borda_aggregate({ordering({"d", "c", "b", "a"}), ordering({"a", "b", "c", "d"})});
  std::vector<std::string> order;
  for (const auto& e : reversed) {
    order.push_back(e.id);
    CHECK(e.points == 5);
  }
  CHECK(order == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("borda is symmetric in its rankings and validates item sets") {
  const std::vector<Ranking> rs{ordering({"a", "b", "c", "d"}), ordering({"d", "a", "c", "b"}),
                                rank_by_score({"a", "b", "c", "d"}, {1, 1, 2, 0}, true)};
  const auto base = borda_aggregate(rs);
  std::vector<std::size_t> perm{0, 1, 2};
  while (std::next_permutation(perm.begin(), perm.end())) {
    const auto other = borda_aggregate({rs[perm[0]], rs[perm[1]], rs[perm[2]]});
    REQUIRE(other.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(other[i].id == base[i].id);
      CHECK(other[i].points == base[i].points);
    }
  }
  CHECK(borda_aggregate({}).empty());
  CHECK(error_code([] { borda_aggregate({ordering({"a", "b"}), ordering({"a", "c"})}); }) == "RANKING_MISMATCH");
  CHECK(error_code([] { borda_aggregate({ordering({"a", "b"}), ordering({"a"})}); }) == "RANKING_MISMATCH");
  CHECK(error_code([] { borda_aggregate({ordering({"a", "a"})}); }) == "RANKING_MISMATCH");
}

TEST_CASE("rank_by_score shares positions among ties") {
  const Ranking r = rank_by_score({"d", "b", "a", "c"}, {2, 5, 2, 1}, true);
  REQUIRE(r.size() == 4);
  CHECK(r[0].id == "b");
  CHECK(r[0].position == 0);
  CHECK(r[1].id == "a");
  CHECK(r[1].position == 1);
  CHECK(r[2].id == "d");
  CHECK(r[2].position == 1);
  CHECK(r[3].id == "c");
  CHECK(r[3].position == 3);
  const Ranking all_tied = rank_by_score({"x", "y"}, {0, 0}, false);
  CHECK(all_tied[0].position == 0);
  CHECK(all_tied[1].position == 0);
}

TEST_CASE("score_items on hand-set vectors") {
  const std::vector<ProfileItem> p{item("a", 3, {1, 0}), item("b", 1, {0, 1}), item("c", 2, {-1, 0}),
                                   item("d", 5, {1, 1})};
  const auto none = score_items(p, {});
  const double r2 = 1.0 - std::sqrt(0.5);  // distance between an axis and the diagonal
  CHECK(none[0].usage == 3);
  CHECK(none[0].representative == doctest::Approx(0 + 1 + 2 + r2).epsilon(1e-9));
  CHECK(none[1].representative == doctest::Approx(1 + 0 + 1 + r2).epsilon(1e-9));
  CHECK(none[2].representative == doctest::Approx(2 + 1 + 0 + (1 + std::sqrt(0.5))).epsilon(1e-9));
  for (const auto& s : none) CHECK(s.diversity == 0.0);
  const auto with = score_items(p, {p[0]});
  CHECK(with[1].diversity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(with[2].diversity == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(score_items({p[0]}, {})[0].representative == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("select_profile edge cases") {
  const std::vector<ProfileItem> p{item("a", 3, {1, 0}), item("b", 1, {0, 1}), item("c", 2, {-1, 0})};
  CHECK(select_profile("s", p, 0).items.empty());
  const Profile all = select_profile("s", p, 10);
  CHECK(all.items.size() == 3);
  std::set<std::string> unique;
  for (const auto& i : all.items) unique.insert(i.id);
  CHECK(unique.size() == 3);
  CHECK(select_profile("s", {}, 5).items.empty());
}

TEST_CASE("select_profile agrees with the literal oracle, ties included") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    const std::size_t nn = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
    std::vector<ProfileItem> items;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(3);
      const int mode = std::uniform_int_distribution<int>(0, 3)(rng);
      if (mode == 0 && !items.empty()) {
        const auto& src = items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)].vector;
        v.assign(src.data(), src.data() + src.size());  // exact duplicate vector
      } else if (mode == 1) {
        v[std::uniform_int_distribution<int>(0, 2)(rng)] = std::uniform_int_distribution<int>(0, 1)(rng) ? 1 : -1;
      } else {
        for (auto& x : v) x = std::normal_distribution<double>()(rng);
      }
      char id[8];
      std::snprintf(id, sizeof id, "i%02zu", (i * 7) % 20);  // ids not in insertion order
      items.push_back(item(id + std::to_string(i), std::uniform_int_distribution<std::size_t>(1, 3)(rng), v));
    }
    std::shuffle(items.begin(), items.end(), rng);
    const Profile got = select_profile("s", items, nn);
    CHECK(ids_of(got) == oracle::profile(to_oracle(items), nn));
  }
}

TEST_CASE("first pick ignores diversity") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ProfileItem> items;
    std::vector<std::string> ids;
    for (int i = 0; i < 8; ++i) {
      std::vector<double> v(4);
      for (auto& x : v) x = std::normal_distribution<double>()(rng);
      items.push_back(item("x" + std::to_string(i), std::uniform_int_distribution<std::size_t>(1, 4)(rng), v));
      ids.push_back(items.back().id);
    }
    const auto s = score_items(items, {});
    std::vector<double> su, sr;
    for (const auto& x : s) {
      su.push_back(x.usage);
      sr.push_back(x.representative);
    }
    const auto winner = borda_aggregate({rank_by_score(ids, su, true), rank_by_score(ids, sr, false),
                                         rank_by_score(ids, std::vector<double>(8, 0.0), true)})[0].id;
    CHECK(select_profile("s", items, 1).items[0].id == winner);
  }
}

TEST_CASE("candidate set collects words, concepts and reply targets") {
  const Corpus c = fixtures::ten_users();
  const EmbeddingSpace space = trained_space(c);
  const auto cands = candidate_set(c, space, "dave");
  std::map<std::string, std::size_t> usage;
  for (const auto& i : cands) usage[i.id] = i.usage_count;
  CHECK(usage.at("words:walk") == 4);
  CHECK(usage.at("visual_concepts:bread") == 1);
  CHECK(usage.at("hashtags:walking") == 1);
  CHECK(usage.at("user:carol") == 1);
  CHECK(std::is_sorted(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
  for (const auto& i : cands) {
    if (i.kind == ItemKind::User) CHECK(i.channel == "user");
  }

  // A reply to a user absent from the corpus never becomes an item.
  for (const auto& i : candidate_set(c, space, "judy")) CHECK(i.id != "user:ghost");
  CHECK(error_code([&] { candidate_set(c, space, "nobody"); }) == "UNKNOWN_USER");

  // Words-only user yields only word items.
  const Corpus plain = fixtures::corpus({{"a", "x y x"}, {"b", "y z"}});
  const auto only = candidate_set(plain, trained_space(plain), "a");
  CHECK(only.size() == 2);
  for (const auto& i : only) CHECK(i.kind == ItemKind::Word);
  CHECK(only[0].usage_count == 2);
}

TEST_CASE("build_profile equals the oracle on corpus users") {
  const Corpus c = fixtures::ten_users();
  const EmbeddingSpace space = trained_space(c);
  for (const auto& id : c.user_ids()) {
    for (std::size_t nn = 0; nn <= 5; ++nn) {
      const Profile p = build_profile(c, space, id, nn);
      CHECK(ids_of(p) == oracle::profile(to_oracle(candidate_set(c, space, id)), nn));
      CHECK(p.items.size() <= nn);
    }
  }
}

TEST_CASE("group profiles sum usage") {
  const Corpus c = fixtures::corpus({{"a", "w w w x"}, {"b", "w w w w y"}, {"c", "z"}});
  const EmbeddingSpace space = trained_space(c);
  const Profile g = build_group_profile(c, space, "g", {"a", "b"}, 10);
  std::map<std::string, std::size_t> usage;
  for (const auto& i : g.items) usage[i.id] = i.usage_count;
  CHECK(usage.at("words:w") == 7);
  CHECK(usage.at("words:x") == 1);
  CHECK(usage.at("words:y") == 1);
  CHECK(usage.size() == 3);
  CHECK(error_code([&] { build_group_profile(c, space, "g", {}, 3); }) == "EMPTY_COMMUNITY");

  const Profile single = build_group_profile(c, space, "a", {"a"}, 5);
  CHECK(ids_of(single) == ids_of(build_profile(c, space, "a", 5)));
}

TEST_CASE("k-means communities") {
  // Two tight clouds around orthogonal directions.
  std::mt19937_64 rng(8);
  std::normal_distribution<float> noise(0, 0.05f);
  RowMatrixF v(40, 3);
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) {
    v.row(i) << (i < 20 ? 1.0f : 0.0f) + noise(rng), (i < 20 ? 0.0f : 1.0f) + noise(rng), noise(rng);
    ids.push_back("u" + std::to_string(100 + i));
  }
  const UserMatrix m(ids, v, Provenance::Embedding);
  const CommunityAssignment a = detect_communities(m, 2, 3);
  CHECK(a.k == 2);
  for (int i = 1; i < 20; ++i) CHECK(a.assignment[i] == a.assignment[0]);
  for (int i = 21; i < 40; ++i) CHECK(a.assignment[i] == a.assignment[20]);
  CHECK(a.assignment[0] != a.assignment[20]);
  for (std::size_t i = 1; i < a.objective_trace.size(); ++i) {
    CHECK(a.objective_trace[i] <= a.objective_trace[i - 1] + 1e-9);
  }
  CHECK(a.members(0).size() + a.members(1).size() == 40);
  const CommunityAssignment again = detect_communities(m, 2, 3);
  CHECK(again.assignment == a.assignment);

  const CommunityAssignment one = detect_communities(m, 1, 0);
  CHECK(one.members(0).size() == 40);
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(3);
  for (int i = 0; i < 40; ++i) mean += v.row(i).cast<double>() / v.row(i).cast<double>().norm();
  mean /= 40.0;
  CHECK((one.centroids.row(0) - mean).norm() <= 1e-9);

  // k = n: every user its own community, none empty.
  const CommunityAssignment all = detect_communities(m, 40, 1);
  for (std::size_t k = 0; k < 40; ++k) CHECK(all.members(k).size() == 1);

  CHECK(error_code([&] { detect_communities(m, 0, 1); }) == "INVALID_ARGUMENT");
  CHECK(error_code([&] { detect_communities(m, 41, 1); }) == "INVALID_ARGUMENT");
}

TEST_CASE("community profiles and cache") {
  const Corpus c = fixtures::ten_users();
  const EmbeddingSpace space = trained_space(c);
  const CommunityAssignment a = detect_communities(user_matrix(space, c), 3, 1);
  const Profile p = build_community_profile(c, space, a, 0, 5);
  CHECK(p.subject == "community:0");
  CHECK(p.items.size() <= 5);
  CHECK(error_code([&] { build_community_profile(c, space, a, 3, 5); }) == "UNKNOWN_COMMUNITY");

  ProfileCache cache;
  int calls = 0;
  const auto compute = [&] {
    ++calls;
    return build_profile(c, space, "alice", 4);
  };
  const Profile first = cache.get_or_compute("alice", space.checksum(), 4, compute);
  const Profile second = cache.get_or_compute("alice", space.checksum(), 4, compute);
  CHECK(calls == 1);
  CHECK(ids_of(first) == ids_of(second));
  cache.get_or_compute("alice", space.checksum(), 5, [&] { return build_profile(c, space, "alice", 5); });
  CHECK(cache.size() == 2);
}
