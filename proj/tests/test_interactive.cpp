#include <doctest.h>

#include <chrono>
#include <random>

#include "userscope/error.hpp"
#include "userscope/interactive.hpp"

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

std::shared_ptr<const UserMatrix> random_users(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  RowMatrixF v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = g(rng);
  std::vector<std::string> ids;
  char buf[16];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "u%05zu", i);
    ids.emplace_back(buf);
  }
  return std::make_shared<const UserMatrix>(ids, v, Provenance::Embedding);
}

// Positives at +e1, negatives at -e1, unjudged users spread along e1.
std::shared_ptr<const UserMatrix> toy() {
  RowMatrixF v(10, 3);
  v << 1, 0, 0,     //
      1.2f, 0.1f, 0,  //
      0.9f, -0.1f, 0, //
      -1, 0, 0,       //
      -1.1f, 0, 0.1f, //
      -0.8f, 0.2f, 0, //
      0.5f, 0, 0,     //
      0.2f, 0, 0,     //
      -0.3f, 0, 0,    //
      0.8f, 0, 0;
  return std::make_shared<const UserMatrix>(
      std::vector<std::string>{"p1", "p2", "p3", "n1", "n2", "n3", "x1", "x2", "x3", "x4"}, v,
      Provenance::TfidfFusedPca);
}

}  // namespace

TEST_CASE("session defaults and judging") {
  auto m = random_users(50, 128, 1);
  Session s = start_session(m);
  CHECK(s.top_n() == 15);
  CHECK(s.model().weights.size() == 128);
  CHECK(s.model().weights.norm() == 0.0);
  CHECK(s.round() == 0);

  s.judge({});
  CHECK(s.judgments().empty());
  s.judge({{"u00001", true}});
  s.judge({{"u00001", false}});
  CHECK_FALSE(s.judgments().at("u00001").relevant);
  CHECK(error_code([&] { s.judge({{"u00002", true}, {"nope", true}}); }) == "UNKNOWN_USER");
  CHECK_FALSE(s.is_judged("u00002"));

  std::vector<std::pair<std::string, bool>> many;
  for (int i = 10; i < 25; ++i) many.emplace_back(m->user_ids()[i], true);
  s.judge(many);
  CHECK(s.judgments().size() == 16);
  s.forget("u00001");
  CHECK(s.judgments().size() == 15);
  CHECK(error_code([&] { s.train_and_rank(); }) == "NEED_BOTH_CLASSES");

  Session other(m);
  CHECK(other.judgments().empty());
  CHECK(error_code([] { Session(nullptr); }) == "INVALID_ARGUMENT");
}

TEST_CASE("separable toy set is ranked perfectly") {
  Session s(toy(), 3, 7);
  s.judge({{"p1", true}, {"p2", true}, {"p3", true}, {"n1", false}, {"n2", false}, {"n3", false}});
  const RankResult r = s.train_and_rank();
  CHECK(r.round == 1);
  CHECK(s.round() == 1);
  const auto& ids = s.representation().user_ids();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.scores[i] > 0);
    for (std::size_t j = 3; j < 6; ++j) CHECK(r.scores[i] > r.scores[j]);
  }
  for (std::size_t j = 3; j < 6; ++j) CHECK(r.scores[j] < 0);
  CHECK(r.top == std::vector<std::string>{"x4", "x1", "x2"});
  CHECK(ids.size() == r.scores.size());
}

TEST_CASE("top-N excludes judged users and shrinks to the unjudged count") {
  auto m = toy();
  Session s(m, 15, 1);
  s.judge({{"p1", true}, {"n1", false}});
  const RankResult r = s.train_and_rank();
  CHECK(r.top.size() == 8);
  for (const auto& id : r.top) CHECK_FALSE(s.is_judged(id));
  for (std::size_t i = 1; i < r.top.size(); ++i) {
    const double a = r.scores[*m->row(r.top[i - 1])], b = r.scores[*m->row(r.top[i])];
    CHECK((a > b || (a == b && r.top[i - 1] < r.top[i])));
  }

  std::vector<std::pair<std::string, bool>> everyone;
  for (const auto& id : m->user_ids()) everyone.emplace_back(id, id[0] == 'p');
  s.judge(everyone);
  CHECK(s.train_and_rank().top.empty());
  CHECK(s.bootstrap_negatives(5).empty());
}

TEST_CASE("ranking is independent of judgment insertion order and history") {
  auto m = random_users(300, 16, 4);
  std::vector<std::pair<std::string, bool>> js;
  for (int i = 0; i < 30; ++i) js.emplace_back(m->user_ids()[i * 7], i % 3 == 0);
  Session a(m, 15, 11), b(m, 15, 11);
  a.judge(js);
  std::reverse(js.begin(), js.end());
  for (const auto& j : js) b.judge({j});
  const RankResult ra = a.train_and_rank(), rb = b.train_and_rank();
  CHECK(ra.scores == rb.scores);
  CHECK(ra.top == rb.top);

  // Forget and re-add: same round index, same data, same classifier.
  Session c(m, 15, 11);
  c.judge(js);
  c.forget(js[0].first);
  c.judge({js[0]});
  CHECK(c.train_and_rank().scores == ra.scores);
}

TEST_CASE("classifier objective improves on the zero model") {
  auto m = random_users(200, 8, 5);
  std::vector<LabeledRow> rows;
  for (std::size_t i = 0; i < 60; ++i) rows.push_back({i, m->row_vector(i)(0) + 0.3f * m->row_vector(i)(1) > 0});
  std::mt19937_64 rng(1);
  const ClassifierParams params;
  const LinearModel model = train_linear_svm(*m, rows, params, rng);
  const LinearModel zero{Eigen::VectorXd::Zero(8), 0.0};
  const double trained = svm_objective(*m, rows, model, params.lambda);
  CHECK(std::isfinite(trained));
  CHECK(trained <= svm_objective(*m, rows, zero, params.lambda));
  std::size_t correct = 0;
  for (const auto& r : rows) {
    const double s = model.score(m->row_vector(r.row).cast<double>().transpose());
    correct += (s > 0) == r.relevant ? 1 : 0;
  }
  CHECK(correct >= 54);
  CHECK(error_code([&] { train_linear_svm(*m, {{0, true}}, params, rng); }) == "NEED_BOTH_CLASSES");
}

TEST_CASE("bootstrap sampling") {
  auto m = toy();
  Session s(m, 15, 3);
  s.judge({{"p1", true}, {"p2", true}});
  const auto sample = s.bootstrap_negatives(4);
  CHECK(sample.size() == 4);
  std::set<std::string> unique(sample.begin(), sample.end());
  CHECK(unique.size() == 4);
  for (const auto& id : sample) CHECK_FALSE(s.is_judged(id));
  CHECK(s.bootstrap_negatives(100).size() == 8);

  Session t(m, 15, 3);
  t.judge({{"p1", true}, {"p2", true}});
  CHECK(t.bootstrap_negatives(4) == sample);

  const auto preview = t.bootstrap_preview(4);
  CHECK(t.bootstrap_preview(4) == preview);
  CHECK(preview.size() == 4);
}

TEST_CASE("identical sessions produce identical results") {
  auto m = random_users(500, 32, 6);
  std::vector<std::pair<std::string, bool>> js;
  for (int i = 0; i < 40; ++i) js.emplace_back(m->user_ids()[i], i % 4 == 0);
  Session a(m, 15, 5), b(m, 15, 5);
  a.judge(js);
  b.judge(js);
  for (int round = 0; round < 3; ++round) {
    const RankResult ra = a.train_and_rank(), rb = b.train_and_rank();
    CHECK(ra.scores == rb.scores);
    CHECK(ra.top == rb.top);
    CHECK(ra.round == rb.round);
  }
}
