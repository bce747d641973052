#include "userscope/evaluate.hpp"

#include <algorithm>
#include <sstream>

#include "userscope/error.hpp"
#include "userscope/interactive.hpp"

namespace userscope {

std::vector<Actor> build_actors(const Corpus& corpus, std::size_t seed_size, std::vector<std::string>* warnings) {
  const auto categories = corpus.categories();
  if (categories.empty()) throw Error("NO_CATEGORIES", "corpus has no category metadata");
  std::vector<Actor> actors;
  for (const auto& category : categories) {
    Actor actor{"actor:" + category, category, {}, seed_size};
    for (std::size_t r = 0; r < corpus.num_users(); ++r) {
      if (corpus.user_at(r).categories.contains(category)) actor.target.insert(corpus.user_ids()[r]);
    }
    if (actor.target.size() <= seed_size) {
      if (warnings) {
        warnings->push_back("dropping actor for category " + category + ": " + std::to_string(actor.target.size()) +
                            " target users, need more than " + std::to_string(seed_size));
      }
      continue;
    }
    actors.push_back(std::move(actor));
  }
  return actors;
}

std::vector<std::string> seed_examples(const Actor& actor, const Corpus& corpus) {
  if (actor.target.size() <= actor.seed_size) {
    throw Error("TARGET_TOO_SMALL", "actor " + actor.id + " has too few target users");
  }
  std::vector<std::pair<std::size_t, std::string>> counted;
  for (const auto& id : actor.target) {
    std::size_t in_category = 0;
    for (const auto& pid : corpus.user(id).post_ids) {
      const auto& cat = corpus.post(pid).category;
      if (cat && *cat == actor.source) ++in_category;
    }
    counted.emplace_back(in_category, id);
  }
  std::sort(counted.begin(), counted.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> seeds;
  for (std::size_t i = 0; i < actor.seed_size; ++i) seeds.push_back(counted[i].second);
  return seeds;
}

double average_precision(const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
  if (relevant.empty()) throw Error("EMPTY_RELEVANT_SET", "average precision needs a relevant item");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (!relevant.contains(ranking[k])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

std::vector<double> EvalRun::ap_per_round() const {
  std::vector<double> out;
  for (const auto& r : rounds) out.push_back(r.average_precision);
  return out;
}

EvalRun run_protocol(const Actor& actor, const Corpus& corpus, std::shared_ptr<const UserMatrix> users,
                     const ProtocolOptions& options, const std::string& representation) {
  EvalRun run;
  run.actor = actor.id;
  run.representation = representation;
  run.seed = options.seed;

  Session session(users, options.top_n, options.seed);
  const auto truthful = [&](const std::string& id) { return actor.target.contains(id); };
  std::size_t found = 0;
  const auto record = [&](const std::vector<std::string>& ids, std::vector<std::pair<std::string, bool>>& into) {
    std::vector<std::pair<std::string, bool>> batch;
    for (const auto& id : ids) {
      const bool relevant = truthful(id);
      batch.emplace_back(id, relevant);
      if (relevant && !session.is_judged(id)) ++found;
    }
    session.judge(batch);
    into.insert(into.end(), batch.begin(), batch.end());
  };

  record(seed_examples(actor, corpus), run.initial_judgments);

  // Without a negative judgment the classifier cannot be trained.
  bool have_negative = false;
  for (std::size_t attempt = 0; attempt < options.bootstrap_attempts && !have_negative; ++attempt) {
    auto sample = session.bootstrap_negatives(options.bootstrap_size);
    if (sample.empty()) break;
    if (std::any_of(sample.begin(), sample.end(), [&](const std::string& id) { return !truthful(id); })) {
      record(sample, run.initial_judgments);
      have_negative = true;
    }
  }

  const UserMatrix& data = *users;
  std::set<std::string> unfound;
  for (const auto& id : data.user_ids()) {
    if (truthful(id) && !session.is_judged(id)) unfound.insert(id);
  }
  const auto unjudged_total = [&] {
    std::size_t n = 0;
    for (const auto& id : data.user_ids()) n += session.is_judged(id) ? 0 : 1;
    return n;
  };
  // Every remaining user is a target: nothing to discriminate, any ranking is perfect.
  const bool everything_relevant = !have_negative && unfound.size() == unjudged_total();
  if (!have_negative && !everything_relevant) {
    throw Error("DEGENERATE_CORPUS", "bootstrap sampling found no non-target user for " + actor.id);
  }
  run.found_before_rounds = found;

  for (std::size_t r = 1; r <= options.rounds; ++r) {
    std::vector<double> scores(data.num_users(), 0.0);
    if (!everything_relevant) scores = session.train_and_rank().scores;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < data.num_users(); ++i) {
      if (!session.is_judged(data.user_ids()[i])) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return data.user_ids()[a] < data.user_ids()[b];
    });
    std::vector<std::string> ranking;
    ranking.reserve(order.size());
    for (std::size_t i : order) ranking.push_back(data.user_ids()[i]);

    RoundRecord rec;
    rec.round = r;
    // Once every target is found there is nothing left to retrieve.
    rec.average_precision = unfound.empty() ? 1.0 : average_precision(ranking, unfound);
    const std::size_t n = std::min(options.top_n, ranking.size());
    rec.presented.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(n));
    record(rec.presented, rec.judgments);
    for (const auto& id : rec.presented) unfound.erase(id);
    rec.found = found;
    run.rounds.push_back(std::move(rec));
  }
  return run;
}

RepresentationConfig representation_config(const std::string& name, std::size_t dim) {
  if (name != "tfidf" && name != "cwu" && name != "wuc") {
    throw Error("UNKNOWN_REPRESENTATION", "unknown representation " + name);
  }
  RepresentationConfig config{name, {}, {}};
  config.embedding.dim = dim;
  config.tfidf.dim = dim;
  return config;
}

UserMatrix build_representation(const Corpus& corpus, const RepresentationConfig& config, std::uint64_t seed) {
  if (config.name == "tfidf") return build_tfidf_representation(corpus, corpus.channel_names(), config.tfidf);
  Hyperparams params = config.embedding;
  params.rng_seed = seed;
  const auto trained = train_embeddings(corpus, parse_setup(config.name), params);
  return user_matrix(trained.space, corpus);
}

Report compare_representations(const Corpus& corpus, const EvaluationConfig& config) {
  if (config.representations.empty()) throw Error("INVALID_CONFIG", "no representations to compare");
  if (config.seeds.empty()) throw Error("INVALID_CONFIG", "at least one seed is required");

  Report report;
  report.config = config;
  const auto actors = build_actors(corpus, config.seed_size, &report.warnings);
  for (const auto& a : actors) report.actors.push_back(a.id);

  for (const auto& rep : config.representations) {
    auto& per_seed = report.map_per_seed[rep.name];
    std::shared_ptr<const UserMatrix> shared;
    for (std::uint64_t seed : config.seeds) {
      // TFIDF does not depend on the seed; build it once.
      if (!shared || rep.name != "tfidf") {
        shared = std::make_shared<const UserMatrix>(build_representation(corpus, rep, seed));
      }
      std::vector<double> seed_map(config.rounds, 0.0);
      for (const auto& actor : actors) {
        ProtocolOptions opts;
        opts.rounds = config.rounds;
        opts.top_n = config.top_n;
        opts.seed = seed;
        EvalRun run = run_protocol(actor, corpus, shared, opts, rep.name);
        for (std::size_t r = 0; r < config.rounds; ++r) seed_map[r] += run.rounds[r].average_precision;
        report.runs.push_back(std::move(run));
      }
      if (!actors.empty()) {
        for (double& v : seed_map) v /= static_cast<double>(actors.size());
      }
      per_seed.push_back(std::move(seed_map));
    }
    auto& mean = report.map_per_round[rep.name];
    mean.assign(config.rounds, 0.0);
    for (const auto& s : per_seed) {
      for (std::size_t r = 0; r < config.rounds; ++r) mean[r] += s[r] / static_cast<double>(per_seed.size());
    }
  }
  return report;
}

nlohmann::ordered_json Report::to_json() const {
  nlohmann::ordered_json cfg;
  std::vector<std::string> reps;
  for (const auto& r : config.representations) reps.push_back(r.name);
  cfg["reps"] = reps;
  cfg["rounds"] = config.rounds;
  cfg["n"] = config.top_n;
  cfg["seed_size"] = config.seed_size;
  cfg["seeds"] = config.seeds;
  if (!config.representations.empty()) {
    const auto& e = config.representations.front().embedding;
    cfg["dim"] = e.dim;
    cfg["embedding"] = {{"margin", e.margin}, {"negatives", e.negatives}, {"epochs", e.epochs},
                        {"learning_rate", e.learning_rate}};
  }

  nlohmann::ordered_json curves = nlohmann::ordered_json::array();
  for (const auto& run : runs) {
    nlohmann::ordered_json c;
    c["rep"] = run.representation;
    c["actor"] = run.actor;
    c["seed"] = run.seed;
    c["ap_per_round"] = run.ap_per_round();
    std::vector<std::size_t> found;
    for (const auto& r : run.rounds) found.push_back(r.found);
    c["found_per_round"] = found;
    curves.push_back(std::move(c));
  }

  nlohmann::ordered_json out;
  out["config"] = cfg;
  out["actors"] = actors;
  out["warnings"] = warnings;
  out["curves"] = curves;
  out["map_per_round"] = map_per_round;
  out["map_per_seed"] = map_per_seed;
  return out;
}

std::string Report::map_table_csv() const {
  std::ostringstream out;
  out << "round";
  for (const auto& [rep, _] : map_per_round) out << ',' << rep;
  out << '\n';
  for (std::size_t r = 0; r < config.rounds; ++r) {
    out << r + 1;
    for (const auto& [_, curve] : map_per_round) out << ',' << curve[r];
    out << '\n';
  }
  return out.str();
}

}  // namespace userscope
