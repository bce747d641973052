#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "userscope/corpus.hpp"
#include "userscope/embed.hpp"
#include "userscope/vectorize.hpp"

namespace userscope {

/// Simulated analyst whose target set comes from metadata only.
struct Actor {
  std::string id;
  std::string source;  // category name
  std::set<std::string> target;
  std::size_t seed_size = 15;
};

/// One actor per category; target = users with at least one post in it.
/// Actors whose target is not larger than `seed_size` are dropped and a
/// message is appended to `warnings`. Throws Error{NO_CATEGORIES}.
std::vector<Actor> build_actors(const Corpus& corpus, std::size_t seed_size = 15,
                                std::vector<std::string>* warnings = nullptr);

/// The `seed_size` target users with the most posts in the actor's category,
/// ties by ascending id. Throws Error{TARGET_TOO_SMALL}.
std::vector<std::string> seed_examples(const Actor& actor, const Corpus& corpus);

/// (1/|R|) sum over relevant positions k of precision@k. Throws
/// Error{EMPTY_RELEVANT_SET}.
double average_precision(const std::vector<std::string>& ranking, const std::set<std::string>& relevant);

struct RoundRecord {
  std::size_t round = 0;
  double average_precision = 0.0;
  std::size_t found = 0;  // target users judged so far, seeds included
  std::vector<std::string> presented;
  std::vector<std::pair<std::string, bool>> judgments;
};

struct EvalRun {
  std::string actor;
  std::string representation;
  std::uint64_t seed = 0;
  std::size_t found_before_rounds = 0;
  std::vector<std::pair<std::string, bool>> initial_judgments;  // seeds, then bootstrap sample
  std::vector<RoundRecord> rounds;

  std::vector<double> ap_per_round() const;
};

struct ProtocolOptions {
  std::size_t rounds = 10;
  std::size_t top_n = 15;
  std::size_t bootstrap_size = 15;
  std::size_t bootstrap_attempts = 10;
  std::uint64_t seed = 0;
};

/// Seeds judged positive, one bootstrap sample judged truthfully, then per
/// round: train, rank, score AP over all unjudged users against the unfound
/// targets, and judge the top N truthfully. Throws Error{DEGENERATE_CORPUS}
/// when no bootstrap sample contains a non-target user.
EvalRun run_protocol(const Actor& actor, const Corpus& corpus, std::shared_ptr<const UserMatrix> users,
                     const ProtocolOptions& options, const std::string& representation = "");

/// A representation to compare: "tfidf", "cwu" or "wuc".
struct RepresentationConfig {
  std::string name;
  Hyperparams embedding;            // used by cwu/wuc; rng_seed is replaced per run seed
  TfidfRepresentationOptions tfidf;  // used by tfidf
};

RepresentationConfig representation_config(const std::string& name, std::size_t dim = 128);

/// Builds the user matrix of `config` for one run seed.
UserMatrix build_representation(const Corpus& corpus, const RepresentationConfig& config, std::uint64_t seed);

struct EvaluationConfig {
  std::vector<RepresentationConfig> representations;
  std::size_t rounds = 10;
  std::size_t top_n = 15;
  std::size_t seed_size = 15;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

struct Report {
  EvaluationConfig config;
  std::vector<std::string> actors;
  std::vector<std::string> warnings;
  std::vector<EvalRun> runs;
  /// rep -> mean AP over every (actor, seed) run, per round.
  std::map<std::string, std::vector<double>> map_per_round;
  /// rep -> per seed (config order) -> mean AP over actors, per round.
  std::map<std::string, std::vector<std::vector<double>>> map_per_seed;

  nlohmann::ordered_json to_json() const;
  std::string map_table_csv() const;
};

/// Runs the protocol for every (representation, seed, actor). Throws
/// Error{INVALID_CONFIG} for fewer than one representation or seed.
Report compare_representations(const Corpus& corpus, const EvaluationConfig& config);

}  // namespace userscope
