// Command-line front end: one subcommand per pipeline stage.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "userscope/corpus.hpp"
#include "userscope/embed.hpp"
#include "userscope/error.hpp"
#include "userscope/evaluate.hpp"
#include "userscope/interactive.hpp"
#include "userscope/profile.hpp"
#include "userscope/server.hpp"
#include "userscope/vectorize.hpp"

using namespace userscope;
using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("IO_ERROR", "cannot write " + path);
  out << text;
}

std::size_t default_community_count(const Corpus& corpus) {
  const auto cats = corpus.categories();
  return std::min(cats.empty() ? std::size_t{10} : cats.size(), corpus.num_users());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"userscope: multimodal user representations, profiles and relevance-feedback search"};
  app.require_subcommand(1);

  // ingest
  std::string input;
  std::size_t min_posts = 3;
  auto* ingest = app.add_subcommand("ingest", "validate a JSONL corpus and print a summary");
  ingest->add_option("--input", input, "JSONL post file")->required();
  ingest->add_option("--min-posts", min_posts, "drop users with fewer posts");

  // synth
  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic labelled corpus");
  synth->add_option("--communities", synth_cfg.n_communities);
  synth->add_option("--users-per-community", synth_cfg.users_per_community);
  synth->add_option("--seed", synth_cfg.rng_seed);
  synth->add_option("--mixing", synth_cfg.mixing);
  synth->add_option("--min-posts-per-user", synth_cfg.min_posts_per_user);
  synth->add_option("--max-posts-per-user", synth_cfg.max_posts_per_user);
  synth->add_option("--vocab", synth_cfg.vocab_per_community, "words per community pool");
  synth->add_option("--concepts", synth_cfg.concepts_per_community, "concepts per community pool and channel");
  synth->add_option("--topics", synth_cfg.topics_per_community, "contextual mode: topics per community");
  synth->add_flag("--contextual", synth_cfg.contextual_mode, "shared vocabulary, communities differ by co-occurrence");
  synth->add_option("--out", synth_out)->required();

  // vectorize
  std::string corpus_path, channels_csv, out_path;
  std::size_t dim = 128;
  auto* vectorize = app.add_subcommand("vectorize", "TFIDF + fusion + PCA user matrix");
  vectorize->add_option("--corpus", corpus_path)->required();
  vectorize->add_option("--channels", channels_csv, "comma separated; default all channels");
  vectorize->add_option("--dim", dim);
  vectorize->add_option("--min-posts", min_posts);
  vectorize->add_option("--out", out_path)->required();

  // embed
  std::string setup_text = "cwu";
  Hyperparams hp;
  auto* embed = app.add_subcommand("embed", "train a joint user/word/concept embedding space");
  embed->add_option("--corpus", corpus_path)->required();
  embed->add_option("--setup", setup_text)->check(CLI::IsMember({"cwu", "wuc"}));
  embed->add_option("--dim", hp.dim);
  embed->add_option("--epochs", hp.epochs);
  embed->add_option("--margin", hp.margin);
  embed->add_option("--negatives", hp.negatives);
  embed->add_option("--lr", hp.learning_rate);
  embed->add_option("--seed", hp.rng_seed);
  embed->add_option("--min-posts", min_posts);
  embed->add_option("--out", out_path)->required();
  std::string matrix_out;
  embed->add_option("--matrix-out", matrix_out, "also write the user matrix");

  // profile
  std::string space_path, user_id;
  std::optional<std::size_t> community;
  std::size_t nn = 15;
  std::uint64_t seed = 0;
  auto* profile = app.add_subcommand("profile", "print a user or community profile as JSON");
  profile->add_option("--corpus", corpus_path)->required();
  profile->add_option("--space", space_path)->required();
  auto* user_opt = profile->add_option("--user", user_id);
  auto* comm_opt = profile->add_option("--community", community);
  user_opt->excludes(comm_opt);
  profile->add_option("--nn", nn);
  profile->add_option("--seed", seed, "k-means seed for --community");
  profile->add_option("--min-posts", min_posts);

  // session
  std::string matrix_path, judgments_path;
  bool do_rank = false;
  std::size_t top_n = kDefaultTopN;
  std::size_t bootstrap_count = 15;
  auto* session = app.add_subcommand("session", "scripted relevance-feedback round");
  session->add_option("--matrix", matrix_path)->required();
  session->add_option("--judgments", judgments_path, "JSONL of {user_id, relevant}")->required();
  session->add_flag("--rank", do_rank, "train and print the top N; otherwise print bootstrap candidates");
  session->add_option("--n", top_n);
  session->add_option("--count", bootstrap_count, "bootstrap candidates to print");
  session->add_option("--seed", seed);

  // evaluate
  std::string reps_csv = "tfidf,cwu";
  EvaluationConfig eval_cfg;
  std::size_t n_seeds = 5;
  std::string csv_path;
  auto* evaluate = app.add_subcommand("evaluate", "simulated-actor comparison of representations");
  evaluate->add_option("--corpus", corpus_path)->required();
  evaluate->add_option("--reps", reps_csv);
  evaluate->add_option("--rounds", eval_cfg.rounds);
  evaluate->add_option("--n", eval_cfg.top_n);
  evaluate->add_option("--seeds", n_seeds, "runs seeds 1..S");
  evaluate->add_option("--dim", dim);
  evaluate->add_option("--min-posts", min_posts);
  evaluate->add_option("--out", out_path)->required();
  evaluate->add_option("--csv", csv_path, "also write the MAP table");

  // serve
  ServerOptions server_opts;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP API over one corpus");
  serve->add_option("--corpus", corpus_path)->required();
  serve->add_option("--rep", server_opts.representation)->check(CLI::IsMember({"cwu", "wuc", "tfidf"}));
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--seed", server_opts.seed);
  serve->add_option("--min-posts", min_posts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const Corpus corpus = load_corpus(input, min_posts);
      json summary{{"users", corpus.num_users()},
                   {"posts", corpus.posts().size()},
                   {"channels", corpus.channel_names()},
                   {"categories", corpus.categories()},
                   {"interaction_edges", corpus.interaction_edges().size()}};
      std::cout << summary.dump(2) << "\n";
    } else if (*synth) {
      write_corpus(generate_synthetic(synth_cfg), synth_out);
    } else if (*vectorize) {
      const Corpus corpus = load_corpus(corpus_path, min_posts);
      TfidfRepresentationOptions opts;
      opts.dim = dim;
      const auto channels = channels_csv.empty() ? corpus.channel_names() : split_csv(channels_csv);
      const UserMatrix m = build_tfidf_representation(corpus, channels, opts);
      write_user_matrix(m, out_path);
      std::cerr << m.num_users() << " users x " << m.dim() << " dims\n";
    } else if (*embed) {
      const Corpus corpus = load_corpus(corpus_path, min_posts);
      const TrainingResult result = train_embeddings(corpus, parse_setup(setup_text), hp);
      write_space(result.space, out_path);
      if (!matrix_out.empty()) write_user_matrix(user_matrix(result.space, corpus), matrix_out);
      for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        std::cerr << "epoch " << e + 1 << " mean loss " << result.epoch_loss[e] << "\n";
      }
    } else if (*profile) {
      const Corpus corpus = load_corpus(corpus_path, min_posts);
      const EmbeddingSpace space = read_space(space_path);
      Profile p;
      if (community) {
        const auto communities = detect_communities(user_matrix(space, corpus), default_community_count(corpus), seed);
        if (*community >= communities.k) throw Error("UNKNOWN_COMMUNITY", "no community " + std::to_string(*community));
        p = build_community_profile(corpus, space, communities, *community, nn);
      } else if (!user_id.empty()) {
        p = build_profile(corpus, space, user_id, nn);
      } else {
        throw Error("INVALID_ARGUMENT", "profile needs --user or --community");
      }
      nlohmann::ordered_json items = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < p.items.size(); ++i) {
        const auto& item = p.items[i];
        items.push_back(nlohmann::ordered_json{{"id", item.id}, {"kind", item_kind_name(item.kind)}, {"usage", item.usage_count},
                         {"score_rank", i + 1}});
      }
      std::cout << items.dump(2) << "\n";
    } else if (*session) {
      auto rep = std::make_shared<const UserMatrix>(read_user_matrix(matrix_path));
      Session s(rep, top_n, seed);
      std::ifstream in(judgments_path);
      if (!in) throw Error("IO_ERROR", "cannot read " + judgments_path);
      std::vector<std::pair<std::string, bool>> judgments;
      std::size_t line_no = 0;
      for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          const json j = json::parse(line);
          judgments.emplace_back(j.at("user_id").get<std::string>(), j.at("relevant").get<bool>());
        } catch (const json::exception& e) {
          throw Error("MALFORMED_FILE", "line " + std::to_string(line_no) + ": " + e.what());
        }
      }
      s.judge(judgments);
      if (do_rank) {
        const RankResult r = s.train_and_rank();
        std::cout << json{{"round", r.round}, {"top", r.top}}.dump(2) << "\n";
      } else {
        std::cout << json{{"bootstrap", s.bootstrap_negatives(bootstrap_count)}}.dump(2) << "\n";
      }
    } else if (*evaluate) {
      const Corpus corpus = load_corpus(corpus_path, min_posts);
      for (const auto& name : split_csv(reps_csv)) eval_cfg.representations.push_back(representation_config(name, dim));
      eval_cfg.seeds.clear();
      for (std::uint64_t s = 1; s <= n_seeds; ++s) eval_cfg.seeds.push_back(s);
      const Report report = compare_representations(corpus, eval_cfg);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      write_text(out_path, report.to_json().dump(2) + "\n");
      if (!csv_path.empty()) write_text(csv_path, report.map_table_csv());
      std::cerr << report.map_table_csv();
    } else if (*serve) {
      AppState state(load_corpus(corpus_path, min_posts), server_opts);
      Api api(state);
      serve_http(api, host, port);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
