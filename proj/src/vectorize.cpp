#include "userscope/vectorize.hpp"

#include <algorithm>
#include <cmath>

#include "userscope/error.hpp"

namespace userscope {

double tfidf_weight(double tf, std::size_t n_docs, std::size_t df) {
  return tf * (std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0);
}

double ModalityMatrix::at(std::size_t row, std::size_t column) const {
  const auto& entries = rows.at(row);
  auto it = std::lower_bound(entries.begin(), entries.end(), column,
                             [](const SparseEntry& e, std::size_t c) { return e.column < c; });
  return it != entries.end() && it->column == column ? it->value : 0.0;
}

Eigen::MatrixXd ModalityMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& e : rows[r]) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e.column)) = e.value;
  }
  return out;
}

ModalityMatrix tfidf(const Corpus& corpus, std::string_view channel, const TfidfOptions& options) {
  const ChannelIndex& index = corpus.channel(channel);
  const Vocabulary& vocab = index.vocabulary;
  const std::size_t n_docs = corpus.num_users();

  // Pruning remaps surviving terms onto dense column ids.
  std::vector<std::size_t> column_of(vocab.size(), SIZE_MAX);
  ModalityMatrix m;
  m.channel = std::string(channel);
  m.user_ids = corpus.user_ids();
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    if (vocab.document_frequency(t) >= options.min_document_frequency) {
      column_of[t] = m.columns.size();
      m.columns.push_back(vocab.token(t));
    }
  }
  m.rows.resize(n_docs);
  for (std::size_t u = 0; u < n_docs; ++u) {
    for (const auto& tc : index.user_terms[u]) {
      if (column_of[tc.term] == SIZE_MAX) continue;
      m.rows[u].push_back({column_of[tc.term], tfidf_weight(static_cast<double>(tc.count), n_docs,
                                                            vocab.document_frequency(tc.term))});
    }
  }
  return m;
}

ModalityMatrix l2_normalize(ModalityMatrix matrix) {
  for (auto& row : matrix.rows) {
    double sq = 0.0;
    for (const auto& e : row) sq += e.value * e.value;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& e : row) e.value *= inv;
  }
  return matrix;
}

ModalityMatrix fuse(const std::vector<ModalityMatrix>& matrices) {
  if (matrices.empty()) throw Error("INVALID_ARGUMENT", "fuse needs at least one matrix");
  ModalityMatrix out;
  out.user_ids = matrices.front().user_ids;
  out.rows.resize(out.user_ids.size());
  for (const auto& m : matrices) {
    if (m.user_ids != out.user_ids || m.rows.size() != out.rows.size()) {
      throw Error("ROW_ORDER_MISMATCH", "channel " + m.channel + " has a different row order");
    }
    const std::size_t offset = out.columns.size();
    if (!out.channel.empty()) out.channel += '+';
    out.channel += m.channel;
    for (const auto& c : m.columns) out.columns.push_back(m.channel + ":" + c);
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      for (const auto& e : m.rows[r]) out.rows[r].push_back({offset + e.column, e.value});
    }
  }
  return out;
}

std::string_view provenance_name(Provenance p) {
  return p == Provenance::Embedding ? "embedding" : "tfidf_fused_pca";
}

Provenance parse_provenance(std::string_view name) {
  if (name == "embedding") return Provenance::Embedding;
  if (name == "tfidf_fused_pca") return Provenance::TfidfFusedPca;
  throw Error("INVALID_ARGUMENT", "unknown provenance " + std::string(name));
}

UserMatrix::UserMatrix(std::vector<std::string> user_ids, RowMatrixF vectors, Provenance provenance)
    : user_ids_(std::move(user_ids)), vectors_(std::move(vectors)), provenance_(provenance) {
  if (static_cast<Eigen::Index>(user_ids_.size()) != vectors_.rows()) {
    throw Error("INVALID_MATRIX", "user id count does not match row count");
  }
  if (!vectors_.allFinite()) throw Error("INVALID_MATRIX", "matrix contains NaN or Inf");
  rows_.reserve(user_ids_.size());
  for (std::size_t r = 0; r < user_ids_.size(); ++r) {
    if (!rows_.emplace(user_ids_[r], r).second) {
      throw Error("INVALID_MATRIX", "duplicate user id " + user_ids_[r]);
    }
  }
}

std::optional<std::size_t> UserMatrix::row(std::string_view user_id) const {
  auto it = rows_.find(std::string(user_id));
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

UserMatrix build_tfidf_representation(const Corpus& corpus, const std::vector<std::string>& channels,
                                      const TfidfRepresentationOptions& options) {
  if (channels.empty()) throw Error("INVALID_ARGUMENT", "at least one channel is required");
  std::vector<ModalityMatrix> normalized;
  for (const auto& name : channels) {
    TfidfOptions opts;
    if (name == kWordsChannel) opts.min_document_frequency = options.words_min_document_frequency;
    normalized.push_back(l2_normalize(tfidf(corpus, name, opts)));
  }

  Eigen::MatrixXd fused;
  if (options.pca_per_channel) {
    std::vector<ModalityMatrix> reduced;
    for (const auto& m : normalized) {
      if (m.num_columns() == 0) continue;
      const Eigen::MatrixXd dense = m.dense();
      const Eigen::MatrixXd projected = pca_transform(pca_fit(dense, options.dim), dense);
      ModalityMatrix r{m.channel, m.user_ids, {}, std::vector<std::vector<SparseEntry>>(m.num_rows())};
      for (Eigen::Index c = 0; c < projected.cols(); ++c) r.columns.push_back("pc" + std::to_string(c));
      for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        for (Eigen::Index c = 0; c < projected.cols(); ++c) {
          r.rows[static_cast<std::size_t>(i)].push_back({static_cast<std::size_t>(c), projected(i, c)});
        }
      }
      reduced.push_back(l2_normalize(std::move(r)));
    }
    if (reduced.empty()) throw Error("INVALID_ARGUMENT", "all requested channels are empty");
    fused = fuse(reduced).dense();
  } else {
    fused = fuse(normalized).dense();
  }

  const PcaModel model = pca_fit(fused, options.dim);
  RowMatrixF vectors = pca_transform(model, fused).cast<float>();
  return UserMatrix(corpus.user_ids(), std::move(vectors), Provenance::TfidfFusedPca);
}

}  // namespace userscope
