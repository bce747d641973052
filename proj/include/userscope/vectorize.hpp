#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "userscope/corpus.hpp"

namespace userscope {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// tf * (ln((1 + n_docs) / (1 + df)) + 1). Documents are users.
double tfidf_weight(double tf, std::size_t n_docs, std::size_t df);

struct SparseEntry {
  std::size_t column = 0;
  double value = 0.0;
};

/// User x term weights for one channel (or a fusion of channels). Rows
/// follow the corpus user order; each row is sorted by column.
struct ModalityMatrix {
  std::string channel;
  std::vector<std::string> user_ids;
  std::vector<std::string> columns;
  std::vector<std::vector<SparseEntry>> rows;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_columns() const { return columns.size(); }
  double at(std::size_t row, std::size_t column) const;
  Eigen::MatrixXd dense() const;
};

struct TfidfOptions {
  /// Terms used by fewer users are dropped before weighting (0 or 1 keeps all).
  std::size_t min_document_frequency = 0;
};

/// Throws Error{UNKNOWN_CHANNEL}. An empty vocabulary yields zero columns.
ModalityMatrix tfidf(const Corpus& corpus, std::string_view channel, const TfidfOptions& options = {});

/// Scales every nonzero row to unit L2 norm; zero rows stay zero.
ModalityMatrix l2_normalize(ModalityMatrix matrix);

/// Column-wise concatenation in the given order. Column names become
/// "<channel>:<term>". Throws Error{ROW_ORDER_MISMATCH}.
ModalityMatrix fuse(const std::vector<ModalityMatrix>& matrices);

struct PcaModel {
  Eigen::VectorXd mean;
  /// k x original-dim, orthonormal rows sorted by decreasing variance.
  Eigen::MatrixXd components;
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_variance_ratio;
  std::size_t requested_components = 0;

  std::size_t num_components() const { return static_cast<std::size_t>(components.rows()); }
  /// Components lost because the centered data had lower rank than requested.
  std::size_t shortfall() const { return requested_components - num_components(); }
};

/// Exact eigendecomposition of the covariance (or of the Gram matrix when
/// there are fewer rows than columns). Each component's largest-magnitude
/// entry is positive. Throws Error{INVALID_ARGUMENT} for k < 1 or < 2 rows.
PcaModel pca_fit(const Eigen::MatrixXd& data, std::size_t k);
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data);

enum class Provenance { TfidfFusedPca, Embedding };

std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view name);

/// Dense per-user vectors; the substrate for classification, layout and
/// similarity. Rows follow `user_ids`.
class UserMatrix {
 public:
  UserMatrix() = default;
  /// Throws Error{INVALID_MATRIX} on size mismatch, duplicate ids or non-finite values.
  UserMatrix(std::vector<std::string> user_ids, RowMatrixF vectors, Provenance provenance);

  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const RowMatrixF& vectors() const { return vectors_; }
  Provenance provenance() const { return provenance_; }
  std::size_t num_users() const { return user_ids_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  std::optional<std::size_t> row(std::string_view user_id) const;
  auto row_vector(std::size_t r) const { return vectors_.row(static_cast<Eigen::Index>(r)); }

  bool operator==(const UserMatrix& other) const {
    return provenance_ == other.provenance_ && user_ids_ == other.user_ids_ && vectors_ == other.vectors_;
  }

 private:
  std::vector<std::string> user_ids_;
  RowMatrixF vectors_;
  Provenance provenance_ = Provenance::TfidfFusedPca;
  std::unordered_map<std::string, std::size_t> rows_;
};

struct TfidfRepresentationOptions {
  std::size_t dim = 128;
  /// Applied to the words channel only; concept channels are never pruned.
  std::size_t words_min_document_frequency = 2;
  /// Alternative pipeline: reduce every channel separately, then fuse and reduce again.
  bool pca_per_channel = false;
};

/// tfidf -> l2_normalize per channel -> fuse -> PCA.
UserMatrix build_tfidf_representation(const Corpus& corpus, const std::vector<std::string>& channels,
                                      const TfidfRepresentationOptions& options = {});

/// Binary matrix file; layout documented in README.
void write_user_matrix(const UserMatrix& matrix, const std::string& path);
UserMatrix read_user_matrix(const std::string& path);

}  // namespace userscope
