#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "userscope/embed.hpp"
#include "userscope/error.hpp"

namespace userscope {

namespace {
constexpr char kMagic[8] = {'U', 'S', 'E', 'M', 'B', 'S', 'P', '1'};
}

void write_space(const EmbeddingSpace& space, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IO_ERROR", "cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  binio::put_u32(out, space.setup() == Setup::ConceptsWordsToUser ? 0u : 1u);
  binio::put_u32(out, 0u);
  binio::put_u64(out, space.dim());
  binio::put_u64(out, space.features().size());
  binio::put_u64(out, space.labels().size());
  for (const auto& n : space.features().names()) binio::put_string(out, n);
  for (const auto& n : space.labels().names()) binio::put_string(out, n);
  binio::put_floats(out, space.feature_table().data(), static_cast<std::size_t>(space.feature_table().size()));
  binio::put_floats(out, space.label_table().data(), static_cast<std::size_t>(space.label_table().size()));
  if (!out) throw Error("IO_ERROR", "short write to " + path);
}

EmbeddingSpace read_space(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IO_ERROR", "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error("MALFORMED_FILE", path + " is not an embedding space file");
  }
  const auto setup_tag = binio::get_u32(in);
  binio::get_u32(in);
  if (setup_tag > 1) throw Error("MALFORMED_FILE", "unknown setup tag");
  const auto d = static_cast<Eigen::Index>(binio::get_u64(in));
  const auto n_features = binio::get_u64(in);
  const auto n_labels = binio::get_u64(in);
  IdRegistry features;
  IdRegistry labels;
  for (std::uint64_t i = 0; i < n_features; ++i) features.add(binio::get_string(in));
  for (std::uint64_t i = 0; i < n_labels; ++i) labels.add(binio::get_string(in));
  if (features.size() != n_features || labels.size() != n_labels) {
    throw Error("MALFORMED_FILE", "duplicate names in registry");
  }
  RowMatrixF feature_table(static_cast<Eigen::Index>(n_features), d);
  RowMatrixF label_table(static_cast<Eigen::Index>(n_labels), d);
  binio::get_floats(in, feature_table.data(), static_cast<std::size_t>(feature_table.size()));
  binio::get_floats(in, label_table.data(), static_cast<std::size_t>(label_table.size()));
  return EmbeddingSpace(setup_tag == 0 ? Setup::ConceptsWordsToUser : Setup::WordsToUserConcepts,
                        std::move(features), std::move(labels), std::move(feature_table), std::move(label_table));
}

}  // namespace userscope
