#include <bit>
#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "userscope/error.hpp"
#include "userscope/vectorize.hpp"

namespace userscope {

namespace {
constexpr char kMagic[8] = {'U', 'S', 'M', 'A', 'T', 'R', 'X', '1'};
}

void write_user_matrix(const UserMatrix& matrix, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IO_ERROR", "cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  binio::put_u64(out, matrix.num_users());
  binio::put_u64(out, matrix.dim());
  binio::put_u32(out, matrix.provenance() == Provenance::Embedding ? 1u : 0u);
  binio::put_u32(out, 0u);
  binio::put_floats(out, matrix.vectors().data(), matrix.num_users() * matrix.dim());
  for (const auto& id : matrix.user_ids()) binio::put_string(out, id);
  if (!out) throw Error("IO_ERROR", "short write to " + path);
}

UserMatrix read_user_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IO_ERROR", "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error("MALFORMED_FILE", path + " is not a user matrix file");
  }
  const auto n = binio::get_u64(in);
  const auto d = binio::get_u64(in);
  const auto tag = binio::get_u32(in);
  binio::get_u32(in);
  if (tag > 1) throw Error("MALFORMED_FILE", "unknown provenance tag");
  RowMatrixF vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  binio::get_floats(in, vectors.data(), n * d);
  std::vector<std::string> ids(n);
  for (auto& id : ids) id = binio::get_string(in);
  return UserMatrix(std::move(ids), std::move(vectors), tag == 1 ? Provenance::Embedding : Provenance::TfidfFusedPca);
}

}  // namespace userscope
