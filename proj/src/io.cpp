#include "topview/io.hpp"

#include "topview/core.hpp"

#include <fstream>
#include <sstream>

namespace topview::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::MissingFile, "write failed for " + path.string());
}

}  // namespace topview::io
