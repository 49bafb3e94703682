#ifndef TOPVIEW_IO_HPP
#define TOPVIEW_IO_HPP

#include <filesystem>
#include <string>

namespace topview::io {

/// Whole-file read; MissingFile when the path cannot be opened.
std::string read_file(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace topview::io

#endif  // TOPVIEW_IO_HPP
