#pragma once

#include <string>

namespace actrob {

std::string read_file(const std::string& path);

/// Writes to a sibling temporary file and renames it over `path`, creating
/// parent directories as needed.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Content hash of a file, hex encoded.
std::string file_hash(const std::string& path);

}  // namespace actrob
