#pragma once

#include <string>

namespace dstft {

// Whole-file read; throws IoError when the file cannot be opened or read.
std::string read_file(const std::string& path);

// Whole-file write through a temporary sibling plus rename, so readers never
// observe a partial file. Throws IoError on failure.
void atomic_write(const std::string& path, const std::string& bytes);

}  // namespace dstft
