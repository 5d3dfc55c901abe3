#pragma once

#include <string>

namespace conceptscope {

/// Hex-encoded SHA-256 digest of a byte string.
std::string sha256_hex(const std::string& bytes);
/// Digest of a file's contents; throws if the file cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace conceptscope
