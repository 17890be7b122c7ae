#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rgtn/tensor.hpp"

namespace rgtn {

/// Unreadable, truncated, corrupted or wrong-version archive.
class ArchiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Named tensors plus single-line metadata, stored as
///
///   "RGTNCKPT"              8 bytes
///   version                 u32, little-endian (currently 1)
///   header length           u64, little-endian
///   header                  text, one record per line:
///                             kind <word>
///                             meta <key> <value to end of line>
///                             tensor <name> <order> <extent>...
///   payload                 every tensor's entries in header order, each
///                           tensor in Little-Endian index order, as
///                           little-endian IEEE-754 binary64
///   checksum                u64, FNV-1a over all preceding bytes
struct Archive {
    static constexpr std::uint32_t kVersion = 1;

    std::string kind;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;
    std::optional<std::string> meta_value(const std::string& key) const;
};

void write_archive(std::ostream& out, const Archive& archive);
Archive read_archive(std::istream& in);
void save_archive(const std::string& path, const Archive& archive);
Archive load_archive(const std::string& path);
/// True when the file starts with the archive magic.
bool is_archive_file(const std::string& path);

/// Plain-text tensor: a line `shape I1 ... IN` (no extents for a scalar)
/// followed by the entries in Little-Endian order, whitespace separated.
/// Lines starting with '#' are comments.
void write_text_tensor(std::ostream& out, const Tensor& t);
Tensor read_text_tensor(std::istream& in);

}  // namespace rgtn
