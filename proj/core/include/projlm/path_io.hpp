#pragma once

/// \file
/// Path files and the reproducibility manifest.
///
/// CSV: one file per replicate, `paths_rNNNN.csv`, header `replicate,t,x`,
/// values printed with %.17g (round-trips exactly).
///
/// Binary: a single `paths.bin`:
///
///   offset  size  field
///        0     8  magic "PRJLMPTH"
///        8     4  version (u32, = 1)
///       12     8  n (u64)
///       20     8  M (u64)
///       28     8  seed (u64)
///       36     8  replicate count R (u64)
///       44  8nR   X values, replicate-major, IEEE-754 binary64
///
/// All integers and floats are little-endian.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace projlm {

enum class PathFormat { Csv, Binary };

[[nodiscard]] std::string to_string(PathFormat f);
[[nodiscard]] PathFormat path_format_from_string(const std::string& s);

struct PathTable {
  std::size_t n = 0;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> values;  ///< one row per replicate
};

struct FileDigest {
  std::string name;  ///< relative to the output directory
  std::uint64_t bytes = 0;
  std::string sha256;
};

[[nodiscard]] std::string sha256_hex(std::span<const unsigned char> data);
[[nodiscard]] std::string sha256_file(const std::filesystem::path& file);

/// Writes the table into `dir` (created if needed) and returns the files in
/// write order.
std::vector<FileDigest> write_paths(const PathTable& table, const std::filesystem::path& dir,
                                    PathFormat format);

[[nodiscard]] PathTable read_paths_csv(const std::vector<std::filesystem::path>& files);
[[nodiscard]] PathTable read_paths_binary(const std::filesystem::path& file);

/// Digest over the file list: SHA-256 of the lines "name sha256\n".
[[nodiscard]] std::string combined_digest(const std::vector<FileDigest>& files);

/// Writes `manifest.json` with the config JSON (embedded verbatim), the
/// format, per-file digests and the combined digest.
void write_manifest(const std::filesystem::path& dir, const std::string& config_json,
                    PathFormat format, const std::vector<FileDigest>& files);

struct Manifest {
  std::string config_json;
  PathFormat format = PathFormat::Csv;
  std::vector<FileDigest> files;
  std::string digest;
};

/// Reads `dir/manifest.json` and re-hashes every listed file. Throws
/// std::runtime_error on a missing file or any digest mismatch.
[[nodiscard]] Manifest verify_manifest(const std::filesystem::path& dir);

/// Loads the paths listed in a verified manifest.
[[nodiscard]] PathTable load_manifest_paths(const std::filesystem::path& dir, const Manifest& m);

/// RFC 4180 field quoting.
[[nodiscard]] std::string csv_field(const std::string& s);

/// Writes a CSV with a header row and numeric rows (%.17g).
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace projlm
