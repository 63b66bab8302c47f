#include "projlm/path_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace projlm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'P', 'R', 'J', 'L', 'M', 'P', 'T', 'H'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 44;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::string& out, T v) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& file, const std::string& data) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string replicate_name(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "paths_r%04zu.csv", r);
  return buf;
}

std::string hash_string(const std::string& s) {
  return sha256_hex({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

}  // namespace

std::string to_string(PathFormat f) { return f == PathFormat::Csv ? "csv" : "binary"; }

PathFormat path_format_from_string(const std::string& s) {
  if (s == "csv") return PathFormat::Csv;
  if (s == "binary") return PathFormat::Binary;
  throw std::invalid_argument("unknown path format '" + s + "' (expected csv or binary)");
}

std::string sha256_hex(std::span<const unsigned char> data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& file) { return hash_string(slurp(file)); }

std::vector<FileDigest> write_paths(const PathTable& table, const fs::path& dir,
                                    PathFormat format) {
  fs::create_directories(dir);
  std::vector<FileDigest> files;
  if (format == PathFormat::Csv) {
    for (std::size_t r = 0; r < table.values.size(); ++r) {
      std::string data = "replicate,t,x\n";
      const auto& row = table.values[r];
      for (std::size_t t = 0; t < row.size(); ++t) {
        data += std::to_string(r) + "," + std::to_string(t + 1) + "," + fmt17(row[t]) + "\n";
      }
      const std::string name = replicate_name(r);
      spit(dir / name, data);
      files.push_back({name, data.size(), hash_string(data)});
    }
    return files;
  }
  std::string data(kMagic, kMagic + 8);
  put_le<std::uint32_t>(data, kVersion);
  put_le<std::uint64_t>(data, table.n);
  put_le<std::uint64_t>(data, table.M);
  put_le<std::uint64_t>(data, table.seed);
  put_le<std::uint64_t>(data, table.values.size());
  for (const auto& row : table.values) {
    if (row.size() != table.n) throw std::invalid_argument("path length differs from n");
    for (double x : row) put_le<double>(data, x);
  }
  spit(dir / "paths.bin", data);
  files.push_back({"paths.bin", data.size(), hash_string(data)});
  return files;
}

PathTable read_paths_csv(const std::vector<fs::path>& files) {
  PathTable t;
  for (const auto& f : files) {
    std::istringstream in(slurp(f));
    std::string line;
    if (!std::getline(in, line) || line != "replicate,t,x") {
      throw std::runtime_error("'" + f.string() + "' lacks the header replicate,t,x");
    }
    std::vector<double> row;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) {
        throw std::runtime_error(f.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
      }
      const std::string tx = line.substr(c1 + 1, c2 - c1 - 1);
      const std::string xs = line.substr(c2 + 1);
      char* end = nullptr;
      const double x = std::strtod(xs.c_str(), &end);
      if (end == xs.c_str() || *end != '\0') {
        throw std::runtime_error(f.string() + ":" + std::to_string(lineno) + ": bad value");
      }
      if (std::stoull(tx) != row.size() + 1) {
        throw std::runtime_error(f.string() + ":" + std::to_string(lineno) + ": t out of order");
      }
      row.push_back(x);
    }
    if (!t.values.empty() && row.size() != t.n) {
      throw std::runtime_error("'" + f.string() + "' has a different path length");
    }
    t.n = row.size();
    t.values.push_back(std::move(row));
  }
  return t;
}

PathTable read_paths_binary(const fs::path& file) {
  const std::string data = slurp(file);
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < kHeaderBytes || std::memcmp(p, kMagic, 8) != 0) {
    throw std::runtime_error("'" + file.string() + "' is not a path file");
  }
  if (get_le(p + 8, 4) != kVersion) throw std::runtime_error("unsupported path file version");
  PathTable t;
  t.n = get_le(p + 12, 8);
  t.M = get_le(p + 20, 8);
  t.seed = get_le(p + 28, 8);
  const std::uint64_t R = get_le(p + 36, 8);
  if (data.size() != kHeaderBytes + 8 * t.n * R) {
    throw std::runtime_error("'" + file.string() + "' has the wrong size for its header");
  }
  const unsigned char* q = p + kHeaderBytes;
  for (std::uint64_t r = 0; r < R; ++r) {
    std::vector<double> row(t.n);
    for (auto& x : row) {
      x = std::bit_cast<double>(get_le(q, 8));
      q += 8;
    }
    t.values.push_back(std::move(row));
  }
  return t;
}

std::string combined_digest(const std::vector<FileDigest>& files) {
  std::string s;
  for (const auto& f : files) s += f.name + " " + f.sha256 + "\n";
  return hash_string(s);
}

void write_manifest(const fs::path& dir, const std::string& config_json, PathFormat format,
                    const std::vector<FileDigest>& files) {
  json j;
  j["config"] = json::parse(config_json);
  j["format"] = to_string(format);
  json arr = json::array();
  for (const auto& f : files) arr.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  j["files"] = arr;
  j["digest"] = combined_digest(files);
  spit(dir / "manifest.json", j.dump(2) + "\n");
}

Manifest verify_manifest(const fs::path& dir) {
  const fs::path mf = dir / "manifest.json";
  if (!fs::exists(mf)) throw std::runtime_error("no manifest at '" + mf.string() + "'");
  json j;
  try {
    j = json::parse(slurp(mf));
  } catch (const json::exception& e) {
    throw std::runtime_error("unreadable manifest: " + std::string(e.what()));
  }
  Manifest m;
  try {
    m.config_json = j.at("config").dump();
    m.format = path_format_from_string(j.at("format").get<std::string>());
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("name").get<std::string>(), f.at("bytes").get<std::uint64_t>(),
                         f.at("sha256").get<std::string>()});
    }
    m.digest = j.at("digest").get<std::string>();
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest: " + std::string(e.what()));
  }
  if (combined_digest(m.files) != m.digest) throw std::runtime_error("manifest digest mismatch");
  for (const auto& f : m.files) {
    const fs::path p = dir / f.name;
    if (!fs::exists(p)) throw std::runtime_error("missing path file '" + p.string() + "'");
    if (sha256_file(p) != f.sha256) {
      throw std::runtime_error("digest mismatch for '" + p.string() + "' (stale or modified data)");
    }
  }
  return m;
}

PathTable load_manifest_paths(const fs::path& dir, const Manifest& m) {
  if (m.format == PathFormat::Binary) {
    if (m.files.size() != 1) throw std::runtime_error("binary manifest must list one file");
    return read_paths_binary(dir / m.files[0].name);
  }
  std::vector<fs::path> files;
  for (const auto& f : m.files) files.push_back(dir / f.name);
  return read_paths_csv(files);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_csv(const fs::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string data;
  for (std::size_t i = 0; i < header.size(); ++i) data += (i ? "," : "") + csv_field(header[i]);
  data += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) data += (i ? "," : "") + fmt17(row[i]);
    data += "\n";
  }
  spit(file, data);
}

}  // namespace projlm
