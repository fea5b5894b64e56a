#pragma once

// SHA-256 digests and extraction of .tar / .tar.gz / .tgz benchmark archives.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <zlib.h>

namespace placebo {

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

/// First 64 bits of a hex digest, for seed derivation.
inline std::uint64_t digest_prefix64(std::string_view hex) {
  if (hex.size() < 16) throw std::invalid_argument("digest too short");
  return std::stoull(std::string(hex.substr(0, 16)), nullptr, 16);
}

inline bool has_suffix(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool is_gzip(std::string_view data) {
  return data.size() >= 2 && static_cast<unsigned char>(data[0]) == 0x1f &&
         static_cast<unsigned char>(data[1]) == 0x8b;
}

/// Inflates a gzip stream (concatenated members allowed).
inline std::string gunzip(std::string_view data) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw std::runtime_error("zlib init failed");
  std::string out;
  char buf[1 << 15];
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  int rc = Z_OK;
  while (true) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_STREAM_END) {
      if (zs.avail_in == 0) break;
      inflateReset(&zs);
      continue;
    }
    if (rc != Z_OK) break;
    if (zs.avail_in == 0 && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("corrupt or truncated gzip data");
  return out;
}

struct ArchiveEntry {
  std::string name;
  std::string content;
};

/// Regular files of a ustar/GNU tar image. Other entry types are skipped.
inline std::vector<ArchiveEntry> read_tar(std::string_view tar) {
  std::vector<ArchiveEntry> out;
  std::size_t pos = 0;
  std::string long_name;
  while (pos + 512 <= tar.size()) {
    const char* h = tar.data() + pos;
    if (std::all_of(h, h + 512, [](char c) { return c == 0; })) break;
    std::string name(h, strnlen(h, 100));
    const std::string prefix(h + 345, strnlen(h + 345, 155));
    if (std::memcmp(h + 257, "ustar", 5) == 0 && !prefix.empty()) name = prefix + "/" + name;
    std::uint64_t size = 0;
    for (int i = 124; i < 136 && h[i]; ++i) {
      if (h[i] == ' ') continue;
      if (h[i] < '0' || h[i] > '7') throw std::runtime_error("corrupt tar header");
      size = size * 8 + static_cast<std::uint64_t>(h[i] - '0');
    }
    const char type = h[156];
    pos += 512;
    if (pos + size > tar.size()) throw std::runtime_error("truncated tar archive");
    std::string_view body = tar.substr(pos, size);
    pos += (size + 511) / 512 * 512;
    if (type == 'L') {  // GNU long name for the next entry
      long_name = std::string(body.data(), strnlen(body.data(), body.size()));
      continue;
    }
    if (!long_name.empty()) {
      name = long_name;
      long_name.clear();
    }
    if (type == '0' || type == '\0') out.push_back({name, std::string(body)});
  }
  return out;
}

/// Reads .tar, .tar.gz or .tgz content (gzip detected by magic bytes).
inline std::vector<ArchiveEntry> read_archive(std::string_view data) {
  if (is_gzip(data)) {
    const std::string raw = gunzip(data);
    return read_tar(raw);
  }
  return read_tar(data);
}

inline bool looks_like_archive(std::string_view path) {
  return has_suffix(path, ".tar.gz") || has_suffix(path, ".tgz") || has_suffix(path, ".tar");
}

}  // namespace placebo
