// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

// Flat key=value configuration: one assignment per line, '#' starts a
// comment, whitespace around keys and values is trimmed. The map form is
// ordered so a config has exactly one canonical text rendering, which is
// what gets hashed into run summaries.
namespace qfed::config {

using KvMap = std::map<std::string, std::string>;

KvMap parse_kv_text(const std::string& text);
KvMap load_kv_file(const std::string& path);

// Sorted "key=value\n" lines.
std::string canonical_text(const KvMap& kv);

// FNV-1a over the bytes of a string; used to fingerprint configs.
std::uint64_t fnv1a64(const std::string& bytes);

// Typed consumption of a KvMap. Every get_* removes its key; finish()
// rejects whatever was never asked for, so misspelled keys fail loudly
// instead of silently keeping a default alive.
class KvReader {
 public:
  explicit KvReader(KvMap kv);

  std::optional<std::string> take(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  long long get_int(const std::string& key, long long fallback);
  double get_double(const std::string& key, double fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  void finish() const;

 private:
  KvMap kv_;
};

}  // namespace qfed::config
