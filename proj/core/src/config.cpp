// SPDX-License-Identifier: Apache-2.0
#include "qfed/config.hpp"

#include <fstream>
#include <sstream>

#include "qfed/error.hpp"

namespace qfed::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvMap parse_kv_text(const std::string& text) {
  KvMap kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(line_no) +
                  ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw Error("config line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw Error("config line " + std::to_string(line_no) +
                  ": duplicate key '" + key + "'");
  }
  return kv;
}

KvMap load_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_kv_text(text);
}

std::string canonical_text(const KvMap& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

KvReader::KvReader(KvMap kv) : kv_(std::move(kv)) {}

std::optional<std::string> KvReader::take(const std::string& key) {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return std::nullopt;
  std::string v = it->second;
  kv_.erase(it);
  return v;
}

std::string KvReader::get_string(const std::string& key,
                                 const std::string& fallback) {
  return take(key).value_or(fallback);
}

long long KvReader::get_int(const std::string& key, long long fallback) {
  const auto v = take(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const long long out = std::stoll(*v, &used);
    if (used != v->size()) throw Error("");
    return out;
  } catch (...) {
    throw Error("config key '" + key + "': not an integer: '" + *v + "'");
  }
}

double KvReader::get_double(const std::string& key, double fallback) {
  const auto v = take(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used != v->size()) throw Error("");
    return out;
  } catch (...) {
    throw Error("config key '" + key + "': not a number: '" + *v + "'");
  }
}

std::uint64_t KvReader::get_u64(const std::string& key,
                                std::uint64_t fallback) {
  const auto v = take(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long out = std::stoull(*v, &used);
    if (used != v->size()) throw Error("");
    return out;
  } catch (...) {
    throw Error("config key '" + key + "': not an unsigned integer: '" + *v +
                "'");
  }
}

void KvReader::finish() const {
  if (kv_.empty()) return;
  std::string names;
  for (const auto& [k, _] : kv_) {
    if (!names.empty()) names += ", ";
    names += k;
  }
  throw Error("unknown config keys: " + names);
}

}  // namespace qfed::config
