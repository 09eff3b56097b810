#include "numerologic/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "numerologic/errors.hpp"

namespace numerologic {

namespace {

std::string trim(std::string_view s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace

FlatConfig FlatConfig::from_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return from_string(buf.str());
}

FlatConfig FlatConfig::from_string(std::string_view text) {
  FlatConfig cfg;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + " has no '=': " + stripped);
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(line_no) + " has an empty key");
    }
    cfg.kv_[key] = value;
    if (end == text.size()) break;
  }
  return cfg;
}

void FlatConfig::set(const std::string& key, std::string value) { kv_[key] = std::move(value); }

std::optional<std::string> FlatConfig::raw(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return std::nullopt;
  read_.insert(key);
  return it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& def) const {
  return raw(key).value_or(def);
}

int FlatConfig::get_int(const std::string& key, int def) const {
  auto v = raw(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    int out = std::stoi(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ValidationError("config key " + key + " is not an integer: " + *v);
  }
}

uint64_t FlatConfig::get_u64(const std::string& key, uint64_t def) const {
  auto v = raw(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    uint64_t out = std::stoull(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ValidationError("config key " + key + " is not an unsigned integer: " + *v);
  }
}

double FlatConfig::get_double(const std::string& key, double def) const {
  auto v = raw(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    double out = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ValidationError("config key " + key + " is not a number: " + *v);
  }
}

bool FlatConfig::get_bool(const std::string& key, bool def) const {
  auto v = raw(key);
  if (!v) return def;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  throw ValidationError("config key " + key + " is not a boolean: " + *v);
}

std::vector<std::string> FlatConfig::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_) {
    if (!read_.count(k)) out.push_back(k);
  }
  return out;
}

void FlatConfig::fail_on_unread() const {
  auto unread = unread_keys();
  if (unread.empty()) return;
  std::string msg = "unknown config keys:";
  for (const auto& k : unread) msg += " " + k;
  throw ValidationError(msg);
}

std::string FlatConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

}  // namespace numerologic
