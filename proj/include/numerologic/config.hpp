#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace numerologic {

// Flat "key = value" run configuration. '#' starts a comment; keys use dotted
// paths (model.d_model, train.steps). Flags override file values by calling
// set() after load. Typed getters track which keys were read so a run can
// reject unknown (typoed) keys.
class FlatConfig {
 public:
  FlatConfig() = default;
  static FlatConfig from_file(const std::filesystem::path& path);
  static FlatConfig from_string(std::string_view text);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def) const;
  int get_int(const std::string& key, int def) const;
  uint64_t get_u64(const std::string& key, uint64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;

  std::vector<std::string> unread_keys() const;
  void fail_on_unread() const;  // throws ValidationError listing unread keys

  // Sorted "key = value" lines, suitable for the persisted resolved config.
  std::string serialize() const;

 private:
  std::optional<std::string> raw(const std::string& key) const;

  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> read_;
};

}  // namespace numerologic
