#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace numerologic {

// Character-level vocabulary: a stable sorted symbol list with a bijective
// char<->id map. Built from a training corpus and persisted with checkpoints.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Sorted unique characters of all lines, plus the newline separator.
  static Vocabulary from_corpus(const std::vector<std::string>& lines);
  static Vocabulary from_symbols(std::string_view symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbols() const { return symbols_; }
  bool contains(char c) const { return ids_[static_cast<unsigned char>(c)] >= 0; }
  int id(char c) const { return ids_[static_cast<unsigned char>(c)]; }
  // Throws ValidationError naming the character.
  int require_id(char c) const;
  char symbol(int id) const { return symbols_[static_cast<size_t>(id)]; }

  std::vector<int> encode(std::string_view text) const;  // throws on OOV
  std::string decode(const std::vector<int>& ids) const;

 private:
  std::string symbols_;
  std::array<int, 256> ids_{};
};

}  // namespace numerologic
