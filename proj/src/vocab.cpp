#include "numerologic/vocab.hpp"

#include <algorithm>
#include <set>

#include "numerologic/errors.hpp"

namespace numerologic {

Vocabulary Vocabulary::from_corpus(const std::vector<std::string>& lines) {
  std::set<char> chars;
  chars.insert('\n');
  for (const auto& line : lines) {
    for (char c : line) chars.insert(c);
  }
  std::string symbols(chars.begin(), chars.end());
  return from_symbols(symbols);
}

Vocabulary Vocabulary::from_symbols(std::string_view symbols) {
  Vocabulary v;
  v.ids_.fill(-1);
  v.symbols_.assign(symbols);
  std::sort(v.symbols_.begin(), v.symbols_.end());
  v.symbols_.erase(std::unique(v.symbols_.begin(), v.symbols_.end()), v.symbols_.end());
  for (size_t i = 0; i < v.symbols_.size(); ++i) {
    v.ids_[static_cast<unsigned char>(v.symbols_[i])] = static_cast<int>(i);
  }
  return v;
}

int Vocabulary::require_id(char c) const {
  int id = ids_[static_cast<unsigned char>(c)];
  if (id < 0) {
    std::string shown = c == '\n' ? std::string("\\n") : std::string(1, c);
    throw ValidationError("character '" + shown + "' (byte " +
                          std::to_string(static_cast<int>(static_cast<unsigned char>(c))) +
                          ") is not in the vocabulary");
  }
  return id;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(require_id(c));
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) out += symbol(id);
  return out;
}

}  // namespace numerologic
