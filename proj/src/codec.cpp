#include "numerologic/codec.hpp"

#include <algorithm>
#include <cctype>

#include "numerologic/errors.hpp"
#include "numerologic/rng.hpp"

namespace numerologic {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool starts_with_at(std::string_view text, size_t pos, std::string_view prefix) {
  return text.size() - pos >= prefix.size() && text.substr(pos, prefix.size()) == prefix;
}

// Length-field region of a prefix: \d+(\.\d+)? starting at pos. Returns the
// end offset, or pos if there is no valid field here.
size_t scan_length_field(std::string_view text, size_t pos) {
  size_t i = pos;
  while (i < text.size() && is_digit(text[i])) ++i;
  if (i == pos) return pos;
  if (i < text.size() && text[i] == '.') {
    size_t j = i + 1;
    while (j < text.size() && is_digit(text[j])) ++j;
    if (j > i + 1) return j;
  }
  return i;
}

std::string int_to_string(size_t v) { return std::to_string(v); }

}  // namespace

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::plain: return "plain";
    case SchemeKind::numerologic: return "numerologic";
    case SchemeKind::prefix_only: return "prefix-only";
    case SchemeKind::multi_special_token: return "multi-token";
    case SchemeKind::whitespace_contiguous: return "ws-contiguous";
    case SchemeKind::whitespace_random: return "ws-random";
  }
  return "?";
}

const char* to_string(Scope scope) {
  switch (scope) {
    case Scope::all: return "all";
    case Scope::operands_only: return "operands";
    case Scope::results_only: return "results";
  }
  return "?";
}

std::vector<NumberMatch> find_numbers(std::string_view text) {
  std::vector<NumberMatch> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    NumberMatch m;
    m.begin = i;
    size_t j = i;
    while (j < n && is_digit(text[j])) ++j;
    m.int_digits.assign(text.substr(i, j - i));
    // "." joins a float only when at least one digit follows it.
    if (j < n && text[j] == '.' && j + 1 < n && is_digit(text[j + 1])) {
      size_t k = j + 1;
      while (k < n && is_digit(text[k])) ++k;
      m.frac_digits = std::string(text.substr(j + 1, k - j - 1));
      j = k;
    }
    m.end = j;
    out.push_back(std::move(m));
    i = j;
  }
  return out;
}

std::string encode_number(const NumberMatch& m, const EncodingScheme& scheme) {
  switch (scheme.kind) {
    case SchemeKind::numerologic:
    case SchemeKind::prefix_only: {
      std::string out = scheme.markers.start;
      out += int_to_string(m.int_digits.size());
      if (m.is_float()) {
        out += '.';
        out += int_to_string(m.frac_digits->size());
      }
      out += scheme.markers.mid;
      out += m.text();
      if (scheme.kind == SchemeKind::numerologic) out += scheme.markers.end;
      return out;
    }
    case SchemeKind::multi_special_token: {
      if (m.is_float()) {
        throw SchemeError("multi-token encoding supports integers only, got \"" + m.text() + "\"");
      }
      if (m.int_digits.size() > 20) {
        throw SchemeError("multi-token encoding caps at 20 digits, got " +
                          int_to_string(m.int_digits.size()));
      }
      return "<" + int_to_string(m.int_digits.size()) + "digitnumber>" + m.int_digits;
    }
    default:
      throw SchemeError(std::string("encode_number not defined for scheme ") +
                        to_string(scheme.kind));
  }
}

size_t whitespace_overhead(const NumberMatch& m) {
  EncodingScheme nl{SchemeKind::numerologic, Scope::all, MarkerStyle::chars(), '_'};
  return encode_number(m, nl).size() - m.length();
}

std::string encode_whitespace_variant(std::string_view text, bool random_positions,
                                      char filler, uint64_t seed) {
  auto matches = find_numbers(text);
  std::string out;
  out.reserve(text.size() + matches.size() * 6);
  Rng rng(seed);
  size_t cursor = 0;
  for (const auto& m : matches) {
    out.append(text.substr(cursor, m.begin - cursor));
    const size_t e = whitespace_overhead(m);
    const std::string num = m.text();
    if (!random_positions) {
      // Mirror the NumeroLogic layout: prefix-region fillers before, one after.
      out.append(e - 1, filler);
      out += num;
      out += filler;
    } else {
      const size_t slots = num.size() + e;
      std::vector<size_t> idx(slots);
      for (size_t i = 0; i < slots; ++i) idx[i] = i;
      rng.shuffle(idx);
      std::vector<bool> is_filler(slots, false);
      for (size_t i = 0; i < e; ++i) is_filler[idx[i]] = true;
      size_t next_digit = 0;
      for (size_t i = 0; i < slots; ++i) {
        out += is_filler[i] ? filler : num[next_digit++];
      }
    }
    cursor = m.end;
  }
  out.append(text.substr(cursor));
  return out;
}

std::string encode_text(std::string_view text, const EncodingScheme& scheme, bool force,
                        std::optional<uint64_t> seed) {
  switch (scheme.kind) {
    case SchemeKind::plain:
      return std::string(text);
    case SchemeKind::whitespace_contiguous:
      return encode_whitespace_variant(text, false, scheme.filler, 0);
    case SchemeKind::whitespace_random:
      if (!seed) {
        throw ValidationError("ws-random encoding requires an explicit seed");
      }
      return encode_whitespace_variant(text, true, scheme.filler, *seed);
    default:
      break;
  }

  if (!force) {
    for (const std::string* marker :
         {&scheme.markers.start, &scheme.markers.mid, &scheme.markers.end}) {
      if (!marker->empty() && text.find(*marker) != std::string_view::npos) {
        throw ValidationError("input already contains marker \"" + *marker +
                              "\"; refusing to double-encode (use force to override)");
      }
    }
    if (scheme.kind == SchemeKind::multi_special_token &&
        text.find("digitnumber>") != std::string_view::npos) {
      throw ValidationError("input already contains <Ndigitnumber> tokens; "
                            "refusing to double-encode (use force to override)");
    }
  }

  auto matches = find_numbers(text);
  std::string out;
  out.reserve(text.size() + matches.size() * 8);
  size_t cursor = 0;
  for (const auto& m : matches) {
    out.append(text.substr(cursor, m.begin - cursor));
    out += encode_number(m, scheme);
    cursor = m.end;
  }
  out.append(text.substr(cursor));
  return out;
}

namespace {

// First substitution of the decode procedure: drop every
// start-marker [digits/dots] mid-marker sequence, leftmost scan.
std::string strip_prefixes(std::string_view text, const MarkerStyle& markers) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (starts_with_at(text, i, markers.start)) {
      size_t field_end = scan_length_field(text, i + markers.start.size());
      if (field_end > i + markers.start.size() && starts_with_at(text, field_end, markers.mid)) {
        i = field_end + markers.mid.size();
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

// Second substitution: drop every end marker.
std::string strip_all(std::string_view text, std::string_view needle) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (starts_with_at(text, i, needle)) {
      i += needle.size();
      continue;
    }
    out += text[i++];
  }
  return out;
}

std::string strip_multi_tokens(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      size_t j = i + 1;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j > i + 1 && starts_with_at(text, j, "digitnumber>")) {
        i = j + 12;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

}  // namespace

std::string decode_text(std::string_view text, const EncodingScheme& scheme) {
  switch (scheme.kind) {
    case SchemeKind::plain:
      return std::string(text);
    case SchemeKind::numerologic:
    case SchemeKind::prefix_only:
      return strip_all(strip_prefixes(text, scheme.markers), scheme.markers.end);
    case SchemeKind::multi_special_token:
      return strip_multi_tokens(text);
    case SchemeKind::whitespace_contiguous:
    case SchemeKind::whitespace_random: {
      std::string out;
      out.reserve(text.size());
      for (char c : text) {
        if (c != scheme.filler) out += c;
      }
      return out;
    }
  }
  return std::string(text);
}

std::string encode_line(std::string_view line, const EncodingScheme& scheme,
                        std::optional<uint64_t> seed, bool force) {
  if (scheme.scope == Scope::all) {
    return encode_text(line, scheme, force, seed);
  }
  size_t eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ValidationError("scope \"" + std::string(to_string(scheme.scope)) +
                          "\" requires an equation line with '='");
  }
  std::string_view lhs = line.substr(0, eq);
  std::string_view rhs = line.substr(eq + 1);
  std::string out;
  if (scheme.scope == Scope::operands_only) {
    out = encode_text(lhs, scheme, force, seed);
    out += '=';
    out += rhs;
  } else {
    out = std::string(lhs);
    out += '=';
    out += encode_text(rhs, scheme, force, seed);
  }
  return out;
}

namespace {

// Measures \d+(\.\d+)? at pos; returns end offset (== pos if no digits).
size_t scan_number(std::string_view text, size_t pos, int* int_len, std::optional<int>* frac_len) {
  size_t i = pos;
  while (i < text.size() && is_digit(text[i])) ++i;
  *int_len = static_cast<int>(i - pos);
  *frac_len = std::nullopt;
  if (i == pos) return pos;
  if (i < text.size() && text[i] == '.' && i + 1 < text.size() && is_digit(text[i + 1])) {
    size_t j = i + 1;
    while (j < text.size() && is_digit(text[j])) ++j;
    *frac_len = static_cast<int>(j - i - 1);
    i = j;
  }
  return i;
}

}  // namespace

MismatchScan detect_mismatches(std::string_view text, const MarkerStyle& markers,
                               bool require_end_marker) {
  MismatchScan scan;
  size_t i = 0;
  while (i < text.size()) {
    if (!starts_with_at(text, i, markers.start)) {
      ++i;
      continue;
    }
    const size_t resume = i + markers.start.size();
    size_t p = resume;

    // Declared lengths from the prefix.
    int decl_int = 0;
    std::optional<int> decl_frac;
    size_t digits_end = p;
    while (digits_end < text.size() && is_digit(text[digits_end])) ++digits_end;
    if (digits_end == p) {
      ++scan.malformed;
      i = resume;
      continue;
    }
    decl_int = static_cast<int>(std::stol(std::string(text.substr(p, digits_end - p))));
    p = digits_end;
    if (p < text.size() && text[p] == '.') {
      size_t f_end = p + 1;
      while (f_end < text.size() && is_digit(text[f_end])) ++f_end;
      if (f_end == p + 1) {
        ++scan.malformed;
        i = resume;
        continue;
      }
      decl_frac = static_cast<int>(std::stol(std::string(text.substr(p + 1, f_end - p - 1))));
      p = f_end;
    }
    if (!starts_with_at(text, p, markers.mid)) {
      ++scan.malformed;
      i = resume;
      continue;
    }
    p += markers.mid.size();

    // Actual digit counts.
    int actual_int = 0;
    std::optional<int> actual_frac;
    size_t num_end = scan_number(text, p, &actual_int, &actual_frac);
    if (num_end == p) {
      ++scan.malformed;
      i = resume;
      continue;
    }
    p = num_end;
    if (require_end_marker) {
      if (!starts_with_at(text, p, markers.end)) {
        ++scan.malformed;
        i = resume;
        continue;
      }
      p += markers.end.size();
    }

    MismatchReport r;
    r.declared_int_len = decl_int;
    r.declared_frac_len = decl_frac;
    r.actual_int_len = actual_int;
    r.actual_frac_len = actual_frac;
    r.is_mismatch = decl_int != actual_int || decl_frac != actual_frac;
    scan.reports.push_back(r);
    i = p;
  }
  return scan;
}

MismatchScan scan_mismatches(std::string_view text, const EncodingScheme& scheme) {
  switch (scheme.kind) {
    case SchemeKind::numerologic:
      return detect_mismatches(text, scheme.markers, true);
    case SchemeKind::prefix_only:
      return detect_mismatches(text, scheme.markers, false);
    case SchemeKind::multi_special_token: {
      MismatchScan scan;
      size_t i = 0;
      while (i < text.size()) {
        if (text[i] != '<') {
          ++i;
          continue;
        }
        size_t j = i + 1;
        while (j < text.size() && is_digit(text[j])) ++j;
        if (j == i + 1 || !starts_with_at(text, j, "digitnumber>")) {
          ++i;
          continue;
        }
        int declared = static_cast<int>(std::stol(std::string(text.substr(i + 1, j - i - 1))));
        size_t p = j + 12;
        int actual = 0;
        std::optional<int> frac;
        size_t num_end = scan_number(text, p, &actual, &frac);
        if (num_end == p || frac.has_value()) {
          ++scan.malformed;
          i = p;
          continue;
        }
        MismatchReport r;
        r.declared_int_len = declared;
        r.actual_int_len = actual;
        r.is_mismatch = declared != actual;
        scan.reports.push_back(r);
        i = num_end;
      }
      return scan;
    }
    default:
      return {};
  }
}

}  // namespace numerologic
