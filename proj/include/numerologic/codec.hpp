#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace numerologic {

// A located number inside raw text. `begin`/`end` are byte offsets into the
// source; the covered slice is int_digits, or int_digits "." frac_digits.
// Leading zeros are kept verbatim.
struct NumberMatch {
  size_t begin = 0;
  size_t end = 0;  // exclusive
  std::string int_digits;
  std::optional<std::string> frac_digits;

  bool is_float() const { return frac_digits.has_value(); }
  size_t length() const { return end - begin; }
  std::string text() const {
    return is_float() ? int_digits + "." + *frac_digits : int_digits;
  }
};

enum class SchemeKind {
  plain,
  numerologic,
  prefix_only,
  multi_special_token,
  whitespace_contiguous,
  whitespace_random,
};

// Which numbers of an equation line receive the encoding. Anything other than
// `all` requires equation-structured text (exactly one '=').
enum class Scope { all, operands_only, results_only };

struct MarkerStyle {
  std::string start;
  std::string mid;
  std::string end;

  // "<sn>2<mn>42<en>" style, for token-aware models.
  static MarkerStyle token() { return {"<sn>", "<mn>", "<en>"}; }
  // "{2:42}" style, for character-level models.
  static MarkerStyle chars() { return {"{", ":", "}"}; }
};

struct EncodingScheme {
  SchemeKind kind = SchemeKind::plain;
  Scope scope = Scope::all;
  MarkerStyle markers = MarkerStyle::token();
  char filler = '_';

  bool has_markers() const {
    return kind == SchemeKind::numerologic || kind == SchemeKind::prefix_only ||
           kind == SchemeKind::multi_special_token;
  }
  bool is_whitespace() const {
    return kind == SchemeKind::whitespace_contiguous || kind == SchemeKind::whitespace_random;
  }

  static EncodingScheme plain() { return {}; }
  static EncodingScheme numerologic_chars() {
    return {SchemeKind::numerologic, Scope::all, MarkerStyle::chars(), '_'};
  }
  static EncodingScheme numerologic_tokens() {
    return {SchemeKind::numerologic, Scope::all, MarkerStyle::token(), '_'};
  }
};

// Declared digit counts (parsed from a prefix) vs. the counts actually present.
struct MismatchReport {
  int declared_int_len = 0;
  std::optional<int> declared_frac_len;
  int actual_int_len = 0;
  std::optional<int> actual_frac_len;
  bool is_mismatch = false;
};

struct MismatchScan {
  std::vector<MismatchReport> reports;
  size_t malformed = 0;  // marker sequences that never formed a complete encoding

  size_t encoded_numbers() const { return reports.size(); }
  size_t mismatched() const {
    size_t n = 0;
    for (const auto& r : reports) n += r.is_mismatch ? 1 : 0;
    return n;
  }
};

// Left-to-right maximal scan for \d+(\.\d+)? — a "." joins one float match only
// when digits follow it.
std::vector<NumberMatch> find_numbers(std::string_view text);

// Single-number rewrite. numerologic: start len(int)[.len(frac)] mid digits end;
// prefix_only drops the end marker; multi_special_token emits
// "<Ndigitnumber>" + digits and accepts integers of 1..20 digits only.
std::string encode_number(const NumberMatch& m, const EncodingScheme& scheme);

// Rewrites every match in `text`; non-number bytes pass through untouched.
// Refuses input that already contains marker strings unless `force` is set.
// whitespace_random needs `seed`; other kinds ignore it.
std::string encode_text(std::string_view text, const EncodingScheme& scheme,
                        bool force = false, std::optional<uint64_t> seed = std::nullopt);

// Filler-character control: pads each number with exactly the overhead
// NumeroLogic (char markers) would add, either mirroring its layout
// (contiguous) or at seeded-random slots.
std::string encode_whitespace_variant(std::string_view text, bool random_positions,
                                      char filler, uint64_t seed);

// Character overhead char-style NumeroLogic adds to this number (the filler
// budget E). Computed from the encoded layout, never hardcoded.
size_t whitespace_overhead(const NumberMatch& m);

// Inverse transform: strips prefix regions and end markers best-effort, exactly
// the paper's two-substitution procedure. Idempotent; never throws.
std::string decode_text(std::string_view text, const EncodingScheme& scheme);

// Scope-aware rewrite of one equation line (lhs '=' rhs). Scope::all also
// accepts free text.
std::string encode_line(std::string_view line, const EncodingScheme& scheme,
                        std::optional<uint64_t> seed = std::nullopt, bool force = false);

// One report per well-formed encoded number; anything else starting with the
// start marker counts as malformed. `require_end_marker` is false for
// prefix-only encodings.
MismatchScan detect_mismatches(std::string_view text, const MarkerStyle& markers,
                               bool require_end_marker = true);

// Scheme dispatch over detect_mismatches, including the <Ndigitnumber> form.
// Markerless schemes yield an empty scan.
MismatchScan scan_mismatches(std::string_view text, const EncodingScheme& scheme);

const char* to_string(SchemeKind kind);
const char* to_string(Scope scope);

}  // namespace numerologic
