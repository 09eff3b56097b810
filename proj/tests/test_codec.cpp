#include <doctest.h>

#include <regex>
#include <string>
#include <vector>

#include "numerologic/codec.hpp"
#include "numerologic/errors.hpp"
#include "numerologic/rng.hpp"

using namespace numerologic;

namespace {

// Oracle for the scanner: the reference pattern run through std::regex.
std::vector<std::string> regex_oracle(const std::string& text) {
  static const std::regex pattern(R"((\d+)(\.(\d+))?)");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern);
       it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

NumberMatch match_of(const std::string& number) {
  auto matches = find_numbers(number);
  REQUIRE(matches.size() == 1);
  return matches[0];
}

EncodingScheme scheme_of(SchemeKind kind, MarkerStyle markers = MarkerStyle::token()) {
  EncodingScheme s;
  s.kind = kind;
  s.markers = markers;
  return s;
}

// Random text over a small alphabet; digit-dense by construction.
std::string random_digit_text(Rng& rng, bool unicode, size_t max_len = 40) {
  static const std::vector<std::string> pieces = {
      "0", "1", "7", "9", "42", "007", "3.14", "0.5", "12.", ".", "..", "a", "x=", "+", "-",
      " ", "*", "(", ")", "v", "10.00", "999", "1.2.3", "e",
  };
  static const std::vector<std::string> unicode_pieces = {"π", "π≈3.14159", "τ", "°", "½", "→"};
  std::string out;
  const size_t n = rng.uniform_u64(max_len);
  for (size_t i = 0; i < n; ++i) {
    if (unicode && rng.uniform_u64(4) == 0) {
      out += unicode_pieces[rng.uniform_u64(unicode_pieces.size())];
    } else {
      out += pieces[rng.uniform_u64(pieces.size())];
    }
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("codec");

TEST_CASE("find_numbers basics") {
  SUBCASE("trailing dot stays outside the match") {
    auto m = find_numbers("sum is 42.");
    REQUIRE(m.size() == 1);
    CHECK(m[0].int_digits == "42");
    CHECK(!m[0].frac_digits.has_value());
    CHECK(m[0].begin == 7);
    CHECK(m[0].end == 9);
  }
  SUBCASE("float join") {
    auto m = find_numbers("pi=3.14");
    REQUIRE(m.size() == 1);
    CHECK(m[0].int_digits == "3");
    REQUIRE(m[0].frac_digits.has_value());
    CHECK(*m[0].frac_digits == "14");
  }
  SUBCASE("version string splits greedily left to right") {
    auto m = find_numbers("v1.2.3");
    REQUIRE(m.size() == 2);
    CHECK(m[0].text() == "1.2");
    CHECK(m[1].text() == "3");
  }
  SUBCASE("empty and digit-free text") {
    CHECK(find_numbers("").empty());
    CHECK(find_numbers("abc def!").empty());
  }
  SUBCASE("leading zeros preserved") {
    auto m = find_numbers("agent 007");
    REQUIRE(m.size() == 1);
    CHECK(m[0].int_digits == "007");
  }
}

TEST_CASE("find_numbers agrees with the regex oracle on random text") {
  Rng rng(20240601);
  for (int iter = 0; iter < 2000; ++iter) {
    const std::string text = random_digit_text(rng, false);
    auto expected = regex_oracle(text);
    auto matches = find_numbers(text);
    REQUIRE(matches.size() == expected.size());
    for (size_t i = 0; i < matches.size(); ++i) {
      CHECK(matches[i].text() == expected[i]);
      CHECK(text.substr(matches[i].begin, matches[i].length()) == expected[i]);
    }
  }
}

TEST_CASE("encode_number golden vectors") {
  CHECK(encode_number(match_of("42"), scheme_of(SchemeKind::numerologic)) == "<sn>2<mn>42<en>");
  CHECK(encode_number(match_of("3.14"), scheme_of(SchemeKind::numerologic)) ==
        "<sn>1.2<mn>3.14<en>");
  CHECK(encode_number(match_of("100"), scheme_of(SchemeKind::prefix_only)) == "<sn>3<mn>100");
  CHECK(encode_number(match_of("100"), scheme_of(SchemeKind::multi_special_token)) ==
        "<3digitnumber>100");
  CHECK(encode_number(match_of("42"), scheme_of(SchemeKind::numerologic, MarkerStyle::chars())) ==
        "{2:42}");
  CHECK(encode_number(match_of("007"), scheme_of(SchemeKind::numerologic, MarkerStyle::chars())) ==
        "{3:007}");
  // multi-digit length fields
  CHECK(encode_number(match_of("123456789012"),
                      scheme_of(SchemeKind::numerologic, MarkerStyle::chars())) ==
        "{12:123456789012}");
}

TEST_CASE("encode_number error paths") {
  CHECK_THROWS_AS(encode_number(match_of("3.14"), scheme_of(SchemeKind::multi_special_token)),
                  SchemeError);
  CHECK_THROWS_AS(encode_number(match_of("123456789012345678901"),
                                scheme_of(SchemeKind::multi_special_token)),
                  SchemeError);
  CHECK_THROWS_AS(encode_number(match_of("42"), scheme_of(SchemeKind::plain)), SchemeError);
}

TEST_CASE("encode_text") {
  EncodingScheme chars = EncodingScheme::numerologic_chars();
  CHECK(encode_text("12+345=357", chars) == "{2:12}+{3:345}={3:357}");
  CHECK(encode_text("x is -7", scheme_of(SchemeKind::numerologic)) == "x is -<sn>1<mn>7<en>");
  CHECK(encode_text("", chars).empty());
  SUBCASE("plain is identity") {
    EncodingScheme plain;
    CHECK(encode_text("anything 42 goes", plain) == "anything 42 goes");
  }
  SUBCASE("non-number bytes preserved") {
    CHECK(encode_text("a 1 b 2.5 c", chars) == "a {1:1} b {1.1:2.5} c");
  }
  SUBCASE("already-encoded guard") {
    CHECK_THROWS_AS(encode_text("{2:42}", chars), ValidationError);
    CHECK_THROWS_AS(encode_text("half a marker <mn> here", scheme_of(SchemeKind::numerologic)),
                    ValidationError);
    CHECK(encode_text("{2:42}", chars, true) == "{{1:2}:{2:42}}");  // force re-encodes
    CHECK_THROWS_AS(encode_text("<3digitnumber>100", scheme_of(SchemeKind::multi_special_token)),
                    ValidationError);
  }
}

TEST_CASE("whitespace fillers") {
  SUBCASE("table row: contiguous") {
    CHECK(encode_whitespace_variant("1*1=1", false, '_', 0) == "___1_*___1_=___1_");
  }
  SUBCASE("contiguous layout mirrors the char-style prefix") {
    // "{2:42}" has 3 prefix chars and 1 suffix char
    CHECK(encode_whitespace_variant("42", false, '_', 0) == "___42_");
    // float "{1.1:2.5}": 5 prefix chars, 1 suffix
    CHECK(encode_whitespace_variant("2.5", false, '_', 0) == "_____2.5_");
  }
  SUBCASE("no numbers, no change") {
    CHECK(encode_whitespace_variant("abc", true, '_', 7) == "abc");
  }
  SUBCASE("random permutes per number but keeps length and digit order") {
    const std::string contiguous = encode_whitespace_variant("1*1=1", false, '_', 0);
    for (uint64_t seed = 1; seed <= 50; ++seed) {
      const std::string random = encode_whitespace_variant("1*1=1", true, '_', seed);
      CHECK(random.size() == contiguous.size());
      std::string stripped;
      for (char c : random) {
        if (c != '_') stripped += c;
      }
      CHECK(stripped == "1*1=1");
    }
  }
  SUBCASE("random is deterministic per seed") {
    CHECK(encode_whitespace_variant("12+345=357", true, '_', 99) ==
          encode_whitespace_variant("12+345=357", true, '_', 99));
    // Different seeds eventually differ.
    bool any_diff = false;
    const std::string base = encode_whitespace_variant("12+345=357", true, '_', 1);
    for (uint64_t seed = 2; seed < 12 && !any_diff; ++seed) {
      any_diff = encode_whitespace_variant("12+345=357", true, '_', seed) != base;
    }
    CHECK(any_diff);
  }
  SUBCASE("ws-random via encode_text requires a seed") {
    EncodingScheme ws;
    ws.kind = SchemeKind::whitespace_random;
    CHECK_THROWS_AS(encode_text("1*1=1", ws), ValidationError);
    CHECK(encode_text("1*1=1", ws, false, 3).size() == 17);
  }
}

TEST_CASE("whitespace overhead accounting matches NumeroLogic length growth") {
  EncodingScheme chars = EncodingScheme::numerologic_chars();
  Rng rng(77);
  for (int iter = 0; iter < 500; ++iter) {
    const std::string text = random_digit_text(rng, false);
    const auto matches = find_numbers(text);
    size_t expected_total = 0;
    for (const auto& m : matches) {
      const size_t e = whitespace_overhead(m);
      CHECK(encode_number(m, chars).size() - m.length() == e);
      if (!m.is_float() && m.length() <= 9) CHECK(e == 4);
      expected_total += e;
    }
    const std::string contiguous = encode_whitespace_variant(text, false, '_', 0);
    const std::string random = encode_whitespace_variant(text, true, '_', iter);
    CHECK(contiguous.size() == text.size() + expected_total);
    CHECK(random.size() == contiguous.size());
    bool has_markers = text.find('{') != std::string::npos ||
                       text.find(':') != std::string::npos ||
                       text.find('}') != std::string::npos;
    if (!has_markers) {
      CHECK(encode_text(text, chars).size() == text.size() + expected_total);
    }
  }
}

TEST_CASE("decode_text golden vectors") {
  EncodingScheme tokens = EncodingScheme::numerologic_tokens();
  CHECK(decode_text("<sn>2<mn>42<en>", tokens) == "42");
  CHECK(decode_text("<sn>3<mn>42<en>", tokens) == "42");  // mismatch stripped, not repaired
  CHECK(decode_text("<sn>1.2<mn>3.14<en>", tokens) == "3.14");
  CHECK(decode_text("{2:42}", EncodingScheme::numerologic_chars()) == "42");
  CHECK(decode_text("<3digitnumber>100", scheme_of(SchemeKind::multi_special_token)) == "100");
  SUBCASE("malformed markers are stripped best-effort") {
    CHECK(decode_text("<sn>abc<mn>5<en>", tokens) == "<sn>abc<mn>5");
    CHECK(decode_text("<en><en>xyz", tokens) == "xyz");
    CHECK(decode_text("<sn>12", tokens) == "<sn>12");
  }
  SUBCASE("idempotent") {
    const std::string once = decode_text("<sn>2<mn>42<en> and {2:42}", tokens);
    CHECK(decode_text(once, tokens) == once);
  }
  SUBCASE("whitespace decode strips fillers") {
    EncodingScheme ws;
    ws.kind = SchemeKind::whitespace_contiguous;
    CHECK(decode_text("___1_*___1_=___1_", ws) == "1*1=1");
  }
}

TEST_CASE("round trip property over random texts") {
  struct Case {
    EncodingScheme scheme;
    bool integers_only;
  };
  std::vector<Case> cases = {
      {EncodingScheme::numerologic_tokens(), false},
      {EncodingScheme::numerologic_chars(), false},
      {scheme_of(SchemeKind::prefix_only), false},
      {scheme_of(SchemeKind::prefix_only, MarkerStyle::chars()), false},
      {scheme_of(SchemeKind::multi_special_token), true},
  };
  Rng rng(123456);
  int tested = 0;
  for (int iter = 0; iter < 4000; ++iter) {
    const std::string text = random_digit_text(rng, true);
    for (const auto& c : cases) {
      std::string probe = text;
      if (c.integers_only) {
        // multi-token handles integers of <= 20 digits only; drop the dots
        // and skip texts with longer runs
        std::string cleaned;
        for (char ch : probe) {
          if (ch != '.') cleaned += ch;
        }
        probe = cleaned;
        bool too_long = false;
        for (const auto& m : find_numbers(probe)) too_long |= m.int_digits.size() > 20;
        if (too_long) continue;
      }
      bool has_marker = false;
      for (const std::string* m : {&c.scheme.markers.start, &c.scheme.markers.mid,
                                   &c.scheme.markers.end}) {
        if (probe.find(*m) != std::string::npos) has_marker = true;
      }
      if (c.scheme.kind == SchemeKind::multi_special_token &&
          probe.find("digitnumber>") != std::string::npos) {
        has_marker = true;
      }
      if (has_marker) continue;
      ++tested;
      const std::string encoded = encode_text(probe, c.scheme);
      CHECK(decode_text(encoded, c.scheme) == probe);
      // prefix correctness: codec output never reports mismatches
      auto scan = scan_mismatches(encoded, c.scheme);
      CHECK(scan.mismatched() == 0);
      CHECK(scan.malformed == 0);
      CHECK(scan.encoded_numbers() == find_numbers(probe).size());
    }
  }
  CHECK(tested > 10000);
}

TEST_CASE("detect_mismatches") {
  MarkerStyle tokens = MarkerStyle::token();
  SUBCASE("well formed, no mismatch") {
    auto scan = detect_mismatches("<sn>2<mn>42<en>", tokens);
    REQUIRE(scan.reports.size() == 1);
    CHECK(!scan.reports[0].is_mismatch);
    CHECK(scan.reports[0].declared_int_len == 2);
    CHECK(scan.reports[0].actual_int_len == 2);
  }
  SUBCASE("integer length mismatch") {
    auto scan = detect_mismatches("<sn>3<mn>42<en>", tokens);
    REQUIRE(scan.reports.size() == 1);
    CHECK(scan.reports[0].is_mismatch);
    CHECK(scan.reports[0].declared_int_len == 3);
    CHECK(scan.reports[0].actual_int_len == 2);
  }
  SUBCASE("fraction length mismatch") {
    auto scan = detect_mismatches("<sn>1.2<mn>3.1<en>", tokens);
    REQUIRE(scan.reports.size() == 1);
    CHECK(scan.reports[0].is_mismatch);
    REQUIRE(scan.reports[0].declared_frac_len.has_value());
    CHECK(*scan.reports[0].declared_frac_len == 2);
    REQUIRE(scan.reports[0].actual_frac_len.has_value());
    CHECK(*scan.reports[0].actual_frac_len == 1);
  }
  SUBCASE("declared float, generated integer") {
    auto scan = detect_mismatches("<sn>1.2<mn>3<en>", tokens);
    REQUIRE(scan.reports.size() == 1);
    CHECK(scan.reports[0].is_mismatch);
  }
  SUBCASE("malformed counted separately") {
    auto scan = detect_mismatches("<sn>2<mn>42 and <sn>xy<mn>3<en> and <sn>9<mn>", tokens);
    CHECK(scan.reports.empty());
    CHECK(scan.malformed == 3);
  }
  SUBCASE("prefix-only without end markers") {
    auto scan = detect_mismatches("<sn>3<mn>100+<sn>3<mn>10", tokens, false);
    REQUIRE(scan.reports.size() == 2);
    CHECK(!scan.reports[0].is_mismatch);
    CHECK(scan.reports[1].is_mismatch);
  }
  SUBCASE("char style") {
    auto scan = detect_mismatches("{2:42}+{3:45}", MarkerStyle::chars());
    REQUIRE(scan.reports.size() == 2);
    CHECK(!scan.reports[0].is_mismatch);
    CHECK(scan.reports[1].is_mismatch);
  }
  SUBCASE("multi token scheme") {
    auto scan = scan_mismatches("<3digitnumber>42", scheme_of(SchemeKind::multi_special_token));
    REQUIRE(scan.reports.size() == 1);
    CHECK(scan.reports[0].is_mismatch);
  }
}

TEST_CASE("encode_line scope handling") {
  EncodingScheme chars = EncodingScheme::numerologic_chars();
  chars.scope = Scope::operands_only;
  CHECK(encode_line("12+345=357", chars) == "{2:12}+{3:345}=357");
  chars.scope = Scope::results_only;
  CHECK(encode_line("12+345=357", chars) == "12+345={3:357}");
  CHECK(encode_line("12-345=-333", chars) == "12-345=-{3:333}");
  chars.scope = Scope::all;
  CHECK(encode_line("sin(0.5000)=0.4794", chars) == "sin({1.4:0.5000})={1.4:0.4794}");
  SUBCASE("scope needs an equation") {
    EncodingScheme s = EncodingScheme::numerologic_chars();
    s.scope = Scope::operands_only;
    CHECK_THROWS_AS(encode_line("free text 42", s), ValidationError);
  }
}

TEST_SUITE_END();
