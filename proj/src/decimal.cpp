#include "numerologic/decimal.hpp"

#include <cmath>
#include <cstdlib>

#include "numerologic/errors.hpp"

namespace numerologic {

int64_t pow10_i64(int exp) {
  if (exp < 0 || exp > 18) throw ExecutionError("pow10 exponent out of range: " + std::to_string(exp));
  int64_t v = 1;
  for (int i = 0; i < exp; ++i) v *= 10;
  return v;
}

std::string to_string(const Decimal& d) {
  uint64_t mag = d.units < 0 ? 0ULL - static_cast<uint64_t>(d.units) : static_cast<uint64_t>(d.units);
  std::string digits = std::to_string(mag);
  std::string out;
  if (d.units < 0) out += '-';
  if (d.decimals == 0) {
    out += digits;
    return out;
  }
  if (digits.size() <= static_cast<size_t>(d.decimals)) {
    digits.insert(0, static_cast<size_t>(d.decimals) + 1 - digits.size(), '0');
  }
  out += digits.substr(0, digits.size() - static_cast<size_t>(d.decimals));
  out += '.';
  out += digits.substr(digits.size() - static_cast<size_t>(d.decimals));
  return out;
}

Decimal parse_decimal(std::string_view text) {
  if (text.empty()) throw ValidationError("empty decimal string");
  bool neg = false;
  size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    neg = text[0] == '-';
    i = 1;
  }
  int64_t units = 0;
  int decimals = 0;
  bool seen_digit = false;
  bool seen_dot = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (seen_dot || !seen_digit) throw ValidationError("bad decimal string: " + std::string(text));
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw ValidationError("bad decimal string: " + std::string(text));
    if (__builtin_mul_overflow(units, 10, &units) ||
        __builtin_add_overflow(units, c - '0', &units)) {
      throw ExecutionError("decimal overflow parsing: " + std::string(text));
    }
    seen_digit = true;
    if (seen_dot) ++decimals;
  }
  if (!seen_digit || (seen_dot && decimals == 0)) {
    throw ValidationError("bad decimal string: " + std::string(text));
  }
  return {neg ? -units : units, decimals};
}

namespace {

Decimal rescale(Decimal d, int decimals) {
  if (decimals < d.decimals) throw ExecutionError("rescale would truncate");
  int64_t factor = pow10_i64(decimals - d.decimals);
  int64_t units;
  if (__builtin_mul_overflow(d.units, factor, &units)) throw ExecutionError("decimal overflow in rescale");
  return {units, decimals};
}

}  // namespace

Decimal dec_add(Decimal a, Decimal b) {
  int decimals = std::max(a.decimals, b.decimals);
  a = rescale(a, decimals);
  b = rescale(b, decimals);
  int64_t units;
  if (__builtin_add_overflow(a.units, b.units, &units)) throw ExecutionError("decimal overflow in add");
  return {units, decimals};
}

Decimal dec_sub(Decimal a, Decimal b) {
  return dec_add(a, {-b.units, b.decimals});
}

Decimal dec_mul(Decimal a, Decimal b) {
  int64_t units;
  if (__builtin_mul_overflow(a.units, b.units, &units)) throw ExecutionError("decimal overflow in mul");
  return {units, a.decimals + b.decimals};
}

int64_t round_half_away(long double x, int decimals) {
  long double scaled = x * static_cast<long double>(pow10_i64(decimals));
  return llroundl(scaled);  // llround rounds halfway cases away from zero
}

}  // namespace numerologic
