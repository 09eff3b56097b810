#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace numerologic {

// Fixed-point decimal: value = units / 10^decimals. Arithmetic is exact
// (checked 64-bit), so generated labels carry no float error. Rendering keeps
// the full `decimals` width: {40,1} -> "4.0", {0,2} -> "0.00", {5,0} -> "5".
struct Decimal {
  int64_t units = 0;
  int decimals = 0;
};

std::string to_string(const Decimal& d);
Decimal parse_decimal(std::string_view text);

// Result decimals: max for add/sub, sum for mul. Overflow throws.
Decimal dec_add(Decimal a, Decimal b);
Decimal dec_sub(Decimal a, Decimal b);
Decimal dec_mul(Decimal a, Decimal b);

int64_t pow10_i64(int exp);

// Half-away-from-zero rounding of x to `decimals` places, returned as units.
int64_t round_half_away(long double x, int decimals);

}  // namespace numerologic
