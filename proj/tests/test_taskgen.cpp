#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "numerologic/decimal.hpp"
#include "numerologic/errors.hpp"
#include "numerologic/eval.hpp"
#include "numerologic/taskgen.hpp"
#include "oracles.hpp"

using namespace numerologic;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("numerologic_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE_BEGIN("taskgen");

TEST_CASE("decimal rendering and parsing") {
  CHECK(to_string(Decimal{123, 2}) == "1.23");
  CHECK(to_string(Decimal{5, 0}) == "5");
  CHECK(to_string(Decimal{40, 1}) == "4.0");
  CHECK(to_string(Decimal{0, 2}) == "0.00");
  CHECK(to_string(Decimal{-999, 0}) == "-999");
  CHECK(to_string(Decimal{-1, 4}) == "-0.0001");
  CHECK(parse_decimal("4.0").units == 40);
  CHECK(parse_decimal("4.0").decimals == 1);
  CHECK(parse_decimal("-0.0001").units == -1);
  CHECK_THROWS_AS(parse_decimal("1."), ValidationError);
  CHECK_THROWS_AS(parse_decimal(".5"), ValidationError);
  CHECK_THROWS_AS(parse_decimal("abc"), ValidationError);
  SUBCASE("exact ops") {
    CHECK(to_string(dec_add(parse_decimal("1.5"), parse_decimal("2.55"))) == "4.05");
    CHECK(to_string(dec_sub(parse_decimal("12"), parse_decimal("345"))) == "-333");
    CHECK(to_string(dec_mul(parse_decimal("0.5"), parse_decimal("0.5"))) == "0.25");
    CHECK(to_string(dec_mul(parse_decimal("99999.99999"), parse_decimal("9999.9"))) ==
          "999989999.900001");
  }
  SUBCASE("render/parse round trip") {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
      Decimal d{rng.uniform_i64(-99999999, 99999999), static_cast<int>(rng.uniform_u64(6))};
      CHECK(parse_decimal(to_string(d)).units == d.units);
      CHECK(parse_decimal(to_string(d)).decimals == d.decimals);
    }
  }
}

TEST_CASE("sample_int_operand") {
  Rng rng(42);
  SUBCASE("range and rendering") {
    for (int i = 0; i < 5000; ++i) {
      std::string s = sample_int_operand(3, rng);
      long v = std::stol(s);
      CHECK(v >= 0);
      CHECK(v <= 999);
      if (s != "0") CHECK(s[0] != '0');  // no leading zeros
      CHECK(std::to_string(v) == s);
    }
  }
  SUBCASE("boundary value appears") {
    bool saw_max = false;
    for (int i = 0; i < 200 && !saw_max; ++i) saw_max = sample_int_operand(1, rng) == "9";
    CHECK(saw_max);
  }
  SUBCASE("mean of U{0..99} over 1e5 draws") {
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += std::stod(sample_int_operand(2, rng));
    const double mean = sum / n;
    CHECK(mean > 48.5);
    CHECK(mean < 50.5);
  }
}

TEST_CASE("sample_float_operand") {
  Rng rng(43);
  for (int i = 0; i < 5000; ++i) {
    std::string s = sample_float_operand(5, rng);
    Decimal d = parse_decimal(s);
    CHECK(d.decimals <= 5);
    CHECK(d.units >= 0);
    CHECK(d.units < 100000);
    // rendering round-trips exactly, trailing zeros included
    CHECK(to_string(d) == s);
    if (d.decimals == 0) CHECK(s.find('.') == std::string::npos);
  }
}

TEST_CASE("exact result helpers") {
  CHECK(exact_binary_result(ArithmeticOp::add, "12", "345") == "357");
  CHECK(exact_binary_result(ArithmeticOp::sub, "12", "345") == "-333");
  CHECK(exact_binary_result(ArithmeticOp::mul, "12", "12") == "144");
  CHECK(exact_binary_result(ArithmeticOp::add, "1.5", "2.5") == "4.0");
  CHECK(exact_unary_result(ArithmeticOp::sqrt, "4.0000", 4) == "2.0000");
  CHECK(exact_unary_result(ArithmeticOp::sine, "0.0000", 4) == "0.0000");
  CHECK(exact_unary_result(ArithmeticOp::sine, "-1.5707", 4) == "-1.0000");
  CHECK(exact_unary_result(ArithmeticOp::sine, "1.5707", 4) == "1.0000");
  CHECK(exact_unary_result(ArithmeticOp::sqrt, "10.0000", 4) == "3.1623");
}

TEST_CASE("make_sample lines re-parse and satisfy task bounds") {
  const double half_pi = M_PI / 2;
  std::vector<ArithmeticTask> tasks = {
      {ArithmeticOp::add, 3, OperandForm::integer, 0},
      {ArithmeticOp::sub, 3, OperandForm::integer, 0},
      {ArithmeticOp::mul, 2, OperandForm::integer, 0},
      {ArithmeticOp::add, 5, OperandForm::floating, 0},
      {ArithmeticOp::mul, 3, OperandForm::floating, 0},
      {ArithmeticOp::sine, 0, OperandForm::floating, 4},
      {ArithmeticOp::sqrt, 0, OperandForm::floating, 4},
  };
  for (const auto& task : tasks) {
    Rng rng(derive_seed(7, static_cast<uint64_t>(task.op) * 16 + static_cast<uint64_t>(task.max_digits)));
    for (int i = 0; i < 2000; ++i) {
      ArithmeticSample s = make_sample(task, rng);
      // line re-parses into the same pieces
      ParsedEquation eq = parse_equation_line(s.line);
      CHECK(eq.op == task.op);
      CHECK(eq.operands == s.operand_texts);
      CHECK(eq.result == s.result_text);
      // operand bounds
      for (const auto& operand : s.operand_texts) {
        const double v = std::stod(operand);
        if (task.op == ArithmeticOp::sine) {
          CHECK(std::abs(v) <= half_pi);
        } else if (task.op == ArithmeticOp::sqrt) {
          CHECK(v >= 0.0);
          CHECK(v <= 10.0);
        } else {
          CHECK(v >= 0.0);
          CHECK(v < std::pow(10.0, task.max_digits));
        }
      }
    }
  }
}

TEST_CASE("dataset oracle property: 1e4 samples per task re-verified independently") {
  DatasetSpec spec = nanogpt_preset(20240607, 0);
  // 10^4 per task for the oracle run
  for (auto& tc : spec.tasks) tc.train_count = 10000;
  DatasetSplits splits = generate_splits(spec);
  REQUIRE(splits.train.size() == 50000);
  for (const auto& line : splits.train) {
    ParsedEquation eq = parse_equation_line(line);
    const int decimals = eq.op == ArithmeticOp::sine || eq.op == ArithmeticOp::sqrt ? 4 : 0;
    const std::string expect = oracles::line_oracle(eq.op, eq.operands, decimals);
    REQUIRE(expect == eq.result);
  }
}

TEST_CASE("generate_dataset") {
  SUBCASE("nanogpt preset counts") {
    DatasetSpec spec = nanogpt_preset(11, 100);
    auto dir = temp_dir("gen_counts");
    GeneratedDataset d = generate_dataset(spec, dir);
    CHECK(d.train_lines == 43000);
    CHECK(d.test_lines == 500);
    std::string train = read_file(d.train_path);
    CHECK(std::count(train.begin(), train.end(), '\n') == 43000);
    std::string meta = read_file(dir / "train.txt.meta");
    CHECK(meta.find("lines = 43000") != std::string::npos);
    CHECK(meta.find("seed = 11") != std::string::npos);
  }
  SUBCASE("same seed, byte-identical; different seed differs") {
    DatasetSpec spec = nanogpt_preset(21, 50);
    for (auto& tc : spec.tasks) tc.train_count = 500;
    auto d1 = generate_dataset(spec, temp_dir("gen_a"));
    auto d2 = generate_dataset(spec, temp_dir("gen_b"));
    CHECK(read_file(d1.train_path) == read_file(d2.train_path));
    CHECK(read_file(d1.test_path) == read_file(d2.test_path));
    CHECK(d1.train_hash == d2.train_hash);
    spec.seed = 22;
    auto d3 = generate_dataset(spec, temp_dir("gen_c"));
    CHECK(read_file(d1.train_path) != read_file(d3.train_path));
  }
  SUBCASE("dedupe: test never overlaps train") {
    DatasetSpec spec;
    spec.seed = 31;
    spec.dedupe = true;
    spec.tasks = {{{ArithmeticOp::add, 2, OperandForm::integer, 0}, 3000, 800}};
    DatasetSplits splits = generate_splits(spec);
    std::unordered_set<std::string> train(splits.train.begin(), splits.train.end());
    for (const auto& t : splits.test) CHECK(train.count(t) == 0);
    std::unordered_set<std::string> test_set(splits.test.begin(), splits.test.end());
    CHECK(test_set.size() == splits.test.size());
  }
  SUBCASE("exhaustion error when the space is too small") {
    DatasetSpec spec;
    spec.seed = 41;
    spec.dedupe = true;
    spec.tasks = {{{ArithmeticOp::add, 1, OperandForm::integer, 0}, 95, 50}};
    CHECK_THROWS_AS(generate_splits(spec), ExecutionError);
  }
}

TEST_SUITE_END();
