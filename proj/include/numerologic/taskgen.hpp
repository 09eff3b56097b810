#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "numerologic/decimal.hpp"
#include "numerologic/rng.hpp"

namespace numerologic {

enum class ArithmeticOp { add, sub, mul, sine, sqrt };
enum class OperandForm { integer, floating };

// One task family: binary ops draw operands up to max_digits; sine draws from
// [-pi/2, pi/2] and sqrt from [0, 10], both rounded to result_decimals before
// the function is applied.
struct ArithmeticTask {
  ArithmeticOp op = ArithmeticOp::add;
  int max_digits = 3;
  OperandForm form = OperandForm::integer;
  int result_decimals = 0;
};

struct ArithmeticSample {
  ArithmeticTask task;
  std::vector<std::string> operand_texts;
  std::string result_text;
  std::string line;  // e.g. "12+345=357" or "sin(0.5000)=0.4794", no spaces
};

struct TaskCounts {
  ArithmeticTask task;
  int train_count = 0;
  int test_count = 0;
};

struct DatasetSpec {
  std::vector<TaskCounts> tasks;
  uint64_t seed = 1;
  bool dedupe = true;  // test equations never appear in train
};

// Uniform over [0, 10^max_digits - 1], rendered without leading zeros.
std::string sample_int_operand(int max_digits, Rng& rng);

// m uniform over [0, 10^N - 1] divided by 10^k, k uniform over {0..N};
// rendered exactly with k decimal places ("4.0" stays "4.0").
std::string sample_float_operand(int max_digits, Rng& rng);

ArithmeticSample make_sample(const ArithmeticTask& task, Rng& rng);

// Exact scaled-integer result for add/sub/mul over decimal operand strings.
std::string exact_binary_result(ArithmeticOp op, std::string_view a, std::string_view b);
// sin/sqrt of the (already rounded) operand, evaluated in extended precision
// and rounded half-away-from-zero to `decimals` places.
std::string exact_unary_result(ArithmeticOp op, std::string_view operand, int decimals);

const char* op_symbol(ArithmeticOp op);
const char* op_name(ArithmeticOp op);
std::string task_name(const ArithmeticTask& task);

// In-memory generation: per-task RNG streams derived from the spec seed, then
// one global shuffle per split. Pure function of the spec.
struct DatasetSplits {
  std::vector<std::string> train;
  std::vector<std::string> test;
};
DatasetSplits generate_splits(const DatasetSpec& spec);

// Writes dir/train.txt and dir/test.txt plus .meta sidecars (spec, seed,
// counts, content hash). Identical spec -> byte-identical files.
struct GeneratedDataset {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  size_t train_lines = 0;
  size_t test_lines = 0;
  uint64_t train_hash = 0;
  uint64_t test_hash = 0;
};
GeneratedDataset generate_dataset(const DatasetSpec& spec, const std::filesystem::path& dir);

// The paper's NanoGPT protocol: add/sub 3-digit int (10K), mul 2-digit int
// (3K), sine/sqrt 4-decimal (10K each).
DatasetSpec nanogpt_preset(uint64_t seed, int test_count = 2000);
// The large-model protocol: add/sub 5-digit and mul 3-digit, int and float
// versions (300K each), sine/sqrt 5-decimal (30K each).
DatasetSpec large_preset(uint64_t seed, int test_count = 2000);

}  // namespace numerologic
