#include "numerologic/taskgen.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "numerologic/errors.hpp"
#include "numerologic/hash.hpp"

namespace numerologic {

const char* op_symbol(ArithmeticOp op) {
  switch (op) {
    case ArithmeticOp::add: return "+";
    case ArithmeticOp::sub: return "-";
    case ArithmeticOp::mul: return "*";
    case ArithmeticOp::sine: return "sin";
    case ArithmeticOp::sqrt: return "sqrt";
  }
  return "?";
}

const char* op_name(ArithmeticOp op) {
  switch (op) {
    case ArithmeticOp::add: return "add";
    case ArithmeticOp::sub: return "sub";
    case ArithmeticOp::mul: return "mul";
    case ArithmeticOp::sine: return "sin";
    case ArithmeticOp::sqrt: return "sqrt";
  }
  return "?";
}

std::string task_name(const ArithmeticTask& task) {
  std::string name = op_name(task.op);
  if (task.op == ArithmeticOp::sine || task.op == ArithmeticOp::sqrt) {
    name += std::to_string(task.result_decimals);
  } else {
    name += std::to_string(task.max_digits);
    name += task.form == OperandForm::integer ? "i" : "f";
  }
  return name;
}

std::string sample_int_operand(int max_digits, Rng& rng) {
  if (max_digits < 1) throw ValidationError("max_digits must be >= 1");
  int64_t v = static_cast<int64_t>(rng.uniform_u64(static_cast<uint64_t>(pow10_i64(max_digits))));
  return std::to_string(v);
}

std::string sample_float_operand(int max_digits, Rng& rng) {
  if (max_digits < 1) throw ValidationError("max_digits must be >= 1");
  int64_t m = static_cast<int64_t>(rng.uniform_u64(static_cast<uint64_t>(pow10_i64(max_digits))));
  int k = static_cast<int>(rng.uniform_u64(static_cast<uint64_t>(max_digits) + 1));
  return to_string(Decimal{m, k});
}

namespace {

// Uniform draw over the range, rounded to `decimals`; redrawn on the rare
// rounding overshoot so the rendered operand stays inside [lo, hi].
Decimal sample_rounded_real(double lo, double hi, int decimals, Rng& rng) {
  for (;;) {
    double u = rng.uniform_real(lo, hi);
    int64_t units = round_half_away(static_cast<long double>(u), decimals);
    long double value = static_cast<long double>(units) / static_cast<long double>(pow10_i64(decimals));
    if (value < static_cast<long double>(lo) || value > static_cast<long double>(hi)) continue;
    return {units, decimals};
  }
}

}  // namespace

std::string exact_binary_result(ArithmeticOp op, std::string_view a, std::string_view b) {
  Decimal da = parse_decimal(a);
  Decimal db = parse_decimal(b);
  Decimal r = op == ArithmeticOp::add   ? dec_add(da, db)
              : op == ArithmeticOp::sub ? dec_sub(da, db)
              : op == ArithmeticOp::mul ? dec_mul(da, db)
                                        : throw ValidationError("not a binary op");
  return to_string(r);
}

std::string exact_unary_result(ArithmeticOp op, std::string_view operand, int decimals) {
  if (op != ArithmeticOp::sine && op != ArithmeticOp::sqrt) {
    throw ValidationError("not a unary op");
  }
  Decimal d = parse_decimal(operand);
  long double x = static_cast<long double>(d.units) /
                  static_cast<long double>(pow10_i64(d.decimals));
  long double y = op == ArithmeticOp::sine ? sinl(x) : sqrtl(x);
  return to_string(Decimal{round_half_away(y, decimals), decimals});
}

ArithmeticSample make_sample(const ArithmeticTask& task, Rng& rng) {
  ArithmeticSample s;
  s.task = task;
  switch (task.op) {
    case ArithmeticOp::add:
    case ArithmeticOp::sub:
    case ArithmeticOp::mul: {
      auto draw = [&] {
        return task.form == OperandForm::integer ? sample_int_operand(task.max_digits, rng)
                                                 : sample_float_operand(task.max_digits, rng);
      };
      std::string a = draw();
      std::string b = draw();
      s.operand_texts = {a, b};
      s.result_text = exact_binary_result(task.op, a, b);
      s.line = a + op_symbol(task.op) + b + "=" + s.result_text;
      break;
    }
    case ArithmeticOp::sine:
    case ArithmeticOp::sqrt: {
      const int d = task.result_decimals;
      Decimal operand = task.op == ArithmeticOp::sine
                            ? sample_rounded_real(-M_PI / 2, M_PI / 2, d, rng)
                            : sample_rounded_real(0.0, 10.0, d, rng);
      std::string a = to_string(operand);
      s.operand_texts = {a};
      s.result_text = exact_unary_result(task.op, a, d);
      s.line = std::string(op_symbol(task.op)) + "(" + a + ")=" + s.result_text;
      break;
    }
  }
  return s;
}

DatasetSplits generate_splits(const DatasetSpec& spec) {
  DatasetSplits out;
  std::unordered_set<std::string> train_set;

  for (size_t ti = 0; ti < spec.tasks.size(); ++ti) {
    const auto& tc = spec.tasks[ti];
    Rng rng(derive_seed(spec.seed, ti * 2));
    for (int i = 0; i < tc.train_count; ++i) {
      std::string line = make_sample(tc.task, rng).line;
      if (spec.dedupe) train_set.insert(line);
      out.train.push_back(std::move(line));
    }
  }

  for (size_t ti = 0; ti < spec.tasks.size(); ++ti) {
    const auto& tc = spec.tasks[ti];
    Rng rng(derive_seed(spec.seed, ti * 2 + 1));
    std::unordered_set<std::string> test_set;
    long attempts = 0;
    const long max_attempts = 200L * std::max(tc.test_count, 1);
    int produced = 0;
    while (produced < tc.test_count) {
      if (++attempts > max_attempts) {
        throw ExecutionError("cannot draw " + std::to_string(tc.test_count) +
                             " unique test equations for task " + task_name(tc.task) +
                             " (space exhausted)");
      }
      std::string line = make_sample(tc.task, rng).line;
      if (spec.dedupe) {
        if (train_set.count(line) || test_set.count(line)) continue;
        test_set.insert(line);
      }
      out.test.push_back(std::move(line));
      ++produced;
    }
  }

  Rng train_shuffle(derive_seed(spec.seed, 0x5417FFu));
  Rng test_shuffle(derive_seed(spec.seed, 0x5418FFu));
  train_shuffle.shuffle(out.train);
  test_shuffle.shuffle(out.test);
  return out;
}

namespace {

uint64_t write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::string blob;
  size_t bytes = 0;
  for (const auto& l : lines) bytes += l.size() + 1;
  blob.reserve(bytes);
  for (const auto& l : lines) {
    blob += l;
    blob += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExecutionError("cannot open " + path.string() + " for writing");
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!f) throw ExecutionError("write failed: " + path.string());
  return fnv1a64(blob);
}

void write_meta(const std::filesystem::path& path, const DatasetSpec& spec, const char* split,
                size_t lines, uint64_t hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExecutionError("cannot open " + path.string() + " for writing");
  f << "# numerologic dataset metadata\n";
  f << "split = " << split << "\n";
  f << "seed = " << spec.seed << "\n";
  f << "dedupe = " << (spec.dedupe ? "true" : "false") << "\n";
  f << "tasks =";
  for (size_t i = 0; i < spec.tasks.size(); ++i) {
    const auto& tc = spec.tasks[i];
    int count = std::string(split) == "train" ? tc.train_count : tc.test_count;
    f << (i ? "," : " ") << task_name(tc.task) << ":" << count;
  }
  f << "\n";
  f << "lines = " << lines << "\n";
  f << "fnv1a64 = " << hex64(hash) << "\n";
}

}  // namespace

GeneratedDataset generate_dataset(const DatasetSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  DatasetSplits splits = generate_splits(spec);
  GeneratedDataset out;
  out.train_path = dir / "train.txt";
  out.test_path = dir / "test.txt";
  out.train_lines = splits.train.size();
  out.test_lines = splits.test.size();
  out.train_hash = write_lines(out.train_path, splits.train);
  out.test_hash = write_lines(out.test_path, splits.test);
  write_meta(dir / "train.txt.meta", spec, "train", out.train_lines, out.train_hash);
  write_meta(dir / "test.txt.meta", spec, "test", out.test_lines, out.test_hash);
  return out;
}

DatasetSpec nanogpt_preset(uint64_t seed, int test_count) {
  DatasetSpec spec;
  spec.seed = seed;
  spec.tasks = {
      {{ArithmeticOp::add, 3, OperandForm::integer, 0}, 10000, test_count},
      {{ArithmeticOp::sub, 3, OperandForm::integer, 0}, 10000, test_count},
      {{ArithmeticOp::mul, 2, OperandForm::integer, 0}, 3000, test_count},
      {{ArithmeticOp::sine, 0, OperandForm::floating, 4}, 10000, test_count},
      {{ArithmeticOp::sqrt, 0, OperandForm::floating, 4}, 10000, test_count},
  };
  return spec;
}

DatasetSpec large_preset(uint64_t seed, int test_count) {
  DatasetSpec spec;
  spec.seed = seed;
  spec.tasks = {
      {{ArithmeticOp::add, 5, OperandForm::integer, 0}, 300000, test_count},
      {{ArithmeticOp::add, 5, OperandForm::floating, 0}, 300000, test_count},
      {{ArithmeticOp::sub, 5, OperandForm::integer, 0}, 300000, test_count},
      {{ArithmeticOp::sub, 5, OperandForm::floating, 0}, 300000, test_count},
      {{ArithmeticOp::mul, 3, OperandForm::integer, 0}, 300000, test_count},
      {{ArithmeticOp::mul, 3, OperandForm::floating, 0}, 300000, test_count},
      {{ArithmeticOp::sine, 0, OperandForm::floating, 5}, 30000, test_count},
      {{ArithmeticOp::sqrt, 0, OperandForm::floating, 5}, 30000, test_count},
  };
  return spec;
}

}  // namespace numerologic
