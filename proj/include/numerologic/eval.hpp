#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "numerologic/codec.hpp"
#include "numerologic/model.hpp"
#include "numerologic/taskgen.hpp"

namespace numerologic {

struct TaskScore {
  long n_total = 0;
  long n_correct = 0;
  int max_digits = 0;    // longest operand integer part seen
  bool floats = false;   // any operand with a fraction part
  double accuracy() const { return n_total ? static_cast<double>(n_correct) / n_total : 0.0; }
};

struct MismatchStats {
  long encoded_numbers = 0;
  long mismatched = 0;
  long malformed = 0;
  double rate() const {
    return encoded_numbers ? static_cast<double>(mismatched) / encoded_numbers : 0.0;
  }
};

struct EvalReport {
  std::map<std::string, TaskScore> per_task;  // keyed by op name
  TaskScore overall;
  MismatchStats mismatch;
  EncodingScheme scheme;
  std::string dataset_hash;
  std::string checkpoint_id;
};

struct LineScore {
  bool correct = false;
  std::string decoded;
  MismatchScan scan;
};

// "add" / "sub" / "mul" / "sin" / "sqrt"; "?" when the line fits no task shape.
std::string classify_line_task(std::string_view plain_line);

struct ParsedEquation {
  ArithmeticOp op;
  std::vector<std::string> operands;
  std::string result;
};
// Inverse of the taskgen rendering; throws ValidationError on malformed lines.
ParsedEquation parse_equation_line(std::string_view plain_line);

// Exact-match verdict for one test equation: the completion is decoded under
// the scheme, trimmed at the first newline and compared byte-for-byte against
// the plain ground-truth result (sign included). Digit-count mismatches are
// collected from the raw completion before decoding and never affect the
// verdict.
LineScore score_line(std::string_view gt_line, std::string_view completion,
                     const EncodingScheme& scheme);

// The generation prompt for an encoded equation line: everything up to and
// including '='.
std::string prompt_of(std::string_view encoded_line);

// Greedy-decodes every test line's prompt under the scheme and aggregates
// score_line. Lines run in parallel; the reduction is order-independent, so
// the report is deterministic given checkpoint + file.
EvalReport evaluate(const Gpt<float>& model, const Vocabulary& vocab,
                    const std::vector<std::string>& test_lines, const EncodingScheme& scheme,
                    uint64_t encode_seed, int max_new = 32);

std::string report_csv(const EvalReport& report);
std::string report_table(const EvalReport& report);
// Side-by-side layout (op, digits, int/float, baseline, encoded, gain).
std::string comparison_table(const EvalReport& baseline, const EvalReport& encoded,
                             std::string_view baseline_name, std::string_view encoded_name);

// One ablation cell: encode the corpus under the scheme, train a fresh model,
// evaluate. When artifacts_dir is nonempty the encoded corpus, checkpoint,
// loss trace and report are written there.
struct CellConfig {
  EncodingScheme scheme;
  ModelConfig model;
  TrainConfig train;
  uint64_t encode_seed = 1;
  int max_new = 32;
};

struct CellResult {
  EvalReport report;
  TrainResult train_result;
};

CellResult train_and_eval_cell(const std::vector<std::string>& train_lines,
                               const std::vector<std::string>& test_lines, const CellConfig& cell,
                               std::ostream* log = nullptr,
                               const std::filesystem::path& artifacts_dir = {});

}  // namespace numerologic
