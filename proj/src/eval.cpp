#include "numerologic/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "numerologic/errors.hpp"
#include "numerologic/hash.hpp"
#include "numerologic/rng.hpp"

namespace numerologic {

std::string classify_line_task(std::string_view plain_line) {
  if (plain_line.rfind("sin(", 0) == 0) return "sin";
  if (plain_line.rfind("sqrt(", 0) == 0) return "sqrt";
  if (plain_line.find('+') != std::string_view::npos) return "add";
  if (plain_line.find('*') != std::string_view::npos) return "mul";
  if (plain_line.find('-', 1) != std::string_view::npos) return "sub";
  return "?";
}

ParsedEquation parse_equation_line(std::string_view line) {
  ParsedEquation eq;
  const std::string task = classify_line_task(line);
  if (task == "sin" || task == "sqrt") {
    eq.op = task == "sin" ? ArithmeticOp::sine : ArithmeticOp::sqrt;
    const size_t open = line.find('(');
    const size_t close = line.find(")=");
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
      throw ValidationError("malformed unary equation: " + std::string(line));
    }
    eq.operands = {std::string(line.substr(open + 1, close - open - 1))};
    eq.result = std::string(line.substr(close + 2));
    return eq;
  }
  char sym;
  if (task == "add") {
    eq.op = ArithmeticOp::add;
    sym = '+';
  } else if (task == "mul") {
    eq.op = ArithmeticOp::mul;
    sym = '*';
  } else if (task == "sub") {
    eq.op = ArithmeticOp::sub;
    sym = '-';
  } else {
    throw ValidationError("line fits no task shape: " + std::string(line));
  }
  // Operands are unsigned, so the first operator at index >= 1 splits them.
  const size_t op_pos = line.find(sym, 1);
  const size_t eq_pos = line.find('=', op_pos + 1);
  if (op_pos == std::string_view::npos || eq_pos == std::string_view::npos) {
    throw ValidationError("malformed equation: " + std::string(line));
  }
  eq.operands = {std::string(line.substr(0, op_pos)),
                 std::string(line.substr(op_pos + 1, eq_pos - op_pos - 1))};
  eq.result = std::string(line.substr(eq_pos + 1));
  return eq;
}

LineScore score_line(std::string_view gt_line, std::string_view completion,
                     const EncodingScheme& scheme) {
  LineScore out;
  const size_t eq_pos = gt_line.find('=');
  if (eq_pos == std::string_view::npos) {
    throw ValidationError("ground-truth line has no '=': " + std::string(gt_line));
  }
  const std::string_view gt_result = gt_line.substr(eq_pos + 1);

  out.scan = scan_mismatches(completion, scheme);
  std::string decoded = decode_text(completion, scheme);
  const size_t nl = decoded.find('\n');
  if (nl != std::string::npos) decoded.resize(nl);
  out.decoded = std::move(decoded);
  out.correct = out.decoded == gt_result;
  return out;
}

std::string prompt_of(std::string_view encoded_line) {
  const size_t eq_pos = encoded_line.find('=');
  if (eq_pos == std::string_view::npos) {
    throw ValidationError("encoded line has no '=': " + std::string(encoded_line));
  }
  return std::string(encoded_line.substr(0, eq_pos + 1));
}

namespace {

std::string generate_with(GenSession& session, const Gpt<float>& model, const Vocabulary& vocab,
                          std::string_view prompt, int max_new) {
  const int nl_id = vocab.require_id('\n');
  session.reset();
  const float* logits = session.step(nl_id);
  for (char c : prompt) logits = session.step(vocab.require_id(c));

  std::string out;
  const int V = model.config().vocab_size;
  const int ctx = model.config().context_length;
  for (int i = 0; i < max_new && session.position() < ctx; ++i) {
    int best = 0;
    for (int v = 1; v < V; ++v) {
      if (logits[v] > logits[best]) best = v;
    }
    if (best == nl_id) break;
    out += vocab.symbol(best);
    if (session.position() < ctx) {
      logits = session.step(best);
    }
  }
  return out;
}

uint64_t hash_lines(const std::vector<std::string>& lines) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : lines) {
    h = fnv1a64(l, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

uint64_t hash_params(const Gpt<float>& model) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : model.params()) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p.w.data()),
                                 p.w.size() * sizeof(float)),
                h);
  }
  return h;
}

}  // namespace

EvalReport evaluate(const Gpt<float>& model, const Vocabulary& vocab,
                    const std::vector<std::string>& test_lines, const EncodingScheme& scheme,
                    uint64_t encode_seed, int max_new) {
  EvalReport report;
  report.scheme = scheme;
  report.dataset_hash = hex64(hash_lines(test_lines));
  report.checkpoint_id = hex64(hash_params(model));

  const long n = static_cast<long>(test_lines.size());

  // Render prompts up front; also fail fast on scheme/model vocabulary
  // conflicts before burning generation time.
  std::vector<std::string> prompts(test_lines.size());
  for (long i = 0; i < n; ++i) {
    const std::string encoded =
        encode_line(test_lines[static_cast<size_t>(i)], scheme,
                    derive_seed(encode_seed, static_cast<uint64_t>(i)));
    prompts[static_cast<size_t>(i)] = prompt_of(encoded);
    for (char c : prompts[static_cast<size_t>(i)]) {
      if (!vocab.contains(c)) {
        throw ValidationError(std::string("scheme/model vocabulary conflict: prompt character '") +
                              c + "' is not in the model vocabulary");
      }
    }
  }

  std::vector<char> corrects(test_lines.size(), 0);
  std::vector<long> encoded_counts(test_lines.size(), 0);
  std::vector<long> mismatch_counts(test_lines.size(), 0);
  std::vector<long> malformed_counts(test_lines.size(), 0);

#pragma omp parallel
  {
    GenSession session(model);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      const std::string completion =
          generate_with(session, model, vocab, prompts[static_cast<size_t>(i)], max_new);
      LineScore score = score_line(test_lines[static_cast<size_t>(i)], completion, scheme);
      corrects[static_cast<size_t>(i)] = score.correct ? 1 : 0;
      encoded_counts[static_cast<size_t>(i)] = static_cast<long>(score.scan.encoded_numbers());
      mismatch_counts[static_cast<size_t>(i)] = static_cast<long>(score.scan.mismatched());
      malformed_counts[static_cast<size_t>(i)] = static_cast<long>(score.scan.malformed);
    }
  }

  for (long i = 0; i < n; ++i) {
    const auto& line = test_lines[static_cast<size_t>(i)];
    TaskScore& task = report.per_task[classify_line_task(line)];
    ++task.n_total;
    ++report.overall.n_total;
    if (corrects[static_cast<size_t>(i)]) {
      ++task.n_correct;
      ++report.overall.n_correct;
    }
    ParsedEquation eq = parse_equation_line(line);
    for (const auto& operand : eq.operands) {
      const size_t dot = operand.find('.');
      const int int_digits = static_cast<int>(dot == std::string::npos ? operand.size() : dot);
      task.max_digits = std::max(task.max_digits, int_digits);
      if (dot != std::string::npos) task.floats = true;
    }
    report.mismatch.encoded_numbers += encoded_counts[static_cast<size_t>(i)];
    report.mismatch.mismatched += mismatch_counts[static_cast<size_t>(i)];
    report.mismatch.malformed += malformed_counts[static_cast<size_t>(i)];
  }
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "task,n_total,n_correct,accuracy\n";
  for (const auto& [name, score] : report.per_task) {
    out << name << "," << score.n_total << "," << score.n_correct << "," << score.accuracy()
        << "\n";
  }
  out << "overall," << report.overall.n_total << "," << report.overall.n_correct << ","
      << report.overall.accuracy() << "\n";
  out << "mismatch_encoded_numbers," << report.mismatch.encoded_numbers << ",,\n";
  out << "mismatch_count," << report.mismatch.mismatched << ",," << report.mismatch.rate() << "\n";
  out << "mismatch_malformed," << report.mismatch.malformed << ",,\n";
  return out.str();
}

namespace {

std::string fmt_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.2f", fraction * 100.0);
  return buf;
}

const char* op_display(const std::string& name) {
  if (name == "add") return "+";
  if (name == "sub") return "-";
  if (name == "mul") return "*";
  return name.c_str();
}

}  // namespace

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  out << "Op     digits  form   accuracy   n\n";
  for (const auto& [name, score] : report.per_task) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-6s %-7d %-6s %s%%   %ld\n", op_display(name),
                  score.max_digits, score.floats ? "float" : "int",
                  fmt_pct(score.accuracy()).c_str(), score.n_total);
    out << buf;
  }
  out << "overall: " << fmt_pct(report.overall.accuracy()) << "%  (" << report.overall.n_correct
      << "/" << report.overall.n_total << ")\n";
  if (report.mismatch.encoded_numbers > 0) {
    out << "digit-count mismatches: " << report.mismatch.mismatched << "/"
        << report.mismatch.encoded_numbers << " (" << fmt_pct(report.mismatch.rate())
        << "%), malformed: " << report.mismatch.malformed << "\n";
  }
  return out.str();
}

std::string comparison_table(const EvalReport& baseline, const EvalReport& encoded,
                             std::string_view baseline_name, std::string_view encoded_name) {
  std::ostringstream out;
  char head[128];
  std::snprintf(head, sizeof(head), "%-6s %-7s %-6s %10.10s %12.12s %8s\n", "Op", "digits",
                "form", std::string(baseline_name).c_str(), std::string(encoded_name).c_str(),
                "Gain");
  out << head;
  for (const auto& [name, base_score] : baseline.per_task) {
    auto it = encoded.per_task.find(name);
    if (it == encoded.per_task.end()) continue;
    const auto& enc_score = it->second;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-6s %-7d %-6s %9.2f%% %11.2f%% %+8.2f\n", op_display(name),
                  base_score.max_digits, base_score.floats ? "float" : "int",
                  base_score.accuracy() * 100.0, enc_score.accuracy() * 100.0,
                  (enc_score.accuracy() - base_score.accuracy()) * 100.0);
    out << buf;
  }
  char tail[128];
  std::snprintf(tail, sizeof(tail), "%-6s %-7s %-6s %9.2f%% %11.2f%% %+8.2f\n", "all", "", "",
                baseline.overall.accuracy() * 100.0, encoded.overall.accuracy() * 100.0,
                (encoded.overall.accuracy() - baseline.overall.accuracy()) * 100.0);
  out << tail;
  return out.str();
}

CellResult train_and_eval_cell(const std::vector<std::string>& train_lines,
                               const std::vector<std::string>& test_lines, const CellConfig& cell,
                               std::ostream* log, const std::filesystem::path& artifacts_dir) {
  std::vector<std::string> encoded_train(train_lines.size());
  for (size_t i = 0; i < train_lines.size(); ++i) {
    encoded_train[i] = encode_line(train_lines[i], cell.scheme,
                                   derive_seed(cell.encode_seed, 0x7d0000 + static_cast<uint64_t>(i)));
  }
  std::vector<std::string> encoded_test(test_lines.size());
  for (size_t i = 0; i < test_lines.size(); ++i) {
    encoded_test[i] =
        encode_line(test_lines[i], cell.scheme, derive_seed(cell.encode_seed, static_cast<uint64_t>(i)));
  }

  // The vocabulary covers both splits so a test prompt can never trip the OOV
  // guard; test content itself never reaches training.
  std::vector<std::string> all_lines = encoded_train;
  all_lines.insert(all_lines.end(), encoded_test.begin(), encoded_test.end());
  Vocabulary vocab = Vocabulary::from_corpus(all_lines);

  ModelConfig mcfg = cell.model;
  mcfg.vocab_size = vocab.size();

  CellResult result;
  Gpt<float> model(mcfg, cell.train.seed);
  result.train_result = train_model(model, encoded_train, vocab, cell.train, log);
  result.report = evaluate(model, vocab, test_lines, cell.scheme, cell.encode_seed, cell.max_new);

  if (!artifacts_dir.empty()) {
    std::filesystem::create_directories(artifacts_dir);
    auto write_file = [&](const std::filesystem::path& p, const std::string& content) {
      std::ofstream f(p, std::ios::binary);
      if (!f) throw ExecutionError("cannot open " + p.string() + " for writing");
      f << content;
    };
    std::string train_blob;
    for (const auto& l : encoded_train) {
      train_blob += l;
      train_blob += '\n';
    }
    write_file(artifacts_dir / "train_encoded.txt", train_blob);
    save_checkpoint(model, vocab, cell.train.seed, artifacts_dir / "model.ckpt");
    write_loss_trace_csv(result.train_result, artifacts_dir / "loss_trace.csv");
    write_file(artifacts_dir / "report.csv", report_csv(result.report));
    write_file(artifacts_dir / "report.txt", report_table(result.report));
  }
  return result;
}

}  // namespace numerologic
