// numerologic: digit-count number encoding, arithmetic dataset generation,
// char-level transformer training, evaluation and ablation matrices.

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "numerologic/codec.hpp"
#include "numerologic/config.hpp"
#include "numerologic/errors.hpp"
#include "numerologic/eval.hpp"
#include "numerologic/hash.hpp"
#include "numerologic/model.hpp"
#include "numerologic/rng.hpp"
#include "numerologic/taskgen.hpp"

namespace nl = numerologic;
namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

fs::path output_root() {
  if (const char* env = std::getenv("NUMEROLOGIC_OUT")) return fs::path(env);
  return fs::path("runs");
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw nl::ValidationError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw nl::ExecutionError("cannot open " + path.string() + " for writing");
  f << content;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

nl::SchemeKind parse_kind(const std::string& name) {
  if (name == "plain") return nl::SchemeKind::plain;
  if (name == "numerologic") return nl::SchemeKind::numerologic;
  if (name == "prefix-only") return nl::SchemeKind::prefix_only;
  if (name == "multi-token") return nl::SchemeKind::multi_special_token;
  if (name == "ws-contiguous") return nl::SchemeKind::whitespace_contiguous;
  if (name == "ws-random") return nl::SchemeKind::whitespace_random;
  throw nl::ValidationError("unknown scheme: " + name);
}

nl::Scope parse_scope(const std::string& name) {
  if (name == "all") return nl::Scope::all;
  if (name == "operands") return nl::Scope::operands_only;
  if (name == "results") return nl::Scope::results_only;
  throw nl::ValidationError("unknown scope: " + name);
}

nl::MarkerStyle parse_markers(const std::string& name) {
  if (name == "token") return nl::MarkerStyle::token();
  if (name == "char") return nl::MarkerStyle::chars();
  throw nl::ValidationError("unknown marker style: " + name);
}

// Run configuration assembly: defaults, then the config file, then explicit
// command-line flags on top. The resolved config is persisted next to the
// command's outputs and keys nothing reads are rejected as typos.
const std::vector<std::pair<const char*, const char*>> kModelTrainDefaults = {
    {"model.n_layers", "4"},       {"model.n_heads", "4"},
    {"model.d_model", "128"},      {"model.context_length", "64"},
    {"model.dropout", "0.1"},      {"train.steps", "1500"},
    {"train.batch_size", "64"},    {"train.learning_rate", "0.001"},
    {"train.weight_decay", "0.01"}, {"train.seed", "1"},
    {"train.eval_interval", "100"}, {"train.warmup_steps", "100"},
    {"train.grad_clip", "1.0"},    {"train.beta1", "0.9"},
    {"train.beta2", "0.99"},       {"train.packed", "false"},
};

const std::vector<std::pair<const char*, const char*>> kSchemeDefaults = {
    {"scheme.kind", "numerologic"},
    {"scheme.scope", "all"},
    {"scheme.markers", "char"},
    {"scheme.filler", "_"},
};

nl::EncodingScheme scheme_from(const nl::FlatConfig& cfg) {
  nl::EncodingScheme scheme;
  scheme.kind = parse_kind(cfg.get_string("scheme.kind", "plain"));
  scheme.scope = parse_scope(cfg.get_string("scheme.scope", "all"));
  scheme.markers = parse_markers(cfg.get_string("scheme.markers", "char"));
  const std::string filler = cfg.get_string("scheme.filler", "_");
  if (filler.size() != 1) throw nl::ValidationError("scheme.filler must be one character");
  scheme.filler = filler[0];
  return scheme;
}

nl::ModelConfig model_from(const nl::FlatConfig& cfg) {
  nl::ModelConfig m;
  m.n_layers = cfg.get_int("model.n_layers", 4);
  m.n_heads = cfg.get_int("model.n_heads", 4);
  m.d_model = cfg.get_int("model.d_model", 128);
  m.context_length = cfg.get_int("model.context_length", 64);
  m.dropout = static_cast<float>(cfg.get_double("model.dropout", 0.1));
  return m;
}

nl::TrainConfig train_from(const nl::FlatConfig& cfg) {
  nl::TrainConfig t;
  t.steps = cfg.get_int("train.steps", 1500);
  t.batch_size = cfg.get_int("train.batch_size", 64);
  t.learning_rate = static_cast<float>(cfg.get_double("train.learning_rate", 1e-3));
  t.weight_decay = static_cast<float>(cfg.get_double("train.weight_decay", 0.01));
  t.seed = cfg.get_u64("train.seed", 1);
  t.eval_interval = cfg.get_int("train.eval_interval", 100);
  t.warmup_steps = cfg.get_int("train.warmup_steps", 100);
  t.grad_clip = static_cast<float>(cfg.get_double("train.grad_clip", 1.0));
  t.beta1 = static_cast<float>(cfg.get_double("train.beta1", 0.9));
  t.beta2 = static_cast<float>(cfg.get_double("train.beta2", 0.99));
  t.packed = cfg.get_bool("train.packed", false);
  return t;
}

// ---------------------------------------------------------------------------

int cmd_encode(const std::string& in_path, const std::string& out_path,
               const nl::EncodingScheme& scheme, uint64_t seed, bool force) {
  std::ifstream file_in;
  std::ofstream file_out;
  std::istream* in = &std::cin;
  std::ostream* out = &std::cout;
  if (in_path != "-") {
    file_in.open(in_path, std::ios::binary);
    if (!file_in) throw nl::ValidationError("cannot open " + in_path);
    in = &file_in;
  }
  if (out_path != "-") {
    file_out.open(out_path, std::ios::binary);
    if (!file_out) throw nl::ExecutionError("cannot open " + out_path + " for writing");
    out = &file_out;
  }

  std::string line;
  uint64_t lines = 0, numbers = 0, bytes_in = 0, bytes_out = 0;
  while (std::getline(*in, line)) {
    numbers += nl::find_numbers(line).size();
    bytes_in += line.size() + 1;
    const std::string encoded =
        nl::encode_line(line, scheme, nl::derive_seed(seed, lines), force);
    bytes_out += encoded.size() + 1;
    (*out) << encoded << '\n';
    ++lines;
  }
  std::cerr << "encoded " << numbers << " numbers across " << lines << " lines (" << bytes_in
            << " -> " << bytes_out << " bytes)\n";
  return 0;
}

int cmd_decode(const std::string& in_path, const std::string& out_path,
               const nl::EncodingScheme& scheme, bool mismatch_summary) {
  std::ifstream file_in;
  std::ofstream file_out;
  std::istream* in = &std::cin;
  std::ostream* out = &std::cout;
  if (in_path != "-") {
    file_in.open(in_path, std::ios::binary);
    if (!file_in) throw nl::ValidationError("cannot open " + in_path);
    in = &file_in;
  }
  if (out_path != "-") {
    file_out.open(out_path, std::ios::binary);
    if (!file_out) throw nl::ExecutionError("cannot open " + out_path + " for writing");
    out = &file_out;
  }

  std::string line;
  uint64_t lines = 0, encoded_numbers = 0, mismatched = 0, malformed = 0;
  while (std::getline(*in, line)) {
    if (mismatch_summary) {
      nl::MismatchScan scan = nl::scan_mismatches(line, scheme);
      encoded_numbers += scan.encoded_numbers();
      mismatched += scan.mismatched();
      malformed += scan.malformed;
    }
    (*out) << nl::decode_text(line, scheme) << '\n';
    ++lines;
  }
  std::cerr << "decoded " << lines << " lines\n";
  if (mismatch_summary) {
    const double rate =
        encoded_numbers ? static_cast<double>(mismatched) / static_cast<double>(encoded_numbers) : 0.0;
    std::cerr << "mismatch summary: " << mismatched << "/" << encoded_numbers
              << " declared digit counts wrong (rate " << rate << "), " << malformed
              << " malformed\n";
  }
  return 0;
}

int cmd_gen(const nl::FlatConfig& cfg, const fs::path& dir) {
  const std::string preset = cfg.get_string("gen.preset", "nanogpt");
  const uint64_t seed = cfg.get_u64("gen.seed", 1);
  const int test_count = cfg.get_int("gen.test_count", 2000);
  nl::DatasetSpec spec = preset == "large" ? nl::large_preset(seed, test_count)
                         : preset == "nanogpt"
                             ? nl::nanogpt_preset(seed, test_count)
                             : throw nl::ValidationError("unknown preset: " + preset);
  spec.dedupe = cfg.get_bool("gen.dedupe", true);

  const std::string tasks = cfg.get_string("gen.tasks", "");
  if (!tasks.empty()) {
    std::vector<nl::TaskCounts> kept;
    for (const auto& name : split_csv(tasks)) {
      bool found = false;
      for (const auto& tc : spec.tasks) {
        if (name == nl::op_name(tc.task.op) || name == nl::task_name(tc.task)) {
          kept.push_back(tc);
          found = true;
        }
      }
      if (!found) throw nl::ValidationError("preset has no task named " + name);
    }
    spec.tasks = kept;
  }
  const int train_count = cfg.get_int("gen.train_count", 0);
  if (train_count > 0) {
    for (auto& tc : spec.tasks) tc.train_count = train_count;
  }

  fs::create_directories(dir);
  nl::GeneratedDataset d = nl::generate_dataset(spec, dir);
  write_text(dir / "gen.config", cfg.serialize());
  std::cerr << "wrote " << d.train_lines << " train lines to " << d.train_path.string() << " ("
            << nl::hex64(d.train_hash) << ")\n";
  std::cerr << "wrote " << d.test_lines << " test lines to " << d.test_path.string() << " ("
            << nl::hex64(d.test_hash) << ")\n";
  return 0;
}

int cmd_train(const nl::FlatConfig& cfg, const fs::path& dir) {
  const std::string train_path = cfg.get_string("data.train", "");
  if (train_path.empty()) throw nl::ValidationError("data.train (--train) is required");
  std::vector<std::string> lines = read_lines(train_path);

  nl::ModelConfig mcfg = model_from(cfg);
  nl::TrainConfig tcfg = train_from(cfg);
  nl::Vocabulary vocab = nl::Vocabulary::from_corpus(lines);
  mcfg.vocab_size = vocab.size();

  fs::create_directories(dir);
  nl::Gpt<float> model(mcfg, tcfg.seed);
  std::cerr << "training on " << lines.size() << " lines, vocab " << vocab.size() << ", "
            << model.num_parameters() << " parameters\n";
  nl::TrainResult result = nl::train_model(model, lines, vocab, tcfg, &std::cerr);

  const fs::path ckpt = dir / cfg.get_string("out.checkpoint", "model.ckpt");
  nl::save_checkpoint(model, vocab, tcfg.seed, ckpt);
  nl::write_loss_trace_csv(result, dir / "loss_trace.csv");
  write_text(dir / "train.config", cfg.serialize());
  std::cerr << "final loss " << result.final_loss << ", checkpoint " << ckpt.string() << "\n";
  return 0;
}

int cmd_eval(const nl::FlatConfig& cfg, const fs::path& dir) {
  const std::string ckpt_path = cfg.get_string("data.checkpoint", "");
  const std::string test_path = cfg.get_string("data.test", "");
  if (ckpt_path.empty() || test_path.empty()) {
    throw nl::ValidationError("data.checkpoint (--ckpt) and data.test (--test) are required");
  }
  nl::Checkpoint ckpt = nl::load_checkpoint(ckpt_path);
  std::vector<std::string> test_lines = read_lines(test_path);
  nl::EncodingScheme scheme = scheme_from(cfg);
  const uint64_t seed = cfg.get_u64("eval.seed", 1);
  const int max_new = cfg.get_int("eval.max_new", 32);

  nl::EvalReport report = nl::evaluate(ckpt.model, ckpt.vocab, test_lines, scheme, seed, max_new);
  fs::create_directories(dir);
  write_text(dir / "report.csv", nl::report_csv(report));
  write_text(dir / "report.txt", nl::report_table(report));
  write_text(dir / "eval.config", cfg.serialize());
  std::cout << nl::report_table(report);
  return 0;
}

int cmd_ablate(const nl::FlatConfig& cfg, const fs::path& dir) {
  const std::string train_path = cfg.get_string("data.train", "");
  const std::string test_path = cfg.get_string("data.test", "");
  if (train_path.empty() || test_path.empty()) {
    throw nl::ValidationError("data.train (--train) and data.test (--test) are required");
  }
  std::vector<std::string> train_lines = read_lines(train_path);
  std::vector<std::string> test_lines = read_lines(test_path);

  const auto scheme_names = split_csv(cfg.get_string("ablate.schemes", "plain,numerologic"));
  const auto scope_names = split_csv(cfg.get_string("ablate.scopes", "all"));
  const auto seed_names = split_csv(cfg.get_string("ablate.seeds", "1,2,3"));
  const int jobs = cfg.get_int("ablate.jobs", 1);
  const std::string markers = cfg.get_string("scheme.markers", "char");
  const std::string filler = cfg.get_string("scheme.filler", "_");

  struct Cell {
    nl::EncodingScheme scheme;
    std::string label;
    uint64_t seed;
    double accuracy = 0.0;
    double mismatch_rate = 0.0;
    bool failed = false;
    std::string error;
  };
  std::vector<Cell> cells;
  for (const auto& scheme_name : scheme_names) {
    for (const auto& scope_name : scope_names) {
      nl::EncodingScheme scheme;
      scheme.kind = parse_kind(scheme_name);
      scheme.scope = parse_scope(scope_name);
      scheme.markers = parse_markers(markers);
      scheme.filler = filler[0];
      // a scope is meaningless for plain text; keep one canonical cell
      if (scheme.kind == nl::SchemeKind::plain && scheme.scope != nl::Scope::all) continue;
      for (const auto& seed_name : seed_names) {
        Cell cell;
        cell.scheme = scheme;
        cell.seed = std::stoull(seed_name);
        cell.label = scheme_name + ":" + scope_name;
        cells.push_back(cell);
      }
    }
  }

  nl::ModelConfig mcfg = model_from(cfg);
  nl::TrainConfig tcfg_base = train_from(cfg);
  fs::create_directories(dir);

  std::atomic<size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      Cell& cell = cells[i];
      const std::string cell_dir_name =
          "cell_" + cell.label + "_s" + std::to_string(cell.seed);
      std::string sanitized = cell_dir_name;
      for (auto& c : sanitized) {
        if (c == ':') c = '_';
      }
      try {
        nl::CellConfig cc;
        cc.scheme = cell.scheme;
        cc.model = mcfg;
        cc.train = tcfg_base;
        cc.train.seed = cell.seed;
        cc.encode_seed = cell.seed;
        {
          std::lock_guard<std::mutex> lock(log_mutex);
          std::cerr << "[ablate] " << cell.label << " seed " << cell.seed << " starting\n";
        }
        nl::CellResult result =
            nl::train_and_eval_cell(train_lines, test_lines, cc, nullptr, dir / sanitized);
        cell.accuracy = result.report.overall.accuracy();
        cell.mismatch_rate = result.report.mismatch.rate();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "[ablate] " << cell.label << " seed " << cell.seed << " accuracy "
                  << cell.accuracy << "\n";
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "[ablate] " << cell.label << " seed " << cell.seed << " FAILED: " << e.what()
                  << "\n";
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // matrix: one row per scheme:scope, one column per seed
  std::ostringstream csv, table;
  csv << "scheme,scope,seed,accuracy,mismatch_rate,error\n";
  table << "cell";
  for (const auto& s : seed_names) table << "  seed" << s;
  table << "  mean\n";
  for (size_t i = 0; i < cells.size();) {
    const std::string label = cells[i].label;
    table << label;
    double sum = 0;
    int n = 0;
    while (i < cells.size() && cells[i].label == label) {
      const Cell& cell = cells[i];
      csv << cell.label.substr(0, cell.label.find(':')) << ","
          << cell.label.substr(cell.label.find(':') + 1) << "," << cell.seed << ",";
      if (cell.failed) {
        csv << ",," << cell.error << "\n";
        table << "  FAIL";
      } else {
        csv << cell.accuracy << "," << cell.mismatch_rate << ",\n";
        char buf[16];
        std::snprintf(buf, sizeof(buf), "  %5.1f", cell.accuracy * 100.0);
        table << buf;
        sum += cell.accuracy;
        ++n;
      }
      ++i;
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "  %5.1f", n ? sum / n * 100.0 : 0.0);
    table << buf << "\n";
  }
  write_text(dir / "matrix.csv", csv.str());
  write_text(dir / "matrix.txt", table.str());
  write_text(dir / "ablate.config", cfg.serialize());
  std::cout << table.str();
  for (const auto& cell : cells) {
    if (cell.failed) return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NumeroLogic number-encoding toolkit"};
  app.require_subcommand(1);

  // encode/decode
  std::string in_path = "-", out_path = "-";
  std::string scheme_name = "numerologic", scope_name = "all", markers_name = "char",
              filler = "_";
  uint64_t seed = 1;
  bool force = false, mismatch_summary = false;

  auto add_scheme_flags = [&](CLI::App* cmd) {
    cmd->add_option("--scheme", scheme_name,
                    "plain|numerologic|prefix-only|multi-token|ws-contiguous|ws-random");
    cmd->add_option("--scope", scope_name, "all|operands|results");
    cmd->add_option("--markers", markers_name, "token|char");
    cmd->add_option("--filler", filler, "filler character for ws schemes");
    cmd->add_option("--seed", seed, "seed (ws-random placement)");
  };

  CLI::App* enc = app.add_subcommand("encode", "rewrite numbers in a text stream");
  enc->add_option("--in", in_path, "input path or -");
  enc->add_option("--out", out_path, "output path or -");
  add_scheme_flags(enc);
  enc->add_flag("--force", force, "bypass the already-encoded guard");

  CLI::App* dec = app.add_subcommand("decode", "strip number encodings from a text stream");
  dec->add_option("--in", in_path, "input path or -");
  dec->add_option("--out", out_path, "output path or -");
  add_scheme_flags(dec);
  dec->add_flag("--mismatch-summary", mismatch_summary,
                "report declared-vs-actual digit count statistics");

  // config-file commands
  std::string config_path, out_dir;
  std::string gen_preset, gen_tasks, data_train, data_test, data_ckpt, ablate_schemes,
      ablate_scopes, ablate_seeds;
  uint64_t gen_seed = 1, train_seed = 1, eval_seed = 1;
  int gen_test_count = 2000, gen_train_count = 0;
  bool gen_dedupe = true;
  int steps = 1500, batch_size = 64, eval_interval = 100, warmup = 100, max_new = 32, jobs = 1;
  double lr = 1e-3, wd = 0.01, dropout = 0.1;
  int n_layers = 4, n_heads = 4, d_model = 128, context = 64;
  bool packed = false;

  auto add_config_flag = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value config file");
    cmd->add_option("--out", out_dir, "output directory");
  };
  auto add_model_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--layers", n_layers);
    cmd->add_option("--heads", n_heads);
    cmd->add_option("--dim", d_model);
    cmd->add_option("--context", context);
    cmd->add_option("--dropout", dropout);
    cmd->add_option("--steps", steps);
    cmd->add_option("--batch", batch_size);
    cmd->add_option("--lr", lr);
    cmd->add_option("--wd", wd);
    cmd->add_option("--train-seed", train_seed);
    cmd->add_option("--eval-interval", eval_interval);
    cmd->add_option("--warmup", warmup);
    cmd->add_flag("--packed", packed, "packed-window batching");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate arithmetic datasets");
  add_config_flag(gen);
  gen->add_option("--preset", gen_preset, "nanogpt|large");
  gen->add_option("--tasks", gen_tasks, "comma list: add,sub,mul,sin,sqrt");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--test-count", gen_test_count);
  gen->add_option("--train-count", gen_train_count, "override per-task train count");
  gen->add_option("--dedupe", gen_dedupe);

  CLI::App* train = app.add_subcommand("train", "train the char-level model");
  add_config_flag(train);
  train->add_option("--train", data_train, "training corpus (already encoded)");
  add_model_train_flags(train);

  CLI::App* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
  add_config_flag(evalc);
  evalc->add_option("--ckpt", data_ckpt);
  evalc->add_option("--test", data_test, "plain-form test file");
  add_scheme_flags(evalc);
  evalc->add_option("--eval-seed", eval_seed);
  evalc->add_option("--max-new", max_new);

  CLI::App* ablate = app.add_subcommand("ablate", "scheme x scope x seed training matrix");
  add_config_flag(ablate);
  ablate->add_option("--train", data_train, "plain-form training corpus");
  ablate->add_option("--test", data_test, "plain-form test file");
  ablate->add_option("--schemes", ablate_schemes);
  ablate->add_option("--scopes", ablate_scopes);
  ablate->add_option("--seeds", ablate_seeds);
  ablate->add_option("--jobs", jobs, "concurrent cells");
  ablate->add_option("--markers", markers_name);
  ablate->add_option("--filler", filler);
  add_model_train_flags(ablate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (enc->parsed() || dec->parsed()) {
      nl::EncodingScheme scheme;
      scheme.kind = parse_kind(scheme_name);
      scheme.scope = parse_scope(scope_name);
      scheme.markers = parse_markers(markers_name);
      if (filler.size() != 1) throw nl::ValidationError("--filler must be one character");
      scheme.filler = filler[0];
      if (enc->parsed()) return cmd_encode(in_path, out_path, scheme, seed, force);
      return cmd_decode(in_path, out_path, scheme, mismatch_summary);
    }

    // Assemble the resolved config: defaults <- file <- flags.
    nl::FlatConfig resolved;
    auto load_defaults = [&](const std::vector<std::pair<const char*, const char*>>& kv) {
      for (const auto& [k, v] : kv) resolved.set(k, v);
    };
    if (gen->parsed()) {
      load_defaults({{"gen.preset", "nanogpt"},
                     {"gen.tasks", ""},
                     {"gen.seed", "1"},
                     {"gen.test_count", "2000"},
                     {"gen.train_count", "0"},
                     {"gen.dedupe", "true"}});
    } else if (train->parsed()) {
      load_defaults(kModelTrainDefaults);
      load_defaults({{"data.train", ""}, {"out.checkpoint", "model.ckpt"}});
    } else if (evalc->parsed()) {
      load_defaults(kSchemeDefaults);
      load_defaults({{"data.checkpoint", ""},
                     {"data.test", ""},
                     {"eval.seed", "1"},
                     {"eval.max_new", "32"}});
    } else {
      load_defaults(kModelTrainDefaults);
      load_defaults({{"data.train", ""},
                     {"data.test", ""},
                     {"ablate.schemes", "plain,numerologic"},
                     {"ablate.scopes", "all"},
                     {"ablate.seeds", "1,2,3"},
                     {"ablate.jobs", "1"},
                     {"scheme.markers", "char"},
                     {"scheme.filler", "_"}});
    }
    if (!config_path.empty()) {
      nl::FlatConfig file = nl::FlatConfig::from_file(config_path);
      for (const auto& key : file.unread_keys()) {
        if (!resolved.has(key)) {
          throw nl::ValidationError("unknown config key for this command: " + key);
        }
        resolved.set(key, file.get_string(key, ""));
      }
    }

    CLI::App* active = gen->parsed() ? gen : train->parsed() ? train : evalc->parsed() ? evalc : ablate;
    auto flag = [&](const char* name, const std::string& key, const std::string& value) {
      const CLI::Option* opt = active->get_option_no_throw(name);
      if (opt && opt->count() > 0) resolved.set(key, value);
    };
    flag("--preset", "gen.preset", gen_preset);
    flag("--tasks", "gen.tasks", gen_tasks);
    flag("--seed", "gen.seed", std::to_string(gen_seed));
    flag("--test-count", "gen.test_count", std::to_string(gen_test_count));
    flag("--train-count", "gen.train_count", std::to_string(gen_train_count));
    flag("--dedupe", "gen.dedupe", gen_dedupe ? "true" : "false");
    flag("--train", "data.train", data_train);
    flag("--test", "data.test", data_test);
    flag("--ckpt", "data.checkpoint", data_ckpt);
    flag("--layers", "model.n_layers", std::to_string(n_layers));
    flag("--heads", "model.n_heads", std::to_string(n_heads));
    flag("--dim", "model.d_model", std::to_string(d_model));
    flag("--context", "model.context_length", std::to_string(context));
    flag("--dropout", "model.dropout", std::to_string(dropout));
    flag("--steps", "train.steps", std::to_string(steps));
    flag("--batch", "train.batch_size", std::to_string(batch_size));
    flag("--lr", "train.learning_rate", std::to_string(lr));
    flag("--wd", "train.weight_decay", std::to_string(wd));
    flag("--train-seed", "train.seed", std::to_string(train_seed));
    flag("--eval-interval", "train.eval_interval", std::to_string(eval_interval));
    flag("--warmup", "train.warmup_steps", std::to_string(warmup));
    flag("--packed", "train.packed", packed ? "true" : "false");
    flag("--scheme", "scheme.kind", scheme_name);
    flag("--scope", "scheme.scope", scope_name);
    flag("--markers", "scheme.markers", markers_name);
    flag("--filler", "scheme.filler", filler);
    flag("--eval-seed", "eval.seed", std::to_string(eval_seed));
    flag("--max-new", "eval.max_new", std::to_string(max_new));
    flag("--schemes", "ablate.schemes", ablate_schemes);
    flag("--scopes", "ablate.scopes", ablate_scopes);
    flag("--seeds", "ablate.seeds", ablate_seeds);
    flag("--jobs", "ablate.jobs", std::to_string(jobs));

    const char* cmd_name = gen->parsed()    ? "gen"
                           : train->parsed() ? "train"
                           : evalc->parsed() ? "eval"
                                             : "ablate";
    fs::path dir = out_dir.empty() ? output_root() / cmd_name : fs::path(out_dir);

    int rc;
    if (gen->parsed()) {
      rc = cmd_gen(resolved, dir);
    } else if (train->parsed()) {
      rc = cmd_train(resolved, dir);
    } else if (evalc->parsed()) {
      rc = cmd_eval(resolved, dir);
    } else {
      rc = cmd_ablate(resolved, dir);
    }
    return rc;
  } catch (const nl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
