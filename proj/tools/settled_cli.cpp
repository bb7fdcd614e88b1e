// Command-line front end: parses element expressions, runs the library's
// computations through the public C API, and emits JSON or CSV tables.
#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "settled/settled.h"

namespace {

struct SystemDeleter {
  void operator()(settled_system* sys) const { settled_system_free(sys); }
};
struct WordDeleter {
  void operator()(settled_word* word) const { settled_word_free(word); }
};
using SystemPtr = std::unique_ptr<settled_system, SystemDeleter>;
using WordPtr = std::unique_ptr<settled_word, WordDeleter>;

// One option bundle per subcommand so each keeps its own defaults; the
// selected subcommand's bundle is the only one consulted after parsing.
struct CommandOpts {
  std::string expr;
  int rank = 2;
  int precision = 64;
  int max_level = 12;
  int depth = 12;
  std::uint64_t seed = 20260822;
  std::string format;  // resolved per command when left empty
  std::string out;
  std::string suite;      // verify only
  std::string grid_file;  // verify only
};

int fail(const std::string& message, int code) {
  std::cerr << "error: " << message << "\n";
  return code;
}

int fail_api(settled_status status) {
  std::cerr << "error: " << settled_last_error() << "\n";
  return status == SETTLED_ERR_ARGUMENT ? 2 : 1;
}

// The precision rule: every command leaves at least 8 spare bits above the
// deepest level it touches.
bool precision_ok(const CommandOpts& opts, int levels, std::string* message) {
  if (opts.precision >= levels + 8) return true;
  std::ostringstream text;
  text << "precision " << opts.precision << " is too small for level "
       << levels << "; need at least " << levels + 8;
  *message = text.str();
  return false;
}

int emit(const std::string& text, const CommandOpts& opts) {
  if (opts.out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream file(opts.out, std::ios::binary | std::ios::trunc);
  if (!file) return fail("cannot open output file: " + opts.out, 1);
  file << text;
  if (!file.flush()) return fail("cannot write output file: " + opts.out, 1);
  return 0;
}

settled_format format_enum(const CommandOpts& opts,
                           const std::string& fallback) {
  const std::string& name = opts.format.empty() ? fallback : opts.format;
  return name == "csv" ? SETTLED_FORMAT_CSV : SETTLED_FORMAT_JSON;
}

SystemPtr open_system(const CommandOpts& opts, settled_status* status) {
  settled_system* sys = nullptr;
  *status = settled_system_new(opts.rank, opts.precision, &sys);
  return SystemPtr(sys);
}

WordPtr parse_word(settled_system* sys, const std::string& expr,
                   settled_status* status) {
  settled_word* word = nullptr;
  *status = settled_word_parse(sys, expr.c_str(), &word);
  return WordPtr(word);
}

// Renders through one of the word-based C entry points sharing the
// (system, word, level, format) shape.
using RenderFn = settled_status (*)(settled_system*, const settled_word*, int,
                                    settled_format, char**);

int run_word_command(const CommandOpts& opts, int levels, RenderFn render,
                     const std::string& default_format) {
  std::string message;
  if (!precision_ok(opts, levels, &message)) return fail(message, 2);
  settled_status status = SETTLED_OK;
  SystemPtr sys = open_system(opts, &status);
  if (status != SETTLED_OK) return fail_api(status);
  WordPtr word = parse_word(sys.get(), opts.expr, &status);
  if (status != SETTLED_OK) return fail_api(status);
  char* text = nullptr;
  status = render(sys.get(), word.get(), levels, format_enum(opts, default_format),
                  &text);
  if (status != SETTLED_OK) return fail_api(status);
  std::string output(text);
  settled_string_free(text);
  return emit(output, opts);
}

int run_eval(const CommandOpts& opts) {
  std::string message;
  if (!precision_ok(opts, opts.depth, &message)) return fail(message, 2);
  settled_status status = SETTLED_OK;
  SystemPtr sys = open_system(opts, &status);
  if (status != SETTLED_OK) return fail_api(status);
  char* text = nullptr;
  status = settled_eval_render(sys.get(), opts.expr.c_str(), opts.depth,
                               format_enum(opts, "json"), &text);
  if (status != SETTLED_OK) return fail_api(status);
  std::string output(text);
  settled_string_free(text);
  return emit(output, opts);
}

int run_verify(const CommandOpts& opts) {
  if (!opts.format.empty() && opts.format != "json") {
    return fail("the checking report is JSON-only; drop --format or pass json",
                2);
  }
  // 16 is the deepest level the built-in grid reaches when uncapped.
  int levels = opts.max_level > 0 ? opts.max_level : 16;
  std::string message;
  if (!precision_ok(opts, levels, &message)) return fail(message, 2);

  std::string grid_json;
  if (!opts.grid_file.empty()) {
    std::ifstream file(opts.grid_file, std::ios::binary);
    if (!file) return fail("cannot read grid file: " + opts.grid_file, 2);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    grid_json = buffer.str();
  }

  int failures = 0;
  char* text = nullptr;
  settled_status status = settled_verify_render(
      opts.rank, opts.max_level, opts.seed, opts.precision,
      grid_json.empty() ? nullptr : grid_json.c_str(),
      opts.suite.empty() ? nullptr : opts.suite.c_str(), &failures, &text);
  if (status != SETTLED_OK) return fail_api(status);
  std::string output(text);
  settled_string_free(text);
  int emit_status = emit(output, opts);
  if (emit_status != 0) return emit_status;
  if (failures > 0) {
    std::cerr << failures << " check" << (failures == 1 ? "" : "s")
              << " failed\n";
    return 1;
  }
  return 0;
}

// Loads the versioned key-value config; returns false with a message on any
// violation.  Recognized keys pin defaults that explicit flags override.
bool load_config(const std::string& path,
                 std::map<std::string, CommandOpts>& bundles,
                 std::string* message) {
  std::ifstream file(path);
  if (!file) {
    *message = "cannot read config file: " + path;
    return false;
  }
  bool version_seen = false;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    std::string trimmed;
    for (char ch : line) {
      if (ch == '#') break;
      trimmed += ch;
    }
    while (!trimmed.empty() && (trimmed.back() == ' ' || trimmed.back() == '\t' ||
                                trimmed.back() == '\r')) {
      trimmed.pop_back();
    }
    std::size_t start = trimmed.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    trimmed = trimmed.substr(start);
    std::size_t equals = trimmed.find('=');
    if (equals == std::string::npos) {
      *message = path + ":" + std::to_string(line_no) + ": expected key=value";
      return false;
    }
    std::string key = trimmed.substr(0, equals);
    std::string value = trimmed.substr(equals + 1);
    if (!version_seen) {
      if (key != "version" || value != "1") {
        *message = path + ":" + std::to_string(line_no) +
                   ": config must begin with version=1";
        return false;
      }
      version_seen = true;
      continue;
    }
    long number = 0;
    bool numeric = !value.empty();
    for (char ch : value) {
      if (ch < '0' || ch > '9') {
        numeric = false;
        break;
      }
    }
    if (numeric) number = std::stol(value);
    auto require_numeric = [&]() {
      if (numeric) return true;
      *message = path + ":" + std::to_string(line_no) + ": " + key +
                 " needs a whole-number value";
      return false;
    };
    if (key == "r") {
      if (!require_numeric()) return false;
      for (auto& entry : bundles) entry.second.rank = static_cast<int>(number);
    } else if (key == "precision") {
      if (!require_numeric()) return false;
      for (auto& entry : bundles) {
        entry.second.precision = static_cast<int>(number);
      }
    } else if (key == "depth") {
      if (!require_numeric()) return false;
      for (auto& entry : bundles) entry.second.depth = static_cast<int>(number);
    } else if (key == "max-level") {
      if (!require_numeric()) return false;
      for (auto& entry : bundles) {
        entry.second.max_level = static_cast<int>(number);
      }
    } else if (key == "seed") {
      if (!require_numeric()) return false;
      for (auto& entry : bundles) {
        entry.second.seed = static_cast<std::uint64_t>(number);
      }
    } else if (key == "grid") {
      for (auto& entry : bundles) entry.second.grid_file = value;
    } else {
      *message = path + ":" + std::to_string(line_no) +
                 ": unknown config key '" + key + "'";
      return false;
    }
  }
  if (!version_seen) {
    *message = path + ": config must begin with version=1";
    return false;
  }
  return true;
}

void add_shared_flags(CLI::App* cmd, CommandOpts& opts, bool with_expr,
                      bool with_depth, bool with_max_level,
                      const char* max_level_help) {
  if (with_expr) {
    cmd->add_option("--expr", opts.expr, "Element expression to evaluate")
        ->required();
  }
  cmd->add_option("--r", opts.rank, "Rank of the finite generator family")
      ->capture_default_str();
  cmd->add_option("--precision", opts.precision,
                  "Bits carried for 2-adic data")
      ->capture_default_str();
  if (with_depth) {
    cmd->add_option("--depth", opts.depth, "Tree depth to work to")
        ->capture_default_str();
  }
  if (with_max_level) {
    cmd->add_option("--max-level", opts.max_level, max_level_help)
        ->capture_default_str();
  }
  cmd->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", opts.out, "Write output to this file");
  cmd->add_option("--seed", opts.seed,
                  "Reproducibility seed (drawn from by verify)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact computations on self-similar binary-tree automorphisms: "
      "portraits, cycle structure, stable-vertex counts, block analysis, "
      "finite-family approximation, and a checking harness."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(settled_version()));

  std::map<std::string, CommandOpts> bundles;
  for (const char* name : {"eval", "cycles", "profile", "descendants",
                           "blocks", "verify", "approx-dense"}) {
    bundles[name];  // default-construct
  }
  bundles["verify"].max_level = 0;
  bundles["approx-dense"].max_level = 6;

  // Config values act as defaults, so they are applied before CLI11 parses
  // the explicit flags.  The flag is scanned by hand for that reason.
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      config_path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      config_path = arg.substr(9);
    }
  }
  if (!config_path.empty()) {
    std::string message;
    if (!load_config(config_path, bundles, &message)) {
      return fail(message, 2);
    }
  }
  // Registered (top level and per command) so CLI11 accepts the flag in
  // either position; the value itself was consumed by the scan above.
  std::string config_echo;
  app.add_option("--config", config_echo,
                 "Versioned key=value file pinning r, precision, depth, "
                 "max-level, seed, grid");

  CLI::App* eval = app.add_subcommand(
      "eval", "Render an expression's portrait (admits the root swap 's')");
  add_shared_flags(eval, bundles["eval"], true, true, false, "");
  eval->add_option("--config", config_echo, "See the top-level flag");

  CLI::App* cycles = app.add_subcommand(
      "cycles", "Cycle decomposition with stability status, per level");
  add_shared_flags(cycles, bundles["cycles"], true, false, true,
                   "Deepest level to decompose");
  cycles->add_option("--config", config_echo, "See the top-level flag");

  CLI::App* profile = app.add_subcommand(
      "profile", "Stable-vertex counts and ratios, per level");
  add_shared_flags(profile, bundles["profile"], true, false, true,
                   "Deepest level to count");
  profile->add_option("--config", config_echo, "See the top-level flag");

  CLI::App* descendants = app.add_subcommand(
      "descendants", "Descendant levels with family verdicts and labels");
  add_shared_flags(descendants, bundles["descendants"], true, true, false, "");
  descendants->add_option("--config", config_echo, "See the top-level flag");

  CLI::App* blocks = app.add_subcommand(
      "blocks", "Stable-block analysis: verdicts, chain, and top signs");
  add_shared_flags(blocks, bundles["blocks"], true, true, false, "");
  blocks->add_option("--config", config_echo, "See the top-level flag");

  CLI::App* verify = app.add_subcommand(
      "verify", "Run the checking harness and emit its JSON report");
  add_shared_flags(verify, bundles["verify"], false, false, true,
                   "Cap every grid level (0 keeps the grid's own caps)");
  verify->add_option("--suite", bundles["verify"].suite,
                     "Run a single suite by name");
  verify->add_option("--grid", bundles["verify"].grid_file,
                     "JSON file overriding the built-in grid");
  verify->add_option("--config", config_echo, "See the top-level flag");

  CLI::App* approx = app.add_subcommand(
      "approx-dense",
      "Approximate by a finite-family word exact to the given level");
  add_shared_flags(approx, bundles["approx-dense"], true, false, true,
                   "Agreement level of the approximation");
  approx->add_option("--config", config_echo, "See the top-level flag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const CommandOpts& opts = bundles[name];
  if (name == "eval") return run_eval(opts);
  if (name == "cycles") {
    return run_word_command(opts, opts.max_level, settled_cycles_render,
                            "json");
  }
  if (name == "profile") {
    return run_word_command(opts, opts.max_level, settled_profile_render,
                            "csv");
  }
  if (name == "descendants") {
    return run_word_command(opts, opts.depth, settled_descendants_render,
                            "json");
  }
  if (name == "blocks") {
    return run_word_command(opts, opts.depth, settled_blocks_render, "json");
  }
  if (name == "verify") return run_verify(opts);
  if (name == "approx-dense") {
    return run_word_command(opts, opts.max_level, settled_approx_render,
                            "json");
  }
  return fail("unhandled command: " + name, 2);
}
