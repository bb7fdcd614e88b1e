#include "settled/settled.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "dense.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "formats.hpp"
#include "verify.hpp"
#include "words.hpp"

struct settled_system {
  settled::System sys;
  settled::Dynamics dyn;
  settled::DenseApproximator approx;

  settled_system(int rank, int precision)
      : sys(rank, precision), dyn(sys), approx(sys) {}
};

struct settled_word {
  settled::Word word;
};

namespace {

thread_local std::string g_last_error = "no error";

settled_status fail(settled_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

settled_status kind_code(settled::Error::Kind kind) {
  using Kind = settled::Error::Kind;
  switch (kind) {
    case Kind::Parse: return SETTLED_ERR_PARSE;
    case Kind::Precision: return SETTLED_ERR_PRECISION;
    case Kind::Domain: return SETTLED_ERR_DOMAIN;
    case Kind::Depth: return SETTLED_ERR_DEPTH;
    case Kind::Internal: return SETTLED_ERR_INTERNAL;
  }
  return SETTLED_ERR_INTERNAL;
}

// Runs the body and funnels every exception into a status + message.
template <typename F>
settled_status guarded(F&& body) {
  try {
    return body();
  } catch (const settled::Error& err) {
    return fail(kind_code(err.kind()), err.what());
  } catch (const std::exception& err) {
    return fail(SETTLED_ERR_INTERNAL, err.what());
  } catch (...) {
    return fail(SETTLED_ERR_INTERNAL, "unrecognized exception");
  }
}

settled_status copy_out(const std::string& text, char** out) {
  char* buffer = static_cast<char*>(std::malloc(text.size() + 1));
  if (buffer == nullptr) return fail(SETTLED_ERR_INTERNAL, "out of memory");
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  *out = buffer;
  return SETTLED_OK;
}

settled_status require(bool ok, const char* what) {
  if (ok) return SETTLED_OK;
  return fail(SETTLED_ERR_ARGUMENT, std::string("null or invalid ") + what);
}

bool valid_format(settled_format format) {
  return format == SETTLED_FORMAT_JSON || format == SETTLED_FORMAT_CSV;
}

}  // namespace

extern "C" {

const char* settled_version(void) { return "1.0.0"; }

const char* settled_last_error(void) { return g_last_error.c_str(); }

void settled_string_free(char* text) { std::free(text); }

settled_status settled_system_new(int rank, int precision,
                                  settled_system** out) {
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    *out = new settled_system(rank, precision);
    return SETTLED_OK;
  });
}

void settled_system_free(settled_system* sys) { delete sys; }

settled_status settled_system_rank(const settled_system* sys, int* out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = sys->sys.rank();
  return SETTLED_OK;
}

settled_status settled_system_precision(const settled_system* sys, int* out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = sys->sys.precision();
  return SETTLED_OK;
}

settled_status settled_word_parse(settled_system* sys, const char* text,
                                  settled_word** out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(text != nullptr, "expression")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    *out = new settled_word{sys->sys.parse(text)};
    return SETTLED_OK;
  });
}

void settled_word_free(settled_word* word) { delete word; }

settled_status settled_word_str(const settled_word* word, char** out) {
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded(
      [&]() -> settled_status { return copy_out(word->word.str(), out); });
}

settled_status settled_word_key(const settled_word* word, char** out) {
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded(
      [&]() -> settled_status { return copy_out(word->word.key(), out); });
}

settled_status settled_word_sign(settled_system* sys,
                                 const settled_word* word, int level,
                                 int* out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  return guarded([&]() -> settled_status {
    if (level < 1) throw settled::Error::domain("level must be at least 1");
    *out = sys->sys.sign_profile(word->word).at(level);
    return SETTLED_OK;
  });
}

settled_status settled_eval_render(settled_system* sys, const char* expr,
                                   int depth, settled_format format,
                                   char** out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(expr != nullptr, "expression")) return s;
  if (settled_status s = require(valid_format(format), "format")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    settled::Portrait portrait = sys->sys.parse_portrait(expr, depth);
    return copy_out(format == SETTLED_FORMAT_JSON
                        ? settled::portrait_json(portrait)
                        : settled::portrait_csv(portrait),
                    out);
  });
}

settled_status settled_profile_render(settled_system* sys,
                                      const settled_word* word, int max_level,
                                      settled_format format, char** out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(valid_format(format), "format")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    settled::SettleProfileResult profile =
        sys->dyn.settle_profile(word->word, max_level);
    return copy_out(format == SETTLED_FORMAT_JSON
                        ? settled::profile_json(profile)
                        : settled::profile_csv(profile),
                    out);
  });
}

settled_status settled_cycles_render(settled_system* sys,
                                     const settled_word* word, int max_level,
                                     settled_format format, char** out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(valid_format(format), "format")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    if (max_level < 1) {
      throw settled::Error::domain("max level must be at least 1");
    }
    std::vector<std::vector<settled::CycleRecord>> tables;
    tables.reserve(static_cast<std::size_t>(max_level));
    for (int level = 1; level <= max_level; ++level) {
      tables.push_back(sys->dyn.cycle_table(word->word, level));
    }
    return copy_out(format == SETTLED_FORMAT_JSON
                        ? settled::cycles_json(tables)
                        : settled::cycles_csv(tables),
                    out);
  });
}

settled_status settled_descendants_render(settled_system* sys,
                                          const settled_word* word, int depth,
                                          settled_format format, char** out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(valid_format(format), "format")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    settled::BlockReport report = sys->dyn.analyze_blocks(word->word, depth);
    return copy_out(format == SETTLED_FORMAT_JSON
                        ? settled::descendants_json(sys->sys, report)
                        : settled::descendants_csv(sys->sys, report),
                    out);
  });
}

settled_status settled_blocks_render(settled_system* sys,
                                     const settled_word* word, int depth,
                                     settled_format format, char** out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(valid_format(format), "format")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    settled::BlockReport report = sys->dyn.analyze_blocks(word->word, depth);
    return copy_out(format == SETTLED_FORMAT_JSON
                        ? settled::blocks_json(sys->sys, report)
                        : settled::blocks_csv(sys->sys, report),
                    out);
  });
}

settled_status settled_approx_render(settled_system* sys,
                                     const settled_word* word, int level,
                                     settled_format format, char** out) {
  if (settled_status s = require(sys != nullptr, "system")) return s;
  if (settled_status s = require(word != nullptr, "word")) return s;
  if (settled_status s = require(valid_format(format), "format")) return s;
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    settled::ApproxResult result = sys->approx.approximate(word->word, level);
    // Re-verify the level agreement independently of the constructor.
    bool agrees = sys->sys.portrait(result.alpha, level) ==
                  sys->sys.portrait(word->word, level);
    return copy_out(format == SETTLED_FORMAT_JSON
                        ? settled::approx_json(word->word, result, agrees)
                        : settled::approx_csv(word->word, result, agrees),
                    out);
  });
}

settled_status settled_verify_suites(char** out) {
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    std::string joined;
    for (const std::string& name : settled::Harness::suite_names()) {
      joined += name;
      joined += '\n';
    }
    return copy_out(joined, out);
  });
}

settled_status settled_verify_render(int rank, int max_level, uint64_t seed,
                                     int precision, const char* grid_json,
                                     const char* suite, int* failures_out,
                                     char** out) {
  if (settled_status s = require(out != nullptr, "output pointer")) return s;
  *out = nullptr;
  return guarded([&]() -> settled_status {
    settled::HarnessOptions options;
    options.rank = rank;
    options.max_level = max_level;
    options.seed = seed;
    options.precision = precision;
    if (grid_json != nullptr) options.grid_json = grid_json;
    settled::Harness harness(options);
    std::vector<settled::SuiteResult> results;
    if (suite != nullptr && suite[0] != '\0') {
      results.push_back(harness.run(suite));
    } else {
      results = harness.run_all();
    }
    int failures = 0;
    for (const settled::SuiteResult& result : results) {
      failures += result.failures();
    }
    if (failures_out != nullptr) *failures_out = failures;
    return copy_out(settled::report_json(harness, results), out);
  });
}

}  // extern "C"
