// Exercises the shared library exclusively through its C surface; the C++
// types behind the handles are deliberately not included.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include "json.hpp"

#include "settled/settled.h"

using nlohmann::json;

namespace {

// RAII helpers so failing REQUIREs cannot leak handles.
struct SystemHandle {
  settled_system* sys = nullptr;
  ~SystemHandle() { settled_system_free(sys); }
};
struct WordHandle {
  settled_word* word = nullptr;
  ~WordHandle() { settled_word_free(word); }
};
struct OutString {
  char* text = nullptr;
  ~OutString() { settled_string_free(text); }
  std::string str() const { return text == nullptr ? std::string() : text; }
};

}  // namespace

TEST_CASE("system and word lifecycle round-trips") {
  CHECK(std::string(settled_version()) == "1.0.0");

  SystemHandle sys;
  REQUIRE(settled_system_new(2, 64, &sys.sys) == SETTLED_OK);
  int rank = 0, precision = 0;
  CHECK(settled_system_rank(sys.sys, &rank) == SETTLED_OK);
  CHECK(settled_system_precision(sys.sys, &precision) == SETTLED_OK);
  CHECK(rank == 2);
  CHECK(precision == 64);

  WordHandle word;
  REQUIRE(settled_word_parse(sys.sys, "a1*z[3]", &word.word) == SETTLED_OK);
  OutString str, key;
  CHECK(settled_word_str(word.word, &str.text) == SETTLED_OK);
  CHECK(settled_word_key(word.word, &key.text) == SETTLED_OK);
  CHECK(str.str() == "a1*z[3]");
  CHECK(key.str() == "a1*z[3]");

  int sign = 0;
  CHECK(settled_word_sign(sys.sys, word.word, 1, &sign) == SETTLED_OK);
  CHECK(sign == -1);
  CHECK(settled_word_sign(sys.sys, word.word, 0, &sign) ==
        SETTLED_ERR_DOMAIN);

  // Freeing NULL handles and strings is a no-op, as in free().
  settled_system_free(nullptr);
  settled_word_free(nullptr);
  settled_string_free(nullptr);
}

TEST_CASE("failures set status codes and a readable message") {
  SystemHandle sys;
  REQUIRE(settled_system_new(2, 64, &sys.sys) == SETTLED_OK);

  settled_system* bad = nullptr;
  CHECK(settled_system_new(1, 64, &bad) == SETTLED_ERR_DOMAIN);
  CHECK(bad == nullptr);
  CHECK(std::strlen(settled_last_error()) > 0);

  // Expression-level violations (even label, index out of range) surface as
  // parse errors carrying the offending position.
  settled_word* word = nullptr;
  CHECK(settled_word_parse(sys.sys, "z[4]", &word) == SETTLED_ERR_PARSE);
  CHECK(word == nullptr);
  CHECK(std::string(settled_last_error()).find("odd") != std::string::npos);

  CHECK(settled_word_parse(sys.sys, "a1*", &word) == SETTLED_ERR_PARSE);
  CHECK(word == nullptr);
  CHECK(settled_word_parse(sys.sys, "a3", &word) == SETTLED_ERR_PARSE);
  CHECK(settled_word_parse(sys.sys, "s", &word) == SETTLED_ERR_PARSE);
  CHECK(std::string(settled_last_error()).find("portrait") !=
        std::string::npos);

  CHECK(settled_word_parse(nullptr, "g", &word) == SETTLED_ERR_ARGUMENT);
  CHECK(settled_word_parse(sys.sys, nullptr, &word) == SETTLED_ERR_ARGUMENT);
  CHECK(settled_word_parse(sys.sys, "g", nullptr) == SETTLED_ERR_ARGUMENT);

  OutString text;
  CHECK(settled_eval_render(sys.sys, "g", 0, SETTLED_FORMAT_JSON,
                            &text.text) == SETTLED_ERR_DEPTH);
  CHECK(settled_eval_render(sys.sys, "g", 6, static_cast<settled_format>(7),
                            &text.text) == SETTLED_ERR_ARGUMENT);
}

TEST_CASE("eval renders portraits for word and swap expressions") {
  SystemHandle sys;
  REQUIRE(settled_system_new(2, 64, &sys.sys) == SETTLED_OK);

  OutString swapped;
  REQUIRE(settled_eval_render(sys.sys, "s", 4, SETTLED_FORMAT_JSON,
                              &swapped.text) == SETTLED_OK);
  json doc = json::parse(swapped.str());
  CHECK(doc.at("depth") == 4);
  CHECK(doc.at("signs")[0] == -1);
  CHECK(doc.at("order") == 2);

  OutString odometer;
  REQUIRE(settled_eval_render(sys.sys, "g^5", 6, SETTLED_FORMAT_CSV,
                              &odometer.text) == SETTLED_OK);
  CHECK(odometer.str().rfind("level,sign\n1,-1\n", 0) == 0);
}

TEST_CASE("profile, cycles, descendants, blocks, approx render via handles") {
  SystemHandle sys;
  REQUIRE(settled_system_new(2, 64, &sys.sys) == SETTLED_OK);
  WordHandle z3;
  REQUIRE(settled_word_parse(sys.sys, "z[3]", &z3.word) == SETTLED_OK);

  OutString profile;
  REQUIRE(settled_profile_render(sys.sys, z3.word, 12, SETTLED_FORMAT_CSV,
                                 &profile.text) == SETTLED_OK);
  CHECK(profile.str().find("12,4096,4092,1023/1024\n") != std::string::npos);

  WordHandle g;
  REQUIRE(settled_word_parse(sys.sys, "g", &g.word) == SETTLED_OK);
  OutString cycles;
  REQUIRE(settled_cycles_render(sys.sys, g.word, 5, SETTLED_FORMAT_JSON,
                                &cycles.text) == SETTLED_OK);
  json table = json::parse(cycles.str());
  REQUIRE(table.at("levels").size() == 5);
  CHECK(table.at("levels")[4].at("cycles")[0].at("length") == 32);

  WordHandle a1z3;
  REQUIRE(settled_word_parse(sys.sys, "a1*z[3]", &a1z3.word) == SETTLED_OK);
  OutString desc, blocks;
  REQUIRE(settled_descendants_render(sys.sys, a1z3.word, 3,
                                     SETTLED_FORMAT_JSON,
                                     &desc.text) == SETTLED_OK);
  CHECK(desc.str().find("\"label\": \"81\"") != std::string::npos);
  REQUIRE(settled_blocks_render(sys.sys, a1z3.word, 3, SETTLED_FORMAT_JSON,
                                &blocks.text) == SETTLED_OK);
  CHECK(json::parse(blocks.str()).at("stable_block") == "yes");

  OutString approx;
  REQUIRE(settled_approx_render(sys.sys, z3.word, 3, SETTLED_FORMAT_JSON,
                                &approx.text) == SETTLED_OK);
  json approximation = json::parse(approx.str());
  CHECK(approximation.at("agrees") == true);
  CHECK(approximation.at("level") == 3);

  // Identical queries through the same handle stay byte-identical.
  OutString again;
  REQUIRE(settled_profile_render(sys.sys, z3.word, 12, SETTLED_FORMAT_CSV,
                                 &again.text) == SETTLED_OK);
  CHECK(profile.str() == again.str());
}

TEST_CASE("the harness runs through the C surface") {
  OutString names;
  REQUIRE(settled_verify_suites(&names.text) == SETTLED_OK);
  std::string listing = names.str();
  CHECK(listing.find("conjugation\n") != std::string::npos);
  CHECK(listing.find("density\n") != std::string::npos);

  int failures = -1;
  OutString report;
  REQUIRE(settled_verify_render(2, 6, 99, 64, nullptr, "triviality",
                                &failures, &report.text) == SETTLED_OK);
  CHECK(failures == 0);
  json doc = json::parse(report.str());
  CHECK(doc.at("seed") == 99);
  REQUIRE(doc.at("suites").size() == 1);
  CHECK(doc.at("suites")[0].at("suite") == "triviality");

  OutString bad;
  CHECK(settled_verify_render(2, 6, 99, 64, nullptr, "nonsense", &failures,
                              &bad.text) == SETTLED_ERR_DOMAIN);
  CHECK(settled_verify_render(2, 6, 99, 64, "{\"signs\":{\"typo\":1}}",
                              nullptr, &failures,
                              &bad.text) == SETTLED_ERR_DOMAIN);

  // A failing grid is reported through failures_out, not as an error.
  OutString forced;
  REQUIRE(settled_verify_render(2, 0, 7, 64,
                                "{\"conjugation\":{\"labels\":[2]}}",
                                "conjugation", &failures,
                                &forced.text) == SETTLED_OK);
  CHECK(failures > 0);
  CHECK(json::parse(forced.str()).at("passed") == false);
}
