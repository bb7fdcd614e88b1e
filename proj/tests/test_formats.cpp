#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "dense.hpp"
#include "errors.hpp"
#include "formats.hpp"

using namespace settled;
using nlohmann::json;

TEST_CASE("verdict names render all three values distinctly") {
  CHECK(verdict_name(Membership::Verdict::Yes) == "yes");
  CHECK(verdict_name(Membership::Verdict::No) == "no");
  CHECK(verdict_name(Membership::Verdict::Unknown) == "unknown");
}

TEST_CASE("profile CSV round-trips exact fractions") {
  System sys(2);
  Dynamics dyn(sys);
  SettleProfileResult profile =
      dyn.settle_profile(sys.parse("z[3]"), 12);

  std::string csv = profile_csv(profile);
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start < csv.size()) {
      std::size_t end = csv.find('\n', start);
      REQUIRE(end != std::string::npos);  // every row newline-terminated
      lines.push_back(csv.substr(start, end - start));
      start = end + 1;
    }
  }
  REQUIRE(lines.size() == 13);
  CHECK(lines[0] == "level,total,stable,ratio");
  // Stable counts for this word sit at 2^n - 4 from level 2 on.
  CHECK(lines[12] == "12,4096,4092,1023/1024");
  CHECK(lines[2] == "2,4,0,0");

  std::vector<SettleRow> parsed = parse_profile_csv(csv);
  REQUIRE(parsed.size() == profile.rows.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].level == profile.rows[i].level);
    CHECK(parsed[i].total == profile.rows[i].total);
    CHECK(parsed[i].stable == profile.rows[i].stable);
  }

  // Fully stable and fully unstable levels render as bare integers.
  SettleProfileResult odo = dyn.settle_profile(sys.parse("g"), 3);
  std::string odo_csv = profile_csv(odo);
  CHECK(odo_csv == "level,total,stable,ratio\n1,2,2,1\n2,4,4,1\n3,8,8,1\n");
  CHECK(parse_profile_csv(odo_csv).size() == 3);
}

TEST_CASE("profile CSV parser rejects malformed input") {
  CHECK_THROWS_AS(parse_profile_csv(""), Error);
  CHECK_THROWS_AS(parse_profile_csv("level,total,stable\n"), Error);
  std::string good = "level,total,stable,ratio\n1,2,1,1/2\n";
  CHECK(parse_profile_csv(good).size() == 1);

  auto rejects = [](const std::string& text, const char* hint) {
    try {
      parse_profile_csv(text);
      FAIL_CHECK("accepted: " << text);
    } catch (const Error& err) {
      CHECK(err.kind() == Error::Kind::Parse);
      CHECK(std::string(err.what()).find(hint) != std::string::npos);
    }
  };
  // Level sequence must be 1,2,... without gaps.
  rejects("level,total,stable,ratio\n2,4,1,1/4\n", "levels must run");
  rejects("level,total,stable,ratio\n1,2,1,1/2\n3,8,1,1/8\n",
          "levels must run");
  // Totals are pinned to 2^level.
  rejects("level,total,stable,ratio\n1,3,1,1/3\n", "2^level");
  // Stable counts stay within the level.
  rejects("level,total,stable,ratio\n1,2,3,3/2\n", "exceeds");
  // Ratio must be the reduced fraction of the two counts.
  rejects("level,total,stable,ratio\n1,2,1,2/4\n", "lowest terms");
  rejects("level,total,stable,ratio\n1,2,1,1/4\n", "does not equal");
  rejects("level,total,stable,ratio\n1,2,2,2\n", "within [0, 1]");
  rejects("level,total,stable,ratio\n1,2,1,1/0\n", "zero");
  // Fields are bare whole numbers.
  rejects("level,total,stable,ratio\n1,2,x,1/2\n", "whole number");
  rejects("level,total,stable,ratio\n1,2,,0\n", "empty number");
  rejects("level,total,stable,ratio\n1,2,1\n", "expected 4 fields");
}

TEST_CASE("cycle tables render one certified cycle per level for the odometer") {
  System sys(2);
  Dynamics dyn(sys);
  std::vector<std::vector<CycleRecord>> tables;
  for (int n = 1; n <= 5; ++n) {
    tables.push_back(dyn.cycle_table(sys.parse("g"), n));
  }

  json doc = json::parse(cycles_json(tables));
  REQUIRE(doc.at("levels").size() == 5);
  for (int n = 1; n <= 5; ++n) {
    const json& entry = doc.at("levels")[n - 1];
    CHECK(entry.at("level") == n);
    REQUIRE(entry.at("cycles").size() == 1);
    const json& cycle = entry.at("cycles")[0];
    CHECK(cycle.at("length") == (std::uint64_t{1} << n));
    CHECK(cycle.at("status").at("kind") == "certified");
    CHECK(!cycle.at("status").contains("level"));
    CHECK(cycle.at("members").size() == (std::uint64_t{1} << n));
  }

  std::string csv = cycles_csv(tables);
  CHECK(csv.find("level,representative,length,status,status_level,"
                 "section_product\n") == 0);
  CHECK(csv.find("\n1,0,2,certified,,") != std::string::npos);
  CHECK(csv.find("\n5,0,32,certified,,") != std::string::npos);

  // A swapped-but-splitting word carries its split level in both renderings.
  std::vector<std::vector<CycleRecord>> split_tables = {
      dyn.cycle_table(sys.parse("a1"), 1)};
  json split = json::parse(cycles_json(split_tables));
  const json& status =
      split.at("levels")[0].at("cycles")[0].at("status");
  CHECK(status.at("kind") == "splits_at");
  CHECK(status.at("level").get<int>() > 1);
  std::string split_csv = cycles_csv(split_tables);
  CHECK(split_csv.find("splits_at") != std::string::npos);
}

TEST_CASE("descendant and block listings carry labels and verdicts") {
  System sys(2);
  Dynamics dyn(sys);
  BlockReport report = dyn.analyze_blocks(sys.parse("a1*z[3]"), 3);

  json desc = json::parse(descendants_json(sys, report));
  CHECK(desc.at("depth") == 3);
  REQUIRE(desc.at("levels").size() == 4);
  // The non-family chain squares its label at swap steps: 3, 9, 81.
  CHECK(desc.at("levels")[0][0].at("label") == "3");
  bool saw9 = false, saw81 = false;
  for (const json& entry : desc.at("levels")[1]) {
    if (entry.at("label") == "9") saw9 = true;
  }
  for (const json& entry : desc.at("levels")[2]) {
    if (entry.at("label") == "81") saw81 = true;
  }
  CHECK(saw9);
  CHECK(saw81);
  for (const json& level : desc.at("levels")) {
    for (const json& entry : level) {
      CHECK(!entry.contains("block"));
      CHECK((entry.at("family") == "yes" || entry.at("family") == "no" ||
             entry.at("family") == "unknown"));
    }
  }

  json blocks = json::parse(blocks_json(sys, report));
  CHECK(blocks.at("stable_block") == "yes");
  CHECK(blocks.at("chain_state") == "intact");
  REQUIRE(blocks.at("chain").size() >= 3);
  CHECK(blocks.at("d_signs").size() == blocks.at("chain").size());
  CHECK(blocks.at("levels")[0][0].contains("block"));

  std::string desc_csv = descendants_csv(sys, report);
  CHECK(desc_csv.find("level,index,word,family,label\n") == 0);
  CHECK(desc_csv.find(",81") != std::string::npos);
  std::string blocks_csv_text = blocks_csv(sys, report);
  CHECK(blocks_csv_text.find("level,index,word,family,label,block\n") == 0);

  // Unknown verdicts render as the distinct token, not as yes or no.
  BlockReport unresolved;
  unresolved.depth = 0;
  BlockEntry entry;
  entry.word = sys.parse("a1");
  entry.in_family.verdict = Membership::Verdict::Unknown;
  entry.is_block = Membership::Verdict::Unknown;
  unresolved.levels = {{entry}};
  unresolved.stable_block = Membership::Verdict::Unknown;
  unresolved.chain_state = BlockReport::ChainState::Indeterminate;
  std::string unresolved_csv = blocks_csv(sys, unresolved);
  CHECK(unresolved_csv.find(",unknown,") != std::string::npos);
  CHECK(unresolved_csv.find(",unknown\n") != std::string::npos);
  json unresolved_doc = json::parse(blocks_json(sys, unresolved));
  CHECK(unresolved_doc.at("stable_block") == "unknown");
  CHECK(unresolved_doc.at("chain_state") == "indeterminate");
  CHECK(!unresolved_doc.contains("first_failure"));
}

TEST_CASE("approximation results render both ways") {
  System sys(2);
  DenseApproximator approx(sys);
  Word input = sys.parse("z[17]");
  ApproxResult result = approx.approximate(input, 3);

  json doc = json::parse(approx_json(input, result, true));
  CHECK(doc.at("input") == "z[17]");
  CHECK(doc.at("level") == 3);
  CHECK(doc.at("label") == "9");
  CHECK(doc.at("agrees") == true);
  CHECK(doc.contains("finite_part"));
  CHECK(doc.contains("approximant"));

  std::string csv = approx_csv(input, result, true);
  CHECK(csv.find("level,label,finite_part,approximant,agrees\n") == 0);
  CHECK(csv.find("3,9,") != std::string::npos);
  CHECK(csv.find(",yes\n") != std::string::npos);
  std::string csv_no = approx_csv(input, result, false);
  CHECK(csv_no.find(",no\n") != std::string::npos);
}

TEST_CASE("portrait renderings expose signs and odometer powers") {
  System sys(2);
  Portrait z3 = sys.portrait(sys.parse("z[3]"), 6);
  json doc = json::parse(portrait_json(z3));
  CHECK(doc.at("depth") == 6);
  std::vector<int> signs = doc.at("signs").get<std::vector<int>>();
  REQUIRE(signs.size() == 6);
  CHECK(signs[0] == 1);
  for (std::size_t i = 1; i < signs.size(); ++i) CHECK(signs[i] == -1);
  CHECK(!doc.contains("odometer_exponent"));

  // A depth-6 portrait pins the odometer exponent as a residue mod 2^6.
  Portrait g5 = sys.portrait(sys.parse("g^5"), 6);
  json odo = json::parse(portrait_json(g5));
  CHECK(odo.at("odometer_exponent") == "5%6");

  std::string csv = portrait_csv(z3);
  CHECK(csv.find("level,sign\n1,1\n2,-1\n") == 0);
}

TEST_CASE("renderings are byte-deterministic") {
  System sys(2);
  Dynamics dyn(sys);
  SettleProfileResult profile = dyn.settle_profile(sys.parse("a1*z[3]"), 8);
  CHECK(profile_csv(profile) == profile_csv(profile));
  CHECK(profile_json(profile) == profile_json(profile));

  BlockReport report = dyn.analyze_blocks(sys.parse("a1*z[3]"), 3);
  CHECK(blocks_json(sys, report) == blocks_json(sys, report));
  CHECK(descendants_csv(sys, report) == descendants_csv(sys, report));

  std::vector<std::vector<CycleRecord>> tables = {
      dyn.cycle_table(sys.parse("g"), 3)};
  CHECK(cycles_json(tables) == cycles_json(tables));
  CHECK(cycles_csv(tables) == cycles_csv(tables));
}
