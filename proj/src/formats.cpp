#include "formats.hpp"

#include <cstdint>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "errors.hpp"

namespace settled {
namespace {

using OrderedJson = nlohmann::ordered_json;

std::string finish(const OrderedJson& doc) { return doc.dump(2) + "\n"; }

std::string ratio_fraction(std::uint64_t stable, std::uint64_t total) {
  if (stable == 0) return "0";
  if (stable == total) return "1";
  std::uint64_t g = std::gcd(stable, total);
  return std::to_string(stable / g) + "/" + std::to_string(total / g);
}

OrderedJson status_json(const StabilityStatus& status) {
  OrderedJson out;
  switch (status.kind) {
    case StabilityStatus::Kind::Certified:
      out["kind"] = "certified";
      break;
    case StabilityStatus::Kind::StableToDepth:
      out["kind"] = "to_depth";
      out["level"] = status.level;
      break;
    case StabilityStatus::Kind::Splits:
      out["kind"] = "splits_at";
      out["level"] = status.level;
      break;
  }
  return out;
}

std::string status_csv_kind(const StabilityStatus& status) {
  switch (status.kind) {
    case StabilityStatus::Kind::Certified: return "certified";
    case StabilityStatus::Kind::StableToDepth: return "to_depth";
    case StabilityStatus::Kind::Splits: return "splits_at";
  }
  return "";
}

std::string chain_state_name(BlockReport::ChainState state) {
  switch (state) {
    case BlockReport::ChainState::Intact: return "intact";
    case BlockReport::ChainState::Empty: return "empty";
    case BlockReport::ChainState::Ambiguous: return "ambiguous";
    case BlockReport::ChainState::Indeterminate: return "indeterminate";
  }
  return "";
}

OrderedJson entry_json(const System& sys, const BlockEntry& entry,
                       bool with_block) {
  OrderedJson out;
  out["word"] = entry.word.str();
  out["family"] = verdict_name(entry.in_family.verdict);
  out["label"] = sys.coset_label(entry.word).str();
  if (with_block) {
    out["block"] = verdict_name(entry.is_block);
    if (!entry.block_reason.empty()) out["reason"] = entry.block_reason;
  }
  return out;
}

OrderedJson report_levels_json(const System& sys, const BlockReport& report,
                               bool with_block) {
  OrderedJson levels = OrderedJson::array();
  for (const std::vector<BlockEntry>& level : report.levels) {
    OrderedJson row = OrderedJson::array();
    for (const BlockEntry& entry : level) {
      row.push_back(entry_json(sys, entry, with_block));
    }
    levels.push_back(std::move(row));
  }
  return levels;
}

std::string report_levels_csv(const System& sys, const BlockReport& report,
                              bool with_block) {
  std::ostringstream out;
  out << "level,index,word,family,label";
  if (with_block) out << ",block";
  out << "\n";
  for (std::size_t level = 0; level < report.levels.size(); ++level) {
    const std::vector<BlockEntry>& row = report.levels[level];
    for (std::size_t index = 0; index < row.size(); ++index) {
      const BlockEntry& entry = row[index];
      out << level << "," << index << "," << entry.word.str() << ","
          << verdict_name(entry.in_family.verdict) << ","
          << sys.coset_label(entry.word).str();
      if (with_block) out << "," << verdict_name(entry.is_block);
      out << "\n";
    }
  }
  return out.str();
}

// Splits CSV text into lines, requiring a final newline on the last row.
std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  fields.push_back(current);
  return fields;
}

std::uint64_t parse_count(const std::string& field, const std::string& where) {
  if (field.empty()) throw Error::parse(where + ": empty number");
  for (char ch : field) {
    if (ch < '0' || ch > '9') {
      throw Error::parse(where + ": '" + field + "' is not a whole number");
    }
  }
  try {
    return std::stoull(field);
  } catch (const std::exception&) {
    throw Error::parse(where + ": '" + field + "' is out of range");
  }
}

}  // namespace

std::string verdict_name(Membership::Verdict verdict) {
  switch (verdict) {
    case Membership::Verdict::Yes: return "yes";
    case Membership::Verdict::No: return "no";
    case Membership::Verdict::Unknown: return "unknown";
  }
  return "";
}

std::string profile_csv(const SettleProfileResult& profile) {
  std::ostringstream out;
  out << "level,total,stable,ratio\n";
  for (const SettleRow& row : profile.rows) {
    out << row.level << "," << row.total << "," << row.stable << ","
        << ratio_fraction(row.stable, row.total) << "\n";
  }
  return out.str();
}

std::string profile_json(const SettleProfileResult& profile) {
  OrderedJson doc;
  doc["root_stable"] = profile.s0;
  OrderedJson rows = OrderedJson::array();
  for (const SettleRow& row : profile.rows) {
    OrderedJson entry;
    entry["level"] = row.level;
    entry["total"] = row.total;
    entry["stable"] = row.stable;
    entry["ratio"] = ratio_fraction(row.stable, row.total);
    rows.push_back(std::move(entry));
  }
  doc["rows"] = std::move(rows);
  doc["fully_stable_from"] = profile.fully_stable_from;
  return finish(doc);
}

std::vector<SettleRow> parse_profile_csv(const std::string& text) {
  std::vector<std::string> lines = csv_lines(text);
  if (lines.empty() || lines[0] != "level,total,stable,ratio") {
    throw Error::parse("profile CSV must start with 'level,total,stable,ratio'");
  }
  std::vector<SettleRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = "row " + std::to_string(i);
    if (lines[i].empty()) throw Error::parse(where + ": empty row");
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != 4) {
      throw Error::parse(where + ": expected 4 fields, found " +
                         std::to_string(fields.size()));
    }
    SettleRow row;
    row.level = static_cast<int>(parse_count(fields[0], where));
    row.total = parse_count(fields[1], where);
    row.stable = parse_count(fields[2], where);
    if (row.level < 1 || row.level != static_cast<int>(i)) {
      throw Error::parse(where + ": levels must run 1,2,... in order");
    }
    if (row.level > Dynamics::kMaxLevel ||
        row.total != (std::uint64_t{1} << row.level)) {
      throw Error::parse(where + ": total must equal 2^level");
    }
    if (row.stable > row.total) {
      throw Error::parse(where + ": stable count exceeds the level size");
    }
    const std::string& ratio = fields[3];
    std::size_t slash = ratio.find('/');
    std::uint64_t num, den;
    if (slash == std::string::npos) {
      num = parse_count(ratio, where);
      den = 1;
      if (num > 1) throw Error::parse(where + ": ratio must stay within [0, 1]");
    } else {
      num = parse_count(ratio.substr(0, slash), where);
      den = parse_count(ratio.substr(slash + 1), where);
      if (den == 0) throw Error::parse(where + ": ratio denominator is zero");
      if (std::gcd(num, den) != 1) {
        throw Error::parse(where + ": ratio must be in lowest terms");
      }
    }
    // Cross-multiplied equality keeps the check exact; operands fit well
    // within 64 bits for every representable level.
    if (num * row.total != den * row.stable) {
      throw Error::parse(where + ": ratio " + ratio +
                         " does not equal stable/total");
    }
    rows.push_back(row);
  }
  return rows;
}

std::string portrait_json(const Portrait& portrait) {
  OrderedJson doc;
  doc["depth"] = portrait.depth();
  doc["preorder"] = portrait.dump_preorder();
  doc["signs"] = portrait.sign_table();
  doc["order"] = portrait.order();
  if (std::optional<Dyadic> e = portrait.odometer_exponent()) {
    doc["odometer_exponent"] = e->str();
  }
  return finish(doc);
}

std::string portrait_csv(const Portrait& portrait) {
  std::ostringstream out;
  out << "level,sign\n";
  std::vector<int> signs = portrait.sign_table();
  for (std::size_t i = 0; i < signs.size(); ++i) {
    out << (i + 1) << "," << signs[i] << "\n";
  }
  return out.str();
}

std::string cycles_json(const std::vector<std::vector<CycleRecord>>& tables) {
  OrderedJson levels = OrderedJson::array();
  for (const std::vector<CycleRecord>& table : tables) {
    if (table.empty()) continue;
    OrderedJson entry;
    entry["level"] = table[0].level;
    OrderedJson cycles = OrderedJson::array();
    for (const CycleRecord& record : table) {
      OrderedJson row;
      row["representative"] = record.representative;
      row["length"] = record.length;
      row["members"] = record.members;
      row["section_product"] = record.section_product.str();
      row["status"] = status_json(record.status);
      cycles.push_back(std::move(row));
    }
    entry["cycles"] = std::move(cycles);
    levels.push_back(std::move(entry));
  }
  OrderedJson doc;
  doc["levels"] = std::move(levels);
  return finish(doc);
}

std::string cycles_csv(const std::vector<std::vector<CycleRecord>>& tables) {
  std::ostringstream out;
  out << "level,representative,length,status,status_level,section_product\n";
  for (const std::vector<CycleRecord>& table : tables) {
    for (const CycleRecord& record : table) {
      out << record.level << "," << record.representative << ","
          << record.length << "," << status_csv_kind(record.status) << ",";
      if (record.status.kind != StabilityStatus::Kind::Certified) {
        out << record.status.level;
      }
      out << "," << record.section_product.str() << "\n";
    }
  }
  return out.str();
}

std::string descendants_json(const System& sys, const BlockReport& report) {
  OrderedJson doc;
  doc["depth"] = report.depth;
  doc["levels"] = report_levels_json(sys, report, false);
  return finish(doc);
}

std::string descendants_csv(const System& sys, const BlockReport& report) {
  return report_levels_csv(sys, report, false);
}

std::string blocks_json(const System& sys, const BlockReport& report) {
  OrderedJson doc;
  doc["depth"] = report.depth;
  doc["stable_block"] = verdict_name(report.stable_block);
  if (report.first_failure >= 0) doc["first_failure"] = report.first_failure;
  doc["chain_state"] = chain_state_name(report.chain_state);
  if (report.chain_event_level >= 0) {
    doc["chain_event_level"] = report.chain_event_level;
  }
  OrderedJson chain = OrderedJson::array();
  for (const Word& w : report.chain) chain.push_back(w.str());
  doc["chain"] = std::move(chain);
  doc["d_signs"] = report.d_signs;
  doc["levels"] = report_levels_json(sys, report, true);
  return finish(doc);
}

std::string blocks_csv(const System& sys, const BlockReport& report) {
  return report_levels_csv(sys, report, true);
}

std::string approx_json(const Word& input, const ApproxResult& result,
                        bool agrees) {
  OrderedJson doc;
  doc["input"] = input.str();
  doc["level"] = result.level;
  doc["approximant"] = result.alpha.str();
  doc["finite_part"] = result.g0.str();
  doc["label"] = result.k0.str();
  doc["agrees"] = agrees;
  return finish(doc);
}

std::string approx_csv(const Word& input, const ApproxResult& result,
                       bool agrees) {
  std::ostringstream out;
  out << "level,label,finite_part,approximant,agrees\n";
  out << result.level << "," << result.k0.str() << "," << result.g0.str()
      << "," << result.alpha.str() << "," << (agrees ? "yes" : "no") << "\n";
  return out.str();
}

}  // namespace settled
