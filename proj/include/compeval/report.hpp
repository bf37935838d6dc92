#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "compeval/dataset.hpp"
#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"

namespace compeval {

using ordered_json = nlohmann::ordered_json;

/// Subscore column order, matching the benchmark tables: Winoground
/// text/image/group, SugarCrepe, ARO.
inline const std::array<std::string_view, 14>& subscore_codes() {
  static const std::array<std::string_view, 14> codes = {
      "T", "I", "G", "AO", "AA", "RA", "RO", "RR", "SA", "SO", "C", "F", "VG-A", "VG-R"};
  return codes;
}

inline std::string subset_code(Benchmark benchmark, std::string_view subset) {
  if (benchmark == Benchmark::SugarCrepe) {
    if (subset == "add_obj") return "AO";
    if (subset == "add_att") return "AA";
    if (subset == "replace_att") return "RA";
    if (subset == "replace_obj") return "RO";
    if (subset == "replace_rel") return "RR";
    if (subset == "swap_att") return "SA";
    if (subset == "swap_obj") return "SO";
  } else {
    if (subset == "COCO-Order") return "C";
    if (subset == "Flickr30k-Order") return "F";
    if (subset == "VG-Attribution") return "VG-A";
    if (subset == "VG-Relation") return "VG-R";
  }
  throw EvalError(ErrorCode::UnknownSubset, "no report code for subset '" + std::string(subset) + "'");
}

struct SubsetStats {
  std::int64_t count = 0;
  std::int64_t correct = 0;
  std::int64_t unparseable = 0;

  std::int64_t incorrect() const { return count - correct - unparseable; }
  double accuracy() const { return count > 0 ? static_cast<double>(correct) / count : 0.0; }

  bool operator==(const SubsetStats&) const = default;
};

struct WinogroundStats {
  std::int64_t count = 0;
  std::int64_t text_correct = 0;
  std::int64_t image_correct = 0;
  std::int64_t group_correct = 0;
  std::int64_t unparseable_probes = 0;

  double text_rate() const { return count > 0 ? static_cast<double>(text_correct) / count : 0.0; }
  double image_rate() const { return count > 0 ? static_cast<double>(image_correct) / count : 0.0; }
  double group_rate() const { return count > 0 ? static_cast<double>(group_correct) / count : 0.0; }

  bool operator==(const WinogroundStats&) const = default;
};

struct ModelReportRow {
  std::string model;
  std::optional<WinogroundStats> winoground;
  std::map<std::string, SubsetStats> subsets;  // keyed by report code

  /// Unweighted mean over the subscores this row actually has, in [0,1].
  std::optional<double> average() const {
    double sum = 0.0;
    std::size_t n = 0;
    if (winoground) {
      sum += winoground->text_rate() + winoground->image_rate() + winoground->group_rate();
      n += 3;
    }
    for (const auto& [code, stats] : subsets) {
      sum += stats.accuracy();
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }

  std::optional<double> rate_for(std::string_view code) const {
    if (code == "T") return winoground ? std::optional(winoground->text_rate()) : std::nullopt;
    if (code == "I") return winoground ? std::optional(winoground->image_rate()) : std::nullopt;
    if (code == "G") return winoground ? std::optional(winoground->group_rate()) : std::nullopt;
    auto it = subsets.find(std::string(code));
    if (it == subsets.end()) return std::nullopt;
    return it->second.accuracy();
  }

  bool operator==(const ModelReportRow&) const = default;
};

struct ReportMetadata {
  std::string config_hash;
  std::string mode;
  std::string score_kind;
  std::uint64_t label_seed = 0;
  int shots = 0;
  std::string bank;
  std::string winoground_scoring;
  std::string yes_token = "yes";
  double logit_floor = -20.0;
  std::string token_normalization = "strip-one-leading-space";
  std::vector<std::string> notes;

  bool operator==(const ReportMetadata&) const = default;
};

struct BenchmarkReport {
  ReportMetadata metadata;
  std::vector<ModelReportRow> rows;

  bool operator==(const BenchmarkReport&) const = default;
};

inline ordered_json to_ordered_json(const BenchmarkReport& report) {
  ordered_json meta;
  meta["config_hash"] = report.metadata.config_hash;
  meta["mode"] = report.metadata.mode;
  meta["score_kind"] = report.metadata.score_kind;
  meta["label_seed"] = report.metadata.label_seed;
  meta["shots"] = report.metadata.shots;
  meta["bank"] = report.metadata.bank;
  meta["winoground_scoring"] = report.metadata.winoground_scoring;
  meta["yes_token"] = report.metadata.yes_token;
  meta["logit_floor"] = report.metadata.logit_floor;
  meta["token_normalization"] = report.metadata.token_normalization;
  meta["notes"] = report.metadata.notes;

  ordered_json rows = ordered_json::array();
  for (const ModelReportRow& row : report.rows) {
    ordered_json j;
    j["model"] = row.model;
    if (row.winoground) {
      ordered_json w;
      w["count"] = row.winoground->count;
      w["text_correct"] = row.winoground->text_correct;
      w["image_correct"] = row.winoground->image_correct;
      w["group_correct"] = row.winoground->group_correct;
      w["unparseable_probes"] = row.winoground->unparseable_probes;
      w["text"] = row.winoground->text_rate();
      w["image"] = row.winoground->image_rate();
      w["group"] = row.winoground->group_rate();
      j["winoground"] = std::move(w);
    } else {
      j["winoground"] = nullptr;
    }
    ordered_json subsets;
    for (std::string_view code : subscore_codes()) {
      auto it = row.subsets.find(std::string(code));
      if (it == row.subsets.end()) continue;
      ordered_json s;
      s["count"] = it->second.count;
      s["correct"] = it->second.correct;
      s["incorrect"] = it->second.incorrect();
      s["unparseable"] = it->second.unparseable;
      s["accuracy"] = it->second.accuracy();
      subsets[std::string(code)] = std::move(s);
    }
    j["subsets"] = std::move(subsets);
    if (auto avg = row.average()) {
      j["avg"] = *avg;
    } else {
      j["avg"] = nullptr;
    }
    rows.push_back(std::move(j));
  }
  ordered_json out;
  out["metadata"] = std::move(meta);
  out["rows"] = std::move(rows);
  return out;
}

inline BenchmarkReport report_from_json(const nlohmann::json& j) {
  BenchmarkReport report;
  const auto& meta = j.at("metadata");
  report.metadata.config_hash = meta.value("config_hash", "");
  report.metadata.mode = meta.value("mode", "");
  report.metadata.score_kind = meta.value("score_kind", "");
  report.metadata.label_seed = meta.value("label_seed", std::uint64_t{0});
  report.metadata.shots = meta.value("shots", 0);
  report.metadata.bank = meta.value("bank", "");
  report.metadata.winoground_scoring = meta.value("winoground_scoring", "");
  report.metadata.yes_token = meta.value("yes_token", "yes");
  report.metadata.logit_floor = meta.value("logit_floor", -20.0);
  report.metadata.token_normalization = meta.value("token_normalization", "strip-one-leading-space");
  if (meta.contains("notes")) {
    report.metadata.notes = meta.at("notes").get<std::vector<std::string>>();
  }
  for (const auto& row_json : j.at("rows")) {
    ModelReportRow row;
    row.model = row_json.at("model").get<std::string>();
    if (row_json.contains("winoground") && !row_json.at("winoground").is_null()) {
      const auto& w = row_json.at("winoground");
      WinogroundStats stats;
      stats.count = w.at("count").get<std::int64_t>();
      stats.text_correct = w.at("text_correct").get<std::int64_t>();
      stats.image_correct = w.at("image_correct").get<std::int64_t>();
      stats.group_correct = w.at("group_correct").get<std::int64_t>();
      stats.unparseable_probes = w.value("unparseable_probes", std::int64_t{0});
      row.winoground = stats;
    }
    if (row_json.contains("subsets")) {
      for (const auto& [code, s] : row_json.at("subsets").items()) {
        SubsetStats stats;
        stats.count = s.at("count").get<std::int64_t>();
        stats.correct = s.at("correct").get<std::int64_t>();
        stats.unparseable = s.value("unparseable", std::int64_t{0});
        row.subsets[code] = stats;
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline BenchmarkReport load_report_json(const std::filesystem::path& path) {
  return report_from_json(nlohmann::json::parse(detail::read_file(path)));
}

namespace detail_report {

inline std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", rate * 100.0);
  return buf;
}

inline std::string csv_escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

// notes travel in one CSV field, unit-separator delimited
inline std::string join_notes(const std::vector<std::string>& notes) {
  std::string out;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (i > 0) out += '\x1f';
    out += notes[i];
  }
  return out;
}

inline std::vector<std::string> split_notes(const std::string& joined) {
  if (joined.empty()) return {};
  std::vector<std::string> notes;
  std::string cur;
  for (char c : joined) {
    if (c == '\x1f') {
      notes.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  notes.push_back(std::move(cur));
  return notes;
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail_report

/// Markdown table in the benchmark-table layout: one row per model, the 14
/// subscores as percentages, unweighted average last. Absent subscores render
/// as "-".
inline std::string report_to_markdown(const BenchmarkReport& report) {
  std::string out = "| Model |";
  for (std::string_view code : subscore_codes()) {
    out += " ";
    out += code;
    out += " |";
  }
  out += " Avg. |\n|---|";
  for (std::size_t i = 0; i < subscore_codes().size() + 1; ++i) out += "---|";
  out += "\n";
  for (const ModelReportRow& row : report.rows) {
    out += "| " + row.model + " |";
    for (std::string_view code : subscore_codes()) {
      const auto rate = row.rate_for(code);
      out += " " + (rate ? detail_report::percent(*rate) : std::string("-")) + " |";
    }
    const auto avg = row.average();
    out += " " + (avg ? detail_report::percent(*avg) : std::string("-")) + " |\n";
  }
  return out;
}

inline constexpr const char* kCsvHeader =
    "model,metric,count,correct,incorrect,unparseable,rate,config_hash,mode,score_kind,"
    "label_seed,shots,bank,winoground_scoring,yes_token,logit_floor,token_normalization,notes";

/// Long-format CSV: one line per (model, subscore), full metadata repeated on
/// every line. Rates are emitted in shortest round-trip form, so a load
/// preserves them bit-exact.
inline std::string report_to_csv(const BenchmarkReport& report) {
  using detail_report::csv_escape;
  const ReportMetadata& m = report.metadata;
  const std::string meta_tail = csv_escape(m.config_hash) + "," + csv_escape(m.mode) + "," +
                                csv_escape(m.score_kind) + "," + std::to_string(m.label_seed) +
                                "," + std::to_string(m.shots) + "," + csv_escape(m.bank) + "," +
                                csv_escape(m.winoground_scoring) + "," + csv_escape(m.yes_token) +
                                "," + detail::format_double(m.logit_floor) + "," +
                                csv_escape(m.token_normalization) + "," +
                                csv_escape(detail_report::join_notes(m.notes));
  std::string out = std::string(kCsvHeader) + "\n";
  for (const ModelReportRow& row : report.rows) {
    auto emit = [&](std::string_view metric, std::int64_t count, std::int64_t correct,
                    std::int64_t incorrect, std::int64_t unparseable, double rate) {
      out += csv_escape(row.model);
      out += ",";
      out += metric;
      out += "," + std::to_string(count) + "," + std::to_string(correct) + "," +
             std::to_string(incorrect) + "," + std::to_string(unparseable) + "," +
             detail::format_double(rate) + "," + meta_tail + "\n";
    };
    if (row.winoground) {
      const WinogroundStats& w = *row.winoground;
      emit("T", w.count, w.text_correct, w.count - w.text_correct, w.unparseable_probes,
           w.text_rate());
      emit("I", w.count, w.image_correct, w.count - w.image_correct, w.unparseable_probes,
           w.image_rate());
      emit("G", w.count, w.group_correct, w.count - w.group_correct, w.unparseable_probes,
           w.group_rate());
    }
    for (std::string_view code : subscore_codes()) {
      auto it = row.subsets.find(std::string(code));
      if (it == row.subsets.end()) continue;
      const SubsetStats& s = it->second;
      emit(code, s.count, s.correct, s.incorrect(), s.unparseable, s.accuracy());
    }
  }
  return out;
}

inline BenchmarkReport report_from_csv(const std::string& csv_text) {
  BenchmarkReport report;
  // quote-aware record split: newlines inside quoted fields stay in the record
  std::vector<std::string> lines;
  {
    std::string cur;
    bool in_quotes = false;
    for (char c : csv_text) {
      if (c == '"') in_quotes = !in_quotes;
      if (c == '\n' && !in_quotes) {
        lines.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
  }
  if (lines.empty() || lines[0] != kCsvHeader) {
    throw EvalError(ErrorCode::MalformedRecord, "unrecognized report CSV header");
  }
  bool meta_set = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::is_blank(lines[i])) continue;
    const auto fields = detail_report::csv_split(lines[i]);
    if (fields.size() != 18) {
      throw EvalError(ErrorCode::MalformedRecord, "report CSV row has wrong arity")
          .with_line(i + 1);
    }
    const std::string& model = fields[0];
    const std::string& metric = fields[1];
    const auto count = static_cast<std::int64_t>(std::stoll(fields[2]));
    const auto correct = static_cast<std::int64_t>(std::stoll(fields[3]));
    const auto unparseable = static_cast<std::int64_t>(std::stoll(fields[5]));
    if (!meta_set) {
      report.metadata.config_hash = fields[7];
      report.metadata.mode = fields[8];
      report.metadata.score_kind = fields[9];
      report.metadata.label_seed = std::stoull(fields[10]);
      report.metadata.shots = std::stoi(fields[11]);
      report.metadata.bank = fields[12];
      report.metadata.winoground_scoring = fields[13];
      report.metadata.yes_token = fields[14];
      report.metadata.logit_floor = detail::parse_double(fields[15]);
      report.metadata.token_normalization = fields[16];
      report.metadata.notes = detail_report::split_notes(fields[17]);
      meta_set = true;
    }
    if (report.rows.empty() || report.rows.back().model != model) {
      report.rows.push_back(ModelReportRow{model, std::nullopt, {}});
    }
    ModelReportRow& row = report.rows.back();
    if (metric == "T" || metric == "I" || metric == "G") {
      if (!row.winoground) row.winoground = WinogroundStats{};
      row.winoground->count = count;
      row.winoground->unparseable_probes = unparseable;
      if (metric == "T") row.winoground->text_correct = correct;
      if (metric == "I") row.winoground->image_correct = correct;
      if (metric == "G") row.winoground->group_correct = correct;
    } else {
      row.subsets[metric] = SubsetStats{count, correct, unparseable};
    }
  }
  return report;
}

enum class ReportFormat { Json, Csv, MarkdownTable };

inline ReportFormat report_format_from_name(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "md" || name == "markdown") return ReportFormat::MarkdownTable;
  throw EvalError(ErrorCode::InvalidConfig, "unknown report format '" + std::string(name) + "'");
}

inline std::string render_report(const BenchmarkReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return to_ordered_json(report).dump(2) + "\n";
    case ReportFormat::Csv: return report_to_csv(report);
    case ReportFormat::MarkdownTable: return report_to_markdown(report);
  }
  throw EvalError(ErrorCode::InvalidConfig, "unknown report format");
}

inline void export_report(const BenchmarkReport& report, ReportFormat format,
                          const std::filesystem::path& path) {
  detail::atomic_write_file(path, render_report(report, format));
}

}  // namespace compeval
