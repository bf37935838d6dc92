#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"

namespace compeval {

using json = nlohmann::json;

enum class Benchmark { ARO, SugarCrepe };

struct ImageRef {
  std::string locator;                         // filesystem path or URL
  std::string media_type = "image/png";

  bool operator==(const ImageRef&) const = default;
};

/// One image versus a positive and a hard-negative caption.
struct PairItem {
  std::string item_id;
  ImageRef image;
  std::string caption_pos;
  std::string caption_neg;
  Benchmark benchmark = Benchmark::ARO;
  std::string subset;

  bool operator==(const PairItem&) const = default;
};

/// Two images and two captions forming a minimal-contrast pair.
struct WinogroundItem {
  std::string item_id;
  ImageRef image_0;
  ImageRef image_1;
  std::string caption_0;
  std::string caption_1;

  bool operator==(const WinogroundItem&) const = default;
};

inline const std::array<std::string_view, 4>& aro_subsets() {
  static const std::array<std::string_view, 4> subsets = {
      "VG-Attribution", "VG-Relation", "COCO-Order", "Flickr30k-Order"};
  return subsets;
}

inline const std::array<std::string_view, 7>& sugarcrepe_subsets() {
  static const std::array<std::string_view, 7> subsets = {
      "add_obj", "add_att", "replace_att", "replace_obj", "replace_rel", "swap_att", "swap_obj"};
  return subsets;
}

inline bool is_known_subset(Benchmark benchmark, std::string_view subset) {
  if (benchmark == Benchmark::ARO) {
    for (auto s : aro_subsets()) {
      if (s == subset) return true;
    }
    return false;
  }
  for (auto s : sugarcrepe_subsets()) {
    if (s == subset) return true;
  }
  return false;
}

inline std::string benchmark_name(Benchmark b) {
  return b == Benchmark::ARO ? "ARO" : "SugarCrepe";
}

inline Benchmark benchmark_from_name(std::string_view name, std::size_t line_no) {
  if (name == "ARO") return Benchmark::ARO;
  if (name == "SugarCrepe") return Benchmark::SugarCrepe;
  throw EvalError(ErrorCode::UnknownBenchmark, "unknown benchmark '" + std::string(name) + "'")
      .with_line(line_no);
}

inline void check_image_resolves(const ImageRef& image, const std::string& item_id) {
  if (image.locator.empty()) {
    throw EvalError(ErrorCode::InvariantViolation, "empty image locator").with_item(item_id);
  }
  // URL locators resolve at fetch time; filesystem locators must exist now so
  // a broken manifest fails before any model call is spent.
  if (detail::is_url(image.locator)) return;
  if (!std::filesystem::exists(image.locator)) {
    throw EvalError(ErrorCode::ImageUnresolvable, "image '" + image.locator + "' does not resolve")
        .with_item(item_id);
  }
}

namespace detail_manifest {

inline std::string require_string(const json& record, const char* field, std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    throw EvalError(ErrorCode::MissingField, std::string("missing field '") + field + "'")
        .with_line(line_no)
        .with_field(field);
  }
  return it->get<std::string>();
}

inline ImageRef image_ref_from_json(const json& record, const char* field, std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw EvalError(ErrorCode::MissingField, std::string("missing field '") + field + "'")
        .with_line(line_no)
        .with_field(field);
  }
  ImageRef ref;
  if (it->is_string()) {
    ref.locator = it->get<std::string>();
    ref.media_type = detail::media_type_from_extension(ref.locator);
  } else if (it->is_object()) {
    auto loc = it->find("locator");
    if (loc == it->end() || !loc->is_string()) {
      throw EvalError(ErrorCode::MissingField, std::string("missing field '") + field + ".locator'")
          .with_line(line_no)
          .with_field(field);
    }
    ref.locator = loc->get<std::string>();
    auto mt = it->find("media_type");
    ref.media_type = (mt != it->end() && mt->is_string()) ? mt->get<std::string>()
                                                          : detail::media_type_from_extension(ref.locator);
  } else {
    throw EvalError(ErrorCode::MalformedRecord, std::string("field '") + field + "' must be a string or object")
        .with_line(line_no)
        .with_field(field);
  }
  if (ref.locator.empty()) {
    throw EvalError(ErrorCode::InvariantViolation, std::string("empty locator in '") + field + "'")
        .with_line(line_no)
        .with_field(field);
  }
  return ref;
}

/// Streams a JSONL file, calling fn(record, line_no) per non-blank line.
inline void for_each_record(const std::filesystem::path& path,
                            const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) {
    throw EvalError(ErrorCode::FileNotFound, "manifest '" + path.string() + "' not found");
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw EvalError(ErrorCode::MalformedRecord, std::string("invalid JSON: ") + e.what())
          .with_line(line_no);
    }
    if (!record.is_object()) {
      throw EvalError(ErrorCode::MalformedRecord, "record is not a JSON object").with_line(line_no);
    }
    fn(record, line_no);
  }
}

}  // namespace detail_manifest

inline json to_json(const ImageRef& ref) {
  return json{{"locator", ref.locator}, {"media_type", ref.media_type}};
}

inline json to_json(const PairItem& item) {
  return json{{"item_id", item.item_id},
              {"image", to_json(item.image)},
              {"caption_pos", item.caption_pos},
              {"caption_neg", item.caption_neg},
              {"benchmark", benchmark_name(item.benchmark)},
              {"subset", item.subset}};
}

inline json to_json(const WinogroundItem& item) {
  return json{{"item_id", item.item_id},
              {"image_0", to_json(item.image_0)},
              {"image_1", to_json(item.image_1)},
              {"caption_0", item.caption_0},
              {"caption_1", item.caption_1}};
}

inline PairItem pair_item_from_json(const json& record, std::size_t line_no) {
  using detail_manifest::image_ref_from_json;
  using detail_manifest::require_string;
  PairItem item;
  item.item_id = require_string(record, "item_id", line_no);
  item.image = image_ref_from_json(record, "image", line_no);
  item.caption_pos = require_string(record, "caption_pos", line_no);
  item.caption_neg = require_string(record, "caption_neg", line_no);
  item.benchmark = benchmark_from_name(require_string(record, "benchmark", line_no), line_no);
  item.subset = require_string(record, "subset", line_no);
  if (item.caption_pos == item.caption_neg) {
    throw EvalError(ErrorCode::InvariantViolation, "caption_pos equals caption_neg")
        .with_line(line_no)
        .with_item(item.item_id);
  }
  if (!is_known_subset(item.benchmark, item.subset)) {
    throw EvalError(ErrorCode::UnknownSubset,
                    "subset '" + item.subset + "' not in " + benchmark_name(item.benchmark))
        .with_line(line_no)
        .with_field(item.subset);
  }
  return item;
}

inline WinogroundItem winoground_item_from_json(const json& record, std::size_t line_no) {
  using detail_manifest::image_ref_from_json;
  using detail_manifest::require_string;
  WinogroundItem item;
  item.item_id = require_string(record, "item_id", line_no);
  item.image_0 = image_ref_from_json(record, "image_0", line_no);
  item.image_1 = image_ref_from_json(record, "image_1", line_no);
  item.caption_0 = require_string(record, "caption_0", line_no);
  item.caption_1 = require_string(record, "caption_1", line_no);
  if (item.caption_0 == item.caption_1) {
    throw EvalError(ErrorCode::InvariantViolation, "caption_0 equals caption_1")
        .with_line(line_no)
        .with_item(item.item_id);
  }
  return item;
}

/// Items come back in file order; every PairItem invariant is enforced and
/// every referenced image must resolve before the sequence is returned.
inline std::vector<PairItem> load_pairwise_benchmark(const std::filesystem::path& manifest_path) {
  std::vector<PairItem> items;
  std::unordered_set<std::string> seen_ids;
  detail_manifest::for_each_record(manifest_path, [&](const json& record, std::size_t line_no) {
    PairItem item = pair_item_from_json(record, line_no);
    if (!seen_ids.insert(item.item_id).second) {
      throw EvalError(ErrorCode::DuplicateId, "duplicate item_id '" + item.item_id + "'")
          .with_line(line_no)
          .with_item(item.item_id);
    }
    check_image_resolves(item.image, item.item_id);
    items.push_back(std::move(item));
  });
  return items;
}

inline std::vector<WinogroundItem> load_winoground(const std::filesystem::path& manifest_path) {
  std::vector<WinogroundItem> items;
  std::unordered_set<std::string> seen_ids;
  detail_manifest::for_each_record(manifest_path, [&](const json& record, std::size_t line_no) {
    WinogroundItem item = winoground_item_from_json(record, line_no);
    if (!seen_ids.insert(item.item_id).second) {
      throw EvalError(ErrorCode::DuplicateId, "duplicate item_id '" + item.item_id + "'")
          .with_line(line_no)
          .with_item(item.item_id);
    }
    check_image_resolves(item.image_0, item.item_id);
    check_image_resolves(item.image_1, item.item_id);
    items.push_back(std::move(item));
  });
  return items;
}

inline void write_pairwise_manifest(const std::filesystem::path& path, const std::vector<PairItem>& items) {
  std::string out;
  for (const PairItem& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  detail::atomic_write_file(path, out);
}

inline void write_winoground_manifest(const std::filesystem::path& path,
                                      const std::vector<WinogroundItem>& items) {
  std::string out;
  for (const WinogroundItem& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  detail::atomic_write_file(path, out);
}

enum class ManifestKind { Auto, Pairwise, Winoground, Bank };

struct ValidationIssue {
  ErrorCode code = ErrorCode::MalformedRecord;
  std::size_t line_no = 0;  // 0 when the issue is file-level
  std::string message;
};

struct ValidationReport {
  std::string manifest_path;
  std::string kind = "unknown";
  std::map<std::string, std::size_t> counts;  // per-subset for pairwise, single bucket otherwise
  std::vector<ValidationIssue> errors;

  bool ok() const { return errors.empty(); }

  json to_json() const {
    json issues = json::array();
    for (const ValidationIssue& issue : errors) {
      issues.push_back({{"code", error_code_name(issue.code)},
                        {"line", issue.line_no},
                        {"message", issue.message}});
    }
    return json{{"manifest", manifest_path}, {"kind", kind}, {"counts", counts}, {"errors", issues}};
  }
};

namespace detail_manifest {

inline ManifestKind sniff_kind(const json& record) {
  if (record.contains("image_0")) return ManifestKind::Winoground;
  if (record.contains("caption_correct")) return ManifestKind::Bank;
  return ManifestKind::Pairwise;
}

}  // namespace detail_manifest

/// Never throws: all row-level failures become report entries, and counts
/// cover only the rows that parsed clean.
inline ValidationReport validate_manifest(const std::filesystem::path& manifest_path,
                                          ManifestKind kind = ManifestKind::Auto) {
  ValidationReport report;
  report.manifest_path = manifest_path.string();
  std::unordered_set<std::string> seen_ids;
  auto record_error = [&](const EvalError& e, std::size_t fallback_line) {
    report.errors.push_back(
        ValidationIssue{e.code(), e.line_no().value_or(fallback_line), e.what()});
  };

  std::ifstream in(manifest_path);
  if (!in) {
    record_error(EvalError(ErrorCode::FileNotFound, "manifest '" + manifest_path.string() + "' not found"), 0);
    return report;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    try {
      json record;
      try {
        record = json::parse(line);
      } catch (const json::exception& e) {
        throw EvalError(ErrorCode::MalformedRecord, std::string("invalid JSON: ") + e.what())
            .with_line(line_no);
      }
      if (!record.is_object()) {
        throw EvalError(ErrorCode::MalformedRecord, "record is not a JSON object").with_line(line_no);
      }
      if (kind == ManifestKind::Auto) kind = detail_manifest::sniff_kind(record);
      switch (kind) {
        case ManifestKind::Winoground: {
          report.kind = "winoground";
          WinogroundItem item = winoground_item_from_json(record, line_no);
          if (!seen_ids.insert(item.item_id).second) {
            throw EvalError(ErrorCode::DuplicateId, "duplicate item_id '" + item.item_id + "'")
                .with_line(line_no);
          }
          check_image_resolves(item.image_0, item.item_id);
          check_image_resolves(item.image_1, item.item_id);
          ++report.counts["winoground"];
          break;
        }
        case ManifestKind::Bank: {
          report.kind = "bank";
          const std::string correct = detail_manifest::require_string(record, "caption_correct", line_no);
          const std::string wrong = detail_manifest::require_string(record, "caption_wrong", line_no);
          ImageRef image = detail_manifest::image_ref_from_json(record, "image", line_no);
          if (correct == wrong) {
            throw EvalError(ErrorCode::InvariantViolation, "caption_correct equals caption_wrong")
                .with_line(line_no);
          }
          check_image_resolves(image, "bank row " + std::to_string(line_no));
          ++report.counts["bank"];
          break;
        }
        default: {
          report.kind = "pairwise";
          PairItem item = pair_item_from_json(record, line_no);
          if (!seen_ids.insert(item.item_id).second) {
            throw EvalError(ErrorCode::DuplicateId, "duplicate item_id '" + item.item_id + "'")
                .with_line(line_no);
          }
          check_image_resolves(item.image, item.item_id);
          ++report.counts[item.subset];
          break;
        }
      }
    } catch (const EvalError& e) {
      record_error(e, line_no);
    }
  }
  return report;
}

}  // namespace compeval
