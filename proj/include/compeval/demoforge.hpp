#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "compeval/dataset.hpp"
#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"

namespace compeval {

enum class DemoSource { Synthetic, Real };

inline std::string demo_source_name(DemoSource s) {
  return s == DemoSource::Synthetic ? "synthetic" : "real";
}

/// One recorded service call: enough to replay the exact request later.
struct ServiceCallRecord {
  std::string kind;    // "positive_caption" | "image" | "negative_caption"
  std::string model;
  std::string prompt;
  std::string timestamp;

  bool operator==(const ServiceCallRecord&) const = default;
};

struct Demonstration {
  ImageRef image;
  std::string caption_correct;
  std::string caption_wrong;
  DemoSource source = DemoSource::Synthetic;
  std::vector<std::string> objects;            // empty for Real demos
  std::vector<ServiceCallRecord> provenance;

  bool operator==(const Demonstration&) const = default;
};

struct DemoBank {
  std::string bank_id;
  std::vector<Demonstration> demos;
  std::uint64_t seed = 0;

  bool operator==(const DemoBank&) const = default;
};

class TextGenClient {
 public:
  virtual ~TextGenClient() = default;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct GeneratedImage {
  std::string bytes;
};

class ImageGenClient {
 public:
  virtual ~ImageGenClient() = default;
  virtual std::string model_id() const = 0;
  virtual GeneratedImage generate(const std::string& prompt) = 0;
};

struct ForgeOptions {
  int max_attempts = 3;              // per quality-gated service call
  std::size_t min_object_mentions = 0;  // 0 -> objects.size() - 1
  std::size_t concurrency = 1;
  std::function<std::string()> clock;   // ISO-8601 stamps; injectable for reproducible banks

  std::string now() const {
    if (clock) return clock();
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }
};

inline std::string positive_caption_prompt(const std::vector<std::string>& objects) {
  std::string prompt = "Generate a caption for an image which is made of " +
                       std::to_string(objects.size()) + " objects: ";
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (i > 0) prompt += ", ";
    prompt += objects[i];
  }
  prompt += ". Can you combine them into a compositionally aware caption?";
  return prompt;
}

inline std::string negative_caption_prompt(const std::string& caption_correct) {
  return "Generate counter caption to this one, with the same objects in a different "
         "position/attribute: '" +
         caption_correct + "'.";
}

namespace detail_forge {

inline std::size_t count_object_mentions(const std::string& caption,
                                         const std::vector<std::string>& objects) {
  const std::string haystack = detail::to_lower(caption);
  std::size_t mentions = 0;
  for (const std::string& object : objects) {
    if (haystack.find(detail::to_lower(object)) != std::string::npos) ++mentions;
  }
  return mentions;
}

}  // namespace detail_forge

/// Asks the text service for a caption covering the object list. Captions that
/// fail the mention gate are retried up to the attempt budget; a silent
/// off-topic caption would poison every downstream demonstration.
inline std::string gen_positive_caption(const std::vector<std::string>& objects,
                                        TextGenClient& textgen, const ForgeOptions& opts = {},
                                        std::vector<ServiceCallRecord>* provenance = nullptr) {
  if (objects.empty()) {
    throw EvalError(ErrorCode::InvalidConfig, "object list is empty");
  }
  for (const std::string& object : objects) {
    if (detail::trim(object).empty()) {
      throw EvalError(ErrorCode::InvalidConfig, "object names must be non-empty");
    }
  }
  const std::size_t required =
      opts.min_object_mentions > 0 ? opts.min_object_mentions : objects.size() - 1;
  const std::string prompt = positive_caption_prompt(objects);
  std::string last_caption;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    if (provenance) {
      provenance->push_back({"positive_caption", textgen.model_id(), prompt, opts.now()});
    }
    last_caption = textgen.complete(prompt);
    if (detail_forge::count_object_mentions(last_caption, objects) >= required) {
      return last_caption;
    }
  }
  throw EvalError(ErrorCode::RetryableQuality,
                  "caption '" + last_caption + "' mentions fewer than " + std::to_string(required) +
                      " of " + std::to_string(objects.size()) + " objects after " +
                      std::to_string(opts.max_attempts) + " attempts");
}

/// Feeds the caption to the image service and persists the result under
/// asset_dir/<asset_stem>.<ext>. The extension follows the sniffed format.
inline ImageRef gen_image(const std::string& caption, ImageGenClient& imagegen,
                          const std::filesystem::path& asset_dir, const std::string& asset_stem,
                          const ForgeOptions& opts = {},
                          std::vector<ServiceCallRecord>* provenance = nullptr) {
  if (caption.empty()) {
    throw EvalError(ErrorCode::InvalidConfig, "image prompt caption is empty");
  }
  if (provenance) {
    provenance->push_back({"image", imagegen.model_id(), caption, opts.now()});
  }
  const GeneratedImage generated = imagegen.generate(caption);
  const auto meta = detail::sniff_image(generated.bytes);
  if (!meta) {
    throw EvalError(ErrorCode::ImageDecodeError, "service returned undecodable image bytes");
  }
  const std::filesystem::path path =
      asset_dir / (asset_stem + "." + detail::media_type_extension(meta->media_type));
  detail::atomic_write_file(path, generated.bytes);
  return ImageRef{path.string(), meta->media_type};
}

/// Asks for a counter caption that keeps the objects but distorts their
/// composition. Echoes of the input (after case/whitespace normalization) are
/// retried, then rejected.
inline std::string gen_negative_caption(const std::string& caption_correct, TextGenClient& textgen,
                                        const ForgeOptions& opts = {},
                                        std::vector<ServiceCallRecord>* provenance = nullptr) {
  if (caption_correct.empty()) {
    throw EvalError(ErrorCode::InvalidConfig, "caption_correct is empty");
  }
  const std::string prompt = negative_caption_prompt(caption_correct);
  const std::string normalized_correct = detail::normalize_caption(caption_correct);
  std::string last;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    if (provenance) {
      provenance->push_back({"negative_caption", textgen.model_id(), prompt, opts.now()});
    }
    last = textgen.complete(prompt);
    if (detail::normalize_caption(last) != normalized_correct) {
      return last;
    }
  }
  throw EvalError(ErrorCode::DegenerateNegative,
                  "negative caption degenerated to the positive after " +
                      std::to_string(opts.max_attempts) + " attempts");
}

inline json to_json(const Demonstration& demo) {
  json provenance = json::array();
  for (const ServiceCallRecord& record : demo.provenance) {
    provenance.push_back({{"kind", record.kind},
                          {"model", record.model},
                          {"prompt", record.prompt},
                          {"timestamp", record.timestamp}});
  }
  return json{{"image", to_json(demo.image)},
              {"caption_correct", demo.caption_correct},
              {"caption_wrong", demo.caption_wrong},
              {"source", demo_source_name(demo.source)},
              {"objects", demo.objects},
              {"provenance", provenance}};
}

inline Demonstration demonstration_from_json(const json& record, std::size_t line_no) {
  using detail_manifest::image_ref_from_json;
  using detail_manifest::require_string;
  Demonstration demo;
  demo.image = image_ref_from_json(record, "image", line_no);
  demo.caption_correct = require_string(record, "caption_correct", line_no);
  demo.caption_wrong = require_string(record, "caption_wrong", line_no);
  if (demo.caption_correct == demo.caption_wrong) {
    throw EvalError(ErrorCode::InvariantViolation, "caption_correct equals caption_wrong")
        .with_line(line_no);
  }
  const std::string source = record.value("source", "real");
  if (source == "synthetic") {
    demo.source = DemoSource::Synthetic;
  } else if (source == "real") {
    demo.source = DemoSource::Real;
  } else {
    throw EvalError(ErrorCode::MalformedRecord, "unknown demo source '" + source + "'")
        .with_line(line_no);
  }
  if (record.contains("objects")) {
    for (const auto& obj : record.at("objects")) demo.objects.push_back(obj.get<std::string>());
  }
  if (demo.source == DemoSource::Synthetic && demo.objects.empty()) {
    throw EvalError(ErrorCode::InvariantViolation, "synthetic demo without objects").with_line(line_no);
  }
  if (record.contains("provenance")) {
    for (const auto& entry : record.at("provenance")) {
      demo.provenance.push_back({entry.value("kind", ""), entry.value("model", ""),
                                 entry.value("prompt", ""), entry.value("timestamp", "")});
    }
  }
  return demo;
}

inline std::filesystem::path bank_manifest_path(const std::filesystem::path& bank_dir) {
  return bank_dir / "manifest.jsonl";
}

inline void save_bank(const DemoBank& bank, const std::filesystem::path& bank_dir) {
  if (bank.demos.empty()) {
    throw EvalError(ErrorCode::EmptyDemos, "refusing to persist an empty bank");
  }
  for (std::size_t i = 1; i < bank.demos.size(); ++i) {
    if (bank.demos[i].source != bank.demos[0].source) {
      throw EvalError(ErrorCode::InvariantViolation, "bank mixes synthetic and real demos");
    }
  }
  std::filesystem::create_directories(bank_dir);
  std::string manifest;
  for (const Demonstration& demo : bank.demos) {
    manifest += to_json(demo).dump();
    manifest += '\n';
  }
  detail::atomic_write_file(bank_manifest_path(bank_dir), manifest);
  const json meta = {{"bank_id", bank.bank_id}, {"seed", bank.seed}};
  detail::atomic_write_file(bank_dir / "meta.json", meta.dump(2) + "\n");
}

inline DemoBank load_bank(const std::filesystem::path& bank_dir) {
  DemoBank bank;
  const std::filesystem::path meta_path = bank_dir / "meta.json";
  if (std::filesystem::exists(meta_path)) {
    const json meta = json::parse(detail::read_file(meta_path));
    bank.bank_id = meta.value("bank_id", bank_dir.filename().string());
    bank.seed = meta.value("seed", std::uint64_t{0});
  } else {
    bank.bank_id = bank_dir.filename().string();
  }
  detail_manifest::for_each_record(bank_manifest_path(bank_dir),
                                   [&](const json& record, std::size_t line_no) {
                                     Demonstration demo = demonstration_from_json(record, line_no);
                                     check_image_resolves(demo.image, bank.bank_id + "[" +
                                                                          std::to_string(line_no) + "]");
                                     bank.demos.push_back(std::move(demo));
                                   });
  if (bank.demos.empty()) {
    throw EvalError(ErrorCode::EmptyDemos, "bank '" + bank_dir.string() + "' has no demos");
  }
  for (std::size_t i = 1; i < bank.demos.size(); ++i) {
    if (bank.demos[i].source != bank.demos[0].source) {
      throw EvalError(ErrorCode::InvariantViolation, "bank mixes synthetic and real demos");
    }
  }
  return bank;
}

/// Runs caption -> image -> counter-caption per object list and persists the
/// bank. A failure at list k surfaces k in the error; assets completed before
/// the failure stay on disk so a rerun can resume cheaply.
inline DemoBank build_synthetic_bank(const std::vector<std::vector<std::string>>& object_lists,
                                     TextGenClient& textgen, ImageGenClient& imagegen,
                                     std::uint64_t seed, const std::string& bank_id,
                                     const std::filesystem::path& out_dir,
                                     const ForgeOptions& opts = {}) {
  if (object_lists.empty()) {
    throw EvalError(ErrorCode::EmptyDemos, "no object lists supplied");
  }
  std::filesystem::create_directories(out_dir);
  std::vector<Demonstration> demos(object_lists.size());
  detail::parallel_for(object_lists.size(), opts.concurrency, [&](std::size_t i) {
    try {
      Demonstration demo;
      demo.source = DemoSource::Synthetic;
      demo.objects = object_lists[i];
      demo.caption_correct =
          gen_positive_caption(demo.objects, textgen, opts, &demo.provenance);
      demo.image = gen_image(demo.caption_correct, imagegen, out_dir,
                             bank_id + "_" + std::to_string(i), opts, &demo.provenance);
      demo.caption_wrong =
          gen_negative_caption(demo.caption_correct, textgen, opts, &demo.provenance);
      if (demo.caption_wrong == demo.caption_correct) {
        throw EvalError(ErrorCode::DegenerateNegative, "negative caption equals positive");
      }
      demos[i] = std::move(demo);
    } catch (EvalError& e) {
      throw EvalError(e.code(), "object list " + std::to_string(i) + ": " + e.what()).with_index(i);
    }
  });
  DemoBank bank{bank_id, std::move(demos), seed};
  save_bank(bank, out_dir);
  return bank;
}

/// Loads a hand-annotated bank: rows of {image, caption_correct, caption_wrong}.
inline DemoBank ingest_real_bank(const std::filesystem::path& manifest_path) {
  DemoBank bank;
  bank.bank_id = manifest_path.stem().string();
  detail_manifest::for_each_record(manifest_path, [&](const json& record, std::size_t line_no) {
    Demonstration demo = demonstration_from_json(record, line_no);
    if (demo.source != DemoSource::Real) {
      throw EvalError(ErrorCode::InvariantViolation, "real bank manifest contains a synthetic row")
          .with_line(line_no);
    }
    check_image_resolves(demo.image, bank.bank_id + "[" + std::to_string(line_no) + "]");
    bank.demos.push_back(std::move(demo));
  });
  if (bank.demos.empty()) {
    throw EvalError(ErrorCode::EmptyDemos, "real bank manifest '" + manifest_path.string() + "' is empty");
  }
  return bank;
}

}  // namespace compeval
