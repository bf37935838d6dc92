#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "compeval/cache.hpp"
#include "compeval/dataset.hpp"
#include "compeval/demoforge.hpp"
#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"
#include "compeval/gateway.hpp"
#include "compeval/mocks.hpp"
#include "compeval/prompt.hpp"
#include "compeval/remote.hpp"
#include "compeval/report.hpp"
#include "compeval/scoring.hpp"

namespace compeval {

enum class EvalMode { ContrastiveZeroShot, GenerativeZeroShot, GenerativeFewShot };
enum class WinogroundScoring { YesLogit, BinaryYesNo };
enum class BenchmarkKind { ARO, SugarCrepe, Winoground };

inline std::string eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::ContrastiveZeroShot: return "contrastive_zero_shot";
    case EvalMode::GenerativeZeroShot: return "generative_zero_shot";
    case EvalMode::GenerativeFewShot: return "generative_few_shot";
  }
  return "unknown";
}

inline EvalMode eval_mode_from_name(std::string_view name) {
  if (name == "contrastive_zero_shot") return EvalMode::ContrastiveZeroShot;
  if (name == "generative_zero_shot") return EvalMode::GenerativeZeroShot;
  if (name == "generative_few_shot") return EvalMode::GenerativeFewShot;
  throw EvalError(ErrorCode::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

inline std::string winoground_scoring_name(WinogroundScoring s) {
  return s == WinogroundScoring::YesLogit ? "yes_logit" : "binary_yes_no";
}

inline WinogroundScoring winoground_scoring_from_name(std::string_view name) {
  if (name == "yes_logit") return WinogroundScoring::YesLogit;
  if (name == "binary_yes_no") return WinogroundScoring::BinaryYesNo;
  throw EvalError(ErrorCode::InvalidConfig,
                  "unknown winoground_scoring '" + std::string(name) + "'");
}

inline std::string benchmark_kind_name(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::ARO: return "ARO";
    case BenchmarkKind::SugarCrepe: return "SugarCrepe";
    case BenchmarkKind::Winoground: return "Winoground";
  }
  return "unknown";
}

inline BenchmarkKind benchmark_kind_from_name(std::string_view name) {
  if (name == "ARO") return BenchmarkKind::ARO;
  if (name == "SugarCrepe") return BenchmarkKind::SugarCrepe;
  if (name == "Winoground") return BenchmarkKind::Winoground;
  throw EvalError(ErrorCode::InvalidConfig, "unknown benchmark kind '" + std::string(name) + "'");
}

struct BenchmarkSource {
  std::string manifest;
  BenchmarkKind kind = BenchmarkKind::ARO;
};

struct RunConfig {
  std::vector<BenchmarkSource> benchmarks;
  std::vector<ModelSpec> models;
  EvalMode mode = EvalMode::ContrastiveZeroShot;
  int shots = 0;                       // few-shot only: 1 or 5
  std::string bank;                    // few-shot only: bank dir or real-bank manifest
  std::size_t one_shot_index = 0;      // which bank demo a 1-shot prompt uses
  std::uint64_t seed = 0;
  WinogroundScoring winoground_scoring = WinogroundScoring::YesLogit;
  std::string output_dir;
  std::string cache_dir;               // defaults to <output_dir>/cache
  int workers = 4;
  std::string yes_token = "yes";
  double logit_floor = -20.0;
  RetryPolicy retry;

  std::filesystem::path effective_cache_dir() const {
    return cache_dir.empty() ? std::filesystem::path(output_dir) / "cache"
                             : std::filesystem::path(cache_dir);
  }
};

inline ModelSpec model_spec_from_json(const json& j) {
  ModelSpec spec;
  spec.name = j.at("name").get<std::string>();
  const std::string kind = j.value("kind", "generative");
  if (kind == "embedding") {
    spec.kind = ModelKind::Embedding;
  } else if (kind == "generative") {
    spec.kind = ModelKind::Generative;
  } else {
    throw EvalError(ErrorCode::InvalidConfig, "unknown model kind '" + kind + "'");
  }
  spec.endpoint = j.at("endpoint").get<std::string>();
  if (j.contains("capabilities")) {
    const auto& caps = j.at("capabilities");
    spec.capabilities.returns_scores = caps.value("returns_scores", true);
    spec.capabilities.accepts_multi_image = caps.value("accepts_multi_image", true);
  }
  if (j.contains("decoding")) {
    const auto& dec = j.at("decoding");
    spec.decoding.temperature = dec.value("temperature", 0.0);
    spec.decoding.max_tokens = dec.value("max_tokens", 512);
    spec.decoding.top_logprobs = dec.value("top_logprobs", 20);
  }
  spec.auth_env = j.value("auth_env", "");
  return spec;
}

inline json to_json(const ModelSpec& spec) {
  return json{{"name", spec.name},
              {"kind", spec.kind == ModelKind::Embedding ? "embedding" : "generative"},
              {"endpoint", spec.endpoint},
              {"capabilities",
               {{"returns_scores", spec.capabilities.returns_scores},
                {"accepts_multi_image", spec.capabilities.accepts_multi_image}}},
              {"decoding",
               {{"temperature", spec.decoding.temperature},
                {"max_tokens", spec.decoding.max_tokens},
                {"top_logprobs", spec.decoding.top_logprobs}}},
              {"auth_env", spec.auth_env}};
}

inline void validate_run_config(const RunConfig& config) {
  if (config.benchmarks.empty()) {
    throw EvalError(ErrorCode::InvalidConfig, "config lists no benchmarks");
  }
  if (config.models.empty()) {
    throw EvalError(ErrorCode::InvalidConfig, "config lists no models");
  }
  if (config.output_dir.empty()) {
    throw EvalError(ErrorCode::InvalidConfig, "config has no output_dir");
  }
  const bool fewshot = config.mode == EvalMode::GenerativeFewShot;
  if (fewshot) {
    if (config.shots != 1 && config.shots != 5) {
      throw EvalError(ErrorCode::InvalidShotCount,
                      "few-shot mode needs shots of 1 or 5, got " + std::to_string(config.shots));
    }
    if (config.bank.empty()) {
      throw EvalError(ErrorCode::InvalidConfig, "few-shot mode needs a bank");
    }
  } else {
    if (config.shots != 0 || !config.bank.empty()) {
      throw EvalError(ErrorCode::InvalidConfig,
                      "shots/bank are few-shot fields; remove them for mode " +
                          eval_mode_name(config.mode));
    }
  }
  for (const ModelSpec& spec : config.models) {
    if (config.mode == EvalMode::ContrastiveZeroShot && spec.kind != ModelKind::Embedding) {
      throw EvalError(ErrorCode::InvalidConfig,
                      "contrastive mode requires embedding models; '" + spec.name + "' is not");
    }
    if (config.mode != EvalMode::ContrastiveZeroShot && spec.kind != ModelKind::Generative) {
      throw EvalError(ErrorCode::InvalidConfig,
                      "generative modes require generative models; '" + spec.name + "' is not");
    }
  }
}

inline RunConfig run_config_from_json(const json& j) {
  RunConfig config;
  for (const auto& b : j.at("benchmarks")) {
    config.benchmarks.push_back(
        {b.at("manifest").get<std::string>(), benchmark_kind_from_name(b.at("kind").get<std::string>())});
  }
  for (const auto& m : j.at("models")) {
    config.models.push_back(model_spec_from_json(m));
  }
  config.mode = eval_mode_from_name(j.at("mode").get<std::string>());
  config.shots = j.value("shots", 0);
  config.bank = j.value("bank", "");
  config.one_shot_index = j.value("one_shot_index", std::size_t{0});
  config.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("winoground_scoring")) {
    config.winoground_scoring =
        winoground_scoring_from_name(j.at("winoground_scoring").get<std::string>());
  }
  config.output_dir = j.at("output_dir").get<std::string>();
  config.cache_dir = j.value("cache_dir", "");
  config.workers = j.value("workers", 4);
  config.yes_token = j.value("yes_token", "yes");
  config.logit_floor = j.value("logit_floor", -20.0);
  if (j.contains("retry")) {
    config.retry.max_attempts = j.at("retry").value("max_attempts", 5);
    config.retry.base_delay_ms = j.at("retry").value("base_delay_ms", 250);
  }
  validate_run_config(config);
  return config;
}

inline json to_canonical_json(const RunConfig& config) {
  json benchmarks = json::array();
  for (const BenchmarkSource& b : config.benchmarks) {
    benchmarks.push_back({{"manifest", b.manifest}, {"kind", benchmark_kind_name(b.kind)}});
  }
  json models = json::array();
  for (const ModelSpec& m : config.models) models.push_back(to_json(m));
  return json{{"benchmarks", benchmarks},
              {"models", models},
              {"mode", eval_mode_name(config.mode)},
              {"shots", config.shots},
              {"bank", config.bank},
              {"one_shot_index", config.one_shot_index},
              {"seed", config.seed},
              {"winoground_scoring", winoground_scoring_name(config.winoground_scoring)},
              {"yes_token", config.yes_token},
              {"logit_floor", config.logit_floor}};
}

inline std::string config_hash(const RunConfig& config) {
  return sha256_hex(to_canonical_json(config).dump());
}

struct LoadedBenchmarks {
  std::vector<std::pair<BenchmarkSource, std::vector<PairItem>>> pairwise;
  std::vector<std::pair<BenchmarkSource, std::vector<WinogroundItem>>> winoground;

  std::vector<PairItem> all_pairs() const {
    std::vector<PairItem> out;
    for (const auto& [source, items] : pairwise) out.insert(out.end(), items.begin(), items.end());
    return out;
  }
  std::vector<WinogroundItem> all_winoground() const {
    std::vector<WinogroundItem> out;
    for (const auto& [source, items] : winoground) out.insert(out.end(), items.begin(), items.end());
    return out;
  }
};

inline LoadedBenchmarks load_benchmarks(const RunConfig& config) {
  LoadedBenchmarks loaded;
  for (const BenchmarkSource& source : config.benchmarks) {
    if (source.kind == BenchmarkKind::Winoground) {
      loaded.winoground.emplace_back(source, load_winoground(source.manifest));
      continue;
    }
    auto items = load_pairwise_benchmark(source.manifest);
    const Benchmark expected =
        source.kind == BenchmarkKind::ARO ? Benchmark::ARO : Benchmark::SugarCrepe;
    for (const PairItem& item : items) {
      if (item.benchmark != expected) {
        throw EvalError(ErrorCode::InvalidConfig,
                        "manifest '" + source.manifest + "' declares kind " +
                            benchmark_kind_name(source.kind) + " but row '" + item.item_id +
                            "' says " + benchmark_name(item.benchmark));
      }
    }
    loaded.pairwise.emplace_back(source, std::move(items));
  }
  return loaded;
}

/// Loads the few-shot bank: a directory with manifest.jsonl, or a bare JSONL
/// manifest of hand-annotated real demos.
inline DemoBank load_bank_source(const std::string& bank_path) {
  if (std::filesystem::is_directory(bank_path)) return load_bank(bank_path);
  return ingest_real_bank(bank_path);
}

struct AdapterFactory {
  std::function<std::unique_ptr<EmbeddingAdapter>(const ModelSpec&, const LoadedBenchmarks&)>
      embedding;
  std::function<std::unique_ptr<GenerativeAdapter>(const ModelSpec&, const LoadedBenchmarks&)>
      generative;
};

/// Builds mock adapters for "mock:*" endpoints (tables derived from the
/// loaded fixture items) and remote adapters for http(s) endpoints.
inline AdapterFactory default_adapter_factory(RetryPolicy policy = {}) {
  AdapterFactory factory;
  factory.embedding = [policy](const ModelSpec& spec,
                               const LoadedBenchmarks& loaded) -> std::unique_ptr<EmbeddingAdapter> {
    if (detail::is_url(spec.endpoint)) {
      return std::make_unique<RemoteEmbeddingAdapter>(spec, policy);
    }
    if (spec.endpoint.rfind("mock:", 0) == 0) {
      const std::string name = spec.endpoint.substr(5);
      auto tables = FixtureTables::build(loaded.all_pairs(), loaded.all_winoground());
      if (name == "oracle") return std::make_unique<OracleEmbeddingMock>(spec, std::move(tables));
      if (name == "anti_oracle") {
        return std::make_unique<OracleEmbeddingMock>(spec, std::move(tables), /*anti=*/true);
      }
      if (name == "bow") return std::make_unique<BowEmbeddingMock>(spec, std::move(tables));
      if (name == "order") {
        return std::make_unique<OrderSensitiveEmbeddingMock>(spec, std::move(tables));
      }
      throw EvalError(ErrorCode::InvalidConfig, "unknown embedding mock '" + name + "'");
    }
    throw EvalError(ErrorCode::InvalidConfig, "unsupported endpoint '" + spec.endpoint + "'");
  };
  factory.generative = [policy](const ModelSpec& spec, const LoadedBenchmarks& loaded)
      -> std::unique_ptr<GenerativeAdapter> {
    if (detail::is_url(spec.endpoint)) {
      return std::make_unique<RemoteGenerativeAdapter>(spec, policy);
    }
    if (spec.endpoint.rfind("mock:", 0) == 0) {
      const std::string name = spec.endpoint.substr(5);
      auto mock = std::make_unique<ScriptedGenerativeMock>(spec);
      if (name == "correct") {
        mock->set_behavior(correct_answer_behavior(
            FixtureTables::build(loaded.all_pairs(), loaded.all_winoground())));
        return mock;
      }
      if (name == "wrong") {
        mock->set_behavior(wrong_answer_behavior(
            FixtureTables::build(loaded.all_pairs(), loaded.all_winoground())));
        return mock;
      }
      if (name.rfind("fixed:", 0) == 0) {
        GenerationResult fixed;
        fixed.text = name.substr(6);
        fixed.rows = {LogitRow{0, {{"yes", 0.0}}}};
        mock->set_default(std::move(fixed));
        return mock;
      }
      throw EvalError(ErrorCode::InvalidConfig, "unknown generative mock '" + name + "'");
    }
    throw EvalError(ErrorCode::InvalidConfig, "unsupported endpoint '" + spec.endpoint + "'");
  };
  return factory;
}

/// Cache-through wrappers. Keys are SHA-256 of (model name, serialized
/// request), so a warm cache answers without touching the adapter at all.
class CachedEmbedding {
 public:
  CachedEmbedding(EmbeddingAdapter& inner, ResponseCache* cache) : inner_(inner), cache_(cache) {}

  EmbeddingVector embed_text(const std::string& text) {
    return through(embed_text_request(inner_.spec(), text), [&] { return inner_.embed_text(text); });
  }

  EmbeddingVector embed_image(const ImageRef& image) {
    return through(embed_image_request(inner_.spec(), image),
                   [&] { return inner_.embed_image(image); });
  }

 private:
  template <typename Fn>
  EmbeddingVector through(const json& request, Fn&& miss) {
    if (!cache_) return miss();
    const std::string key = cache_key(inner_.spec().name, request);
    if (auto hit = cache_->get(key)) return embedding_from_json(*hit);
    EmbeddingVector value = miss();
    cache_->put(key, to_json(value));
    return value;
  }

  EmbeddingAdapter& inner_;
  ResponseCache* cache_;
};

class CachedGenerative {
 public:
  CachedGenerative(GenerativeAdapter& inner, ResponseCache* cache) : inner_(inner), cache_(cache) {}

  GenerationResult generate(const PromptBundle& bundle) {
    if (!cache_) return inner_.generate(bundle);
    const std::string key = cache_key(inner_.spec().name, generate_request(inner_.spec(), bundle));
    if (auto hit = cache_->get(key)) return generation_from_json(*hit);
    GenerationResult value = inner_.generate(bundle);
    cache_->put(key, to_json(value));
    return value;
  }

 private:
  GenerativeAdapter& inner_;
  ResponseCache* cache_;
};

namespace detail_runner {

enum class ItemOutcome { Correct, Incorrect, Unparseable };

struct WinoItemResult {
  WinogroundScores scores;
  int unparseable_probes = 0;
  std::optional<ScoreKind> score_kind;
};

inline void note_once(std::vector<std::string>& notes, const std::string& note) {
  for (const std::string& existing : notes) {
    if (existing == note) return;
  }
  notes.push_back(note);
}

}  // namespace detail_runner

/// Embeds image + both captions per pair item and all four caption/image
/// combinations per Winoground item, then scores with cosine similarity.
inline BenchmarkReport run_contrastive_eval(const RunConfig& config,
                                            const AdapterFactory* factory_override = nullptr) {
  if (config.mode != EvalMode::ContrastiveZeroShot) {
    throw EvalError(ErrorCode::InvalidConfig, "run_contrastive_eval needs contrastive_zero_shot mode");
  }
  validate_run_config(config);
  const AdapterFactory factory =
      factory_override ? *factory_override : default_adapter_factory(config.retry);
  const LoadedBenchmarks loaded = load_benchmarks(config);
  ResponseCache cache(config.effective_cache_dir());

  BenchmarkReport report;
  report.metadata.config_hash = config_hash(config);
  report.metadata.mode = eval_mode_name(config.mode);
  report.metadata.score_kind = "cosine";
  report.metadata.label_seed = config.seed;
  report.metadata.winoground_scoring = "cosine";

  const std::size_t workers = static_cast<std::size_t>(std::max(config.workers, 1));
  try {
  for (const ModelSpec& spec : config.models) {
    auto adapter = factory.embedding(spec, loaded);
    CachedEmbedding model(*adapter, &cache);
    ModelReportRow row;
    row.model = spec.name;

    for (const auto& [source, items] : loaded.pairwise) {
      std::vector<bool> correct(items.size(), false);
      detail::parallel_for(items.size(), workers, [&](std::size_t i) {
        const PairItem& item = items[i];
        const EmbeddingVector image = model.embed_image(item.image);
        const EmbeddingVector pos = model.embed_text(item.caption_pos);
        const EmbeddingVector neg = model.embed_text(item.caption_neg);
        correct[i] =
            pairwise_correct(cosine_similarity(pos, image), cosine_similarity(neg, image));
      });
      for (std::size_t i = 0; i < items.size(); ++i) {
        SubsetStats& stats = row.subsets[subset_code(items[i].benchmark, items[i].subset)];
        ++stats.count;
        if (correct[i]) ++stats.correct;
      }
    }

    for (const auto& [source, items] : loaded.winoground) {
      std::vector<WinogroundScores> scores(items.size());
      detail::parallel_for(items.size(), workers, [&](std::size_t i) {
        const WinogroundItem& item = items[i];
        const EmbeddingVector image_0 = model.embed_image(item.image_0);
        const EmbeddingVector image_1 = model.embed_image(item.image_1);
        const EmbeddingVector caption_0 = model.embed_text(item.caption_0);
        const EmbeddingVector caption_1 = model.embed_text(item.caption_1);
        SimilarityMatrix2x2 m;
        m.s00 = cosine_similarity(caption_0, image_0);
        m.s01 = cosine_similarity(caption_0, image_1);
        m.s10 = cosine_similarity(caption_1, image_0);
        m.s11 = cosine_similarity(caption_1, image_1);
        scores[i] = winoground_item_scores(m);
      });
      if (!row.winoground) row.winoground = WinogroundStats{};
      for (const WinogroundScores& s : scores) {
        ++row.winoground->count;
        if (s.text_correct) ++row.winoground->text_correct;
        if (s.image_correct) ++row.winoground->image_correct;
        if (s.group_correct) ++row.winoground->group_correct;
      }
    }
    report.rows.push_back(std::move(row));
  }
  } catch (...) {
    // keep whatever completed so an aborted run is not a total loss
    if (!config.output_dir.empty()) {
      std::filesystem::create_directories(config.output_dir);
      export_report(report, ReportFormat::Json,
                    std::filesystem::path(config.output_dir) / "partial_report.json");
    }
    throw;
  }
  return report;
}

/// Renders choice prompts (zero- or few-shot) for pair items and four yes/no
/// probes per Winoground item, then scores parsed answers or L_yes values.
inline BenchmarkReport run_generative_eval(const RunConfig& config,
                                           const AdapterFactory* factory_override = nullptr) {
  if (config.mode == EvalMode::ContrastiveZeroShot) {
    throw EvalError(ErrorCode::InvalidConfig, "run_generative_eval needs a generative mode");
  }
  validate_run_config(config);
  const bool fewshot = config.mode == EvalMode::GenerativeFewShot;
  const AdapterFactory factory =
      factory_override ? *factory_override : default_adapter_factory(config.retry);
  const LoadedBenchmarks loaded = load_benchmarks(config);
  ResponseCache cache(config.effective_cache_dir());

  std::vector<LabeledDemonstration> demos;
  if (fewshot) {
    const DemoBank bank = load_bank_source(config.bank);
    demos = assign_labels(bank.demos, config.seed);
  }

  BenchmarkReport report;
  report.metadata.config_hash = config_hash(config);
  report.metadata.mode = eval_mode_name(config.mode);
  report.metadata.label_seed = config.seed;
  report.metadata.shots = config.shots;
  report.metadata.bank = config.bank;
  report.metadata.winoground_scoring = winoground_scoring_name(config.winoground_scoring);
  report.metadata.yes_token = config.yes_token;
  report.metadata.logit_floor = config.logit_floor;
  detail_runner::note_once(report.metadata.notes,
                           "query A/B assignment is seeded per item and inverted before scoring");
  if (fewshot && !loaded.winoground.empty()) {
    detail_runner::note_once(report.metadata.notes,
                             "A/B-choice demonstrations are prepended unchanged before yes/no probes");
  }
  if (config.winoground_scoring == WinogroundScoring::BinaryYesNo && !loaded.winoground.empty()) {
    detail_runner::note_once(report.metadata.notes,
                             "binary yes/no scoring collapses text/image/group to one value per item");
  }

  const std::size_t workers = static_cast<std::size_t>(std::max(config.workers, 1));
  std::optional<ScoreKind> observed_score_kind;

  try {
  for (const ModelSpec& spec : config.models) {
    if (!loaded.winoground.empty() && config.winoground_scoring == WinogroundScoring::YesLogit &&
        !spec.capabilities.returns_scores) {
      throw EvalError(ErrorCode::ScoresUnavailable,
                      "model '" + spec.name + "' returns no scores; YesLogit scoring impossible");
    }
    if (fewshot && !spec.capabilities.accepts_multi_image) {
      throw EvalError(ErrorCode::CapabilityError,
                      "few-shot prompts need multi-image support; '" + spec.name + "' has none");
    }
    auto adapter = factory.generative(spec, loaded);
    CachedGenerative model(*adapter, &cache);
    ModelReportRow row;
    row.model = spec.name;

    for (const auto& [source, items] : loaded.pairwise) {
      std::vector<detail_runner::ItemOutcome> outcomes(items.size());
      std::vector<std::optional<ScoreKind>> kinds(items.size());
      detail::parallel_for(items.size(), workers, [&](std::size_t i) {
        const PairItem& item = items[i];
        const QueryLabels labels = assign_query_labels(item.item_id, config.seed);
        const PromptBundle bundle =
            fewshot ? render_fewshot_prompt(demos, item, labels, config.shots, config.one_shot_index)
                    : render_zeroshot_choice_prompt(item, labels);
        const GenerationResult result = model.generate(bundle);
        kinds[i] = result.score_kind;
        const Choice choice = parse_choice(result.text);
        if (choice == Choice::Unparseable) {
          outcomes[i] = detail_runner::ItemOutcome::Unparseable;
        } else {
          const bool picked_positive = (choice == Choice::A) == (labels.positive_at == LabelSide::A);
          outcomes[i] = picked_positive ? detail_runner::ItemOutcome::Correct
                                        : detail_runner::ItemOutcome::Incorrect;
        }
      });
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (!observed_score_kind && kinds[i]) observed_score_kind = kinds[i];
        SubsetStats& stats = row.subsets[subset_code(items[i].benchmark, items[i].subset)];
        ++stats.count;
        if (outcomes[i] == detail_runner::ItemOutcome::Correct) ++stats.correct;
        if (outcomes[i] == detail_runner::ItemOutcome::Unparseable) ++stats.unparseable;
      }
    }

    for (const auto& [source, items] : loaded.winoground) {
      std::vector<detail_runner::WinoItemResult> results(items.size());
      detail::parallel_for(items.size(), workers, [&](std::size_t i) {
        const WinogroundItem& item = items[i];
        double values[2][2];
        detail_runner::WinoItemResult out;
        for (int ci = 0; ci < 2; ++ci) {
          for (int ij = 0; ij < 2; ++ij) {
            const std::string& caption = ci == 0 ? item.caption_0 : item.caption_1;
            const ImageRef& image = ij == 0 ? item.image_0 : item.image_1;
            const PromptBundle bundle =
                fewshot ? render_fewshot_yesno_prompt(demos, caption, image, config.shots,
                                                      config.one_shot_index)
                        : render_winoground_yesno_prompt(caption, image);
            const GenerationResult result = model.generate(bundle);
            out.score_kind = result.score_kind;
            if (config.winoground_scoring == WinogroundScoring::YesLogit) {
              values[ci][ij] = mean_token_logit(result.rows, config.yes_token, config.logit_floor);
            } else {
              const YesNoOutcome yn = parse_yes_no(result.text);
              if (yn == YesNoOutcome::Unparseable) ++out.unparseable_probes;
              values[ci][ij] = yn == YesNoOutcome::Yes ? 1.0 : 0.0;
            }
          }
        }
        SimilarityMatrix2x2 m{values[0][0], values[0][1], values[1][0], values[1][1]};
        out.scores = winoground_item_scores(m);
        results[i] = out;
      });
      if (!row.winoground) row.winoground = WinogroundStats{};
      for (const detail_runner::WinoItemResult& r : results) {
        if (!observed_score_kind && r.score_kind) observed_score_kind = r.score_kind;
        ++row.winoground->count;
        if (r.scores.text_correct) ++row.winoground->text_correct;
        if (r.scores.image_correct) ++row.winoground->image_correct;
        if (r.scores.group_correct) ++row.winoground->group_correct;
        row.winoground->unparseable_probes += r.unparseable_probes;
      }
    }
    report.rows.push_back(std::move(row));
  }
  } catch (...) {
    if (!config.output_dir.empty()) {
      report.metadata.score_kind =
          observed_score_kind ? score_kind_name(*observed_score_kind) : "none";
      std::filesystem::create_directories(config.output_dir);
      export_report(report, ReportFormat::Json,
                    std::filesystem::path(config.output_dir) / "partial_report.json");
    }
    throw;
  }
  report.metadata.score_kind =
      observed_score_kind ? score_kind_name(*observed_score_kind) : "none";
  return report;
}

inline BenchmarkReport run_eval(const RunConfig& config,
                                const AdapterFactory* factory_override = nullptr) {
  return config.mode == EvalMode::ContrastiveZeroShot
             ? run_contrastive_eval(config, factory_override)
             : run_generative_eval(config, factory_override);
}

/// Writes report.json / report.csv / report.md into the run's output dir.
inline void write_run_outputs(const BenchmarkReport& report, const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  export_report(report, ReportFormat::Json, output_dir / "report.json");
  export_report(report, ReportFormat::Csv, output_dir / "report.csv");
  export_report(report, ReportFormat::MarkdownTable, output_dir / "report.md");
}

struct SweepConfig {
  RunConfig base;              // mode/shots/bank are overwritten per cell
  std::string synthetic_bank;
  std::string real_bank;
  std::vector<int> shots = {1, 5};
  bool include_zero_shot = true;
};

inline SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig sweep;
  json base = j;
  base.erase("sweep");
  if (!base.contains("mode")) base["mode"] = "generative_zero_shot";
  sweep.base = run_config_from_json(base);
  const auto& s = j.at("sweep");
  const auto& banks = s.at("banks");
  sweep.synthetic_bank = banks.value("synthetic", "");
  sweep.real_bank = banks.value("real", "");
  if (s.contains("shots")) sweep.shots = s.at("shots").get<std::vector<int>>();
  sweep.include_zero_shot = s.value("include_zero_shot", true);
  return sweep;
}

struct SweepCellResult {
  std::string name;      // "zero_shot", "1_shot_synthetic", ...
  std::string method;    // "Zero-Shot", "1-Shot", "5-Shot"
  std::string samples;   // "-", "Synthetic", "Real"
  bool ok = false;
  std::string error;
  std::optional<BenchmarkReport> report;
};

struct SweepResult {
  std::vector<SweepCellResult> cells;

  bool all_ok() const {
    for (const SweepCellResult& cell : cells) {
      if (!cell.ok) return false;
    }
    return true;
  }
};

inline ordered_json to_ordered_json(const SweepResult& result) {
  ordered_json cells = ordered_json::array();
  for (const SweepCellResult& cell : result.cells) {
    ordered_json c;
    c["name"] = cell.name;
    c["method"] = cell.method;
    c["samples"] = cell.samples;
    c["ok"] = cell.ok;
    c["error"] = cell.error;
    c["report"] = cell.report ? to_ordered_json(*cell.report) : ordered_json(nullptr);
    cells.push_back(std::move(c));
  }
  ordered_json out;
  out["cells"] = std::move(cells);
  return out;
}

/// Comparison table over the sweep cells, one row per cell in grid order.
inline std::string sweep_to_markdown(const SweepResult& result) {
  std::string out = "| Method | Samples |";
  for (std::string_view code : subscore_codes()) {
    out += " ";
    out += code;
    out += " |";
  }
  out += "\n|---|---|";
  for (std::size_t i = 0; i < subscore_codes().size(); ++i) out += "---|";
  out += "\n";
  for (const SweepCellResult& cell : result.cells) {
    out += "| " + cell.method + " | " + cell.samples + " |";
    if (cell.ok && cell.report && !cell.report->rows.empty()) {
      const ModelReportRow& row = cell.report->rows.front();
      for (std::string_view code : subscore_codes()) {
        const auto rate = row.rate_for(code);
        out += " " + (rate ? detail_report::percent(*rate) : std::string("-")) + " |";
      }
    } else {
      for (std::size_t i = 0; i < subscore_codes().size(); ++i) out += " failed |";
    }
    out += "\n";
  }
  return out;
}

/// Runs the mode×bank×shots grid: Zero-Shot, then 1/5-shot against the
/// synthetic and real banks, sharing one response cache. A failing cell is
/// recorded and the rest proceed.
inline SweepResult run_sweep(const SweepConfig& sweep,
                             const AdapterFactory* factory_override = nullptr) {
  if (sweep.base.models.size() != 1 || sweep.base.models[0].kind != ModelKind::Generative) {
    throw EvalError(ErrorCode::InvalidConfig, "sweep expects exactly one generative model");
  }
  struct Cell {
    std::string name;
    std::string method;
    std::string samples;
    EvalMode mode;
    int shots;
    std::string bank;
  };
  std::vector<Cell> grid;
  if (sweep.include_zero_shot) {
    grid.push_back({"zero_shot", "Zero-Shot", "-", EvalMode::GenerativeZeroShot, 0, ""});
  }
  for (int shots : sweep.shots) {
    const std::string prefix = std::to_string(shots) + "_shot_";
    const std::string method = std::to_string(shots) + "-Shot";
    if (!sweep.synthetic_bank.empty()) {
      grid.push_back({prefix + "synthetic", method, "Synthetic", EvalMode::GenerativeFewShot, shots,
                      sweep.synthetic_bank});
    }
    if (!sweep.real_bank.empty()) {
      grid.push_back(
          {prefix + "real", method, "Real", EvalMode::GenerativeFewShot, shots, sweep.real_bank});
    }
  }

  const std::filesystem::path base_out = sweep.base.output_dir;
  const std::filesystem::path shared_cache = sweep.base.effective_cache_dir();
  SweepResult result;
  for (const Cell& cell : grid) {
    RunConfig config = sweep.base;
    config.mode = cell.mode;
    config.shots = cell.shots;
    config.bank = cell.bank;
    config.output_dir = (base_out / "cells" / cell.name).string();
    config.cache_dir = shared_cache.string();
    SweepCellResult cell_result;
    cell_result.name = cell.name;
    cell_result.method = cell.method;
    cell_result.samples = cell.samples;
    try {
      BenchmarkReport report = run_generative_eval(config, factory_override);
      write_run_outputs(report, config.output_dir);
      cell_result.ok = true;
      cell_result.report = std::move(report);
    } catch (const std::exception& e) {
      cell_result.ok = false;
      cell_result.error = e.what();
    }
    result.cells.push_back(std::move(cell_result));
  }
  std::filesystem::create_directories(base_out);
  detail::atomic_write_file(base_out / "combined.json", to_ordered_json(result).dump(2) + "\n");
  detail::atomic_write_file(base_out / "combined.md", sweep_to_markdown(result));
  return result;
}

}  // namespace compeval
