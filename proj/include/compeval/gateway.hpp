#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "compeval/dataset.hpp"
#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"
#include "compeval/prompt.hpp"
#include "compeval/scoring.hpp"

namespace compeval {

enum class ModelKind { Embedding, Generative };
enum class ScoreKind { RawLogit, LogProb };

inline std::string score_kind_name(ScoreKind kind) {
  return kind == ScoreKind::RawLogit ? "raw_logit" : "logprob";
}

struct ModelCapabilities {
  bool returns_scores = true;
  bool accepts_multi_image = true;
};

struct DecodingParams {
  double temperature = 0.0;  // deterministic by default; the services pick their own otherwise
  int max_tokens = 512;
  int top_logprobs = 20;     // widest commonly supported, to maximize target-token hits
};

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::Generative;
  std::string endpoint;  // http(s) URL or "mock:<name>"
  ModelCapabilities capabilities;
  DecodingParams decoding;
  std::string auth_env;  // env var holding the bearer token, when remote
};

struct GenerationResult {
  std::string text;
  std::vector<LogitRow> rows;  // generated positions only; empty iff no-score model
  std::string finish_reason = "stop";
  ScoreKind score_kind = ScoreKind::RawLogit;

  bool operator==(const GenerationResult&) const = default;
};

inline json to_json(const EmbeddingVector& v) { return json{{"values", v.values}}; }

inline EmbeddingVector embedding_from_json(const json& j) {
  EmbeddingVector v;
  v.values = j.at("values").get<std::vector<double>>();
  return v;
}

inline json to_json(const GenerationResult& result) {
  json rows = json::array();
  for (const LogitRow& row : result.rows) {
    rows.push_back({{"position", row.position}, {"token_scores", row.token_scores}});
  }
  return json{{"text", result.text},
              {"rows", rows},
              {"finish_reason", result.finish_reason},
              {"score_kind", score_kind_name(result.score_kind)}};
}

inline GenerationResult generation_from_json(const json& j) {
  GenerationResult result;
  result.text = j.at("text").get<std::string>();
  for (const auto& row : j.at("rows")) {
    LogitRow r;
    r.position = row.at("position").get<int>();
    r.token_scores = row.at("token_scores").get<std::map<std::string, double>>();
    result.rows.push_back(std::move(r));
  }
  result.finish_reason = j.value("finish_reason", "stop");
  result.score_kind = j.value("score_kind", "raw_logit") == "logprob" ? ScoreKind::LogProb
                                                                      : ScoreKind::RawLogit;
  return result;
}

namespace detail_gateway {

inline json image_content_part(const ImageRef& ref) {
  if (detail::is_url(ref.locator)) {
    return json{{"type", "image_url"}, {"image_url", {{"url", ref.locator}}}};
  }
  const std::string bytes = detail::read_file(ref.locator);
  return json{{"type", "image_url"},
              {"image_url",
               {{"url", "data:" + ref.media_type + ";base64," + detail::base64_encode(bytes)}}}};
}

}  // namespace detail_gateway

/// Wire body for a text embedding call. Doubles as the cache key payload, so
/// construction must stay deterministic.
inline json embed_text_request(const ModelSpec& spec, const std::string& text) {
  return json{{"model", spec.name}, {"input", text}, {"input_type", "text"}};
}

inline json embed_image_request(const ModelSpec& spec, const ImageRef& image) {
  if (detail::is_url(image.locator)) {
    return json{{"model", spec.name}, {"input", image.locator}, {"input_type", "image_url"}};
  }
  const std::string bytes = detail::read_file(image.locator);
  return json{{"model", spec.name},
              {"input", detail::base64_encode(bytes)},
              {"input_type", "image_b64"},
              {"media_type", image.media_type}};
}

/// Chat-completion body for a prompt bundle: one content part per segment,
/// images as data URIs, log-probabilities requested when the model has them.
inline json generate_request(const ModelSpec& spec, const PromptBundle& bundle) {
  json content = json::array();
  for (const PromptSegment& seg : bundle.segments) {
    if (seg.kind == PromptSegment::Kind::Text) {
      content.push_back({{"type", "text"}, {"text", seg.text}});
    } else {
      content.push_back(detail_gateway::image_content_part(*seg.image));
    }
  }
  json body{{"model", spec.name},
            {"messages", json::array({json{{"role", "user"}, {"content", content}}})},
            {"temperature", spec.decoding.temperature},
            {"max_tokens", spec.decoding.max_tokens}};
  if (spec.capabilities.returns_scores) {
    body["logprobs"] = true;
    body["top_logprobs"] = spec.decoding.top_logprobs;
  }
  return body;
}

class EmbeddingAdapter {
 public:
  explicit EmbeddingAdapter(ModelSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind != ModelKind::Embedding) {
      throw EvalError(ErrorCode::WrongKind, "model '" + spec_.name + "' is not an embedding model");
    }
  }
  virtual ~EmbeddingAdapter() = default;

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t calls() const { return calls_.load(); }

  EmbeddingVector embed_text(const std::string& text) {
    calls_.fetch_add(1);
    return do_embed_text(text);
  }

  EmbeddingVector embed_image(const ImageRef& image) {
    check_image_resolves(image, spec_.name);
    calls_.fetch_add(1);
    return do_embed_image(image);
  }

 protected:
  virtual EmbeddingVector do_embed_text(const std::string& text) = 0;
  virtual EmbeddingVector do_embed_image(const ImageRef& image) = 0;

 private:
  ModelSpec spec_;
  std::atomic<std::uint64_t> calls_{0};
};

class GenerativeAdapter {
 public:
  explicit GenerativeAdapter(ModelSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind != ModelKind::Generative) {
      throw EvalError(ErrorCode::WrongKind, "model '" + spec_.name + "' is not a generative model");
    }
  }
  virtual ~GenerativeAdapter() = default;

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t calls() const { return calls_.load(); }

  GenerationResult generate(const PromptBundle& bundle) {
    if (bundle.image_slot_count() > 1 && !spec_.capabilities.accepts_multi_image) {
      throw EvalError(ErrorCode::CapabilityError,
                      "bundle has " + std::to_string(bundle.image_slot_count()) +
                          " image slots but model '" + spec_.name + "' accepts one");
    }
    calls_.fetch_add(1);
    GenerationResult result = do_generate(bundle);
    if (result.rows.empty() && spec_.capabilities.returns_scores) {
      throw EvalError(ErrorCode::ServiceError,
                      "model '" + spec_.name + "' advertises scores but returned none");
    }
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      if (result.rows[i].position != static_cast<int>(i)) {
        throw EvalError(ErrorCode::ServiceError, "logit rows are not consecutive from 0");
      }
    }
    return result;
  }

 protected:
  virtual GenerationResult do_generate(const PromptBundle& bundle) = 0;

 private:
  ModelSpec spec_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace compeval
