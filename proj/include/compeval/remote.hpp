#pragma once

#include <string>
#include <utility>

#include "json.hpp"

#include "compeval/demoforge.hpp"
#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"
#include "compeval/gateway.hpp"
#include "compeval/net.hpp"

namespace compeval {

/// Embedding endpoint client. Expects `{"data": [{"embedding": [...]}]}` back,
/// the prevailing embeddings response shape.
class RemoteEmbeddingAdapter : public EmbeddingAdapter {
 public:
  RemoteEmbeddingAdapter(ModelSpec spec, RetryPolicy policy = {})
      : EmbeddingAdapter(std::move(spec)), policy_(policy) {}

 protected:
  EmbeddingVector do_embed_text(const std::string& text) override {
    return execute(embed_text_request(spec(), text));
  }

  EmbeddingVector do_embed_image(const ImageRef& image) override {
    return execute(embed_image_request(spec(), image));
  }

 private:
  EmbeddingVector execute(const json& request) {
    const json response =
        post_json(spec().endpoint, request, bearer_token_from_env(spec().auth_env), policy_);
    try {
      EmbeddingVector v;
      v.values = response.at("data").at(0).at("embedding").get<std::vector<double>>();
      if (v.values.empty()) {
        throw EvalError(ErrorCode::ServiceError, "endpoint returned an empty embedding");
      }
      return v;
    } catch (const json::exception& e) {
      throw EvalError(ErrorCode::ServiceError,
                      std::string("unexpected embedding response shape: ") + e.what());
    }
  }

  RetryPolicy policy_;
};

namespace detail_remote {

/// One leading space is stripped from token strings before matching, so
/// " yes" and "yes" land on the same key; collisions keep the higher score.
inline void insert_token_score(LogitRow& row, std::string token, double score) {
  if (!token.empty() && token.front() == ' ') token.erase(token.begin(), token.begin() + 1);
  auto [it, inserted] = row.token_scores.emplace(std::move(token), score);
  if (!inserted && score > it->second) it->second = score;
}

inline std::vector<LogitRow> rows_from_chat_logprobs(const json& choice) {
  std::vector<LogitRow> rows;
  auto logprobs = choice.find("logprobs");
  if (logprobs == choice.end() || logprobs->is_null()) return rows;
  auto content = logprobs->find("content");
  if (content == logprobs->end() || !content->is_array()) return rows;
  int position = 0;
  for (const auto& entry : *content) {
    LogitRow row;
    row.position = position++;
    if (entry.contains("top_logprobs")) {
      for (const auto& alt : entry.at("top_logprobs")) {
        insert_token_score(row, alt.at("token").get<std::string>(),
                           alt.at("logprob").get<double>());
      }
    }
    // the sampled token itself may be absent from top_logprobs
    if (entry.contains("token") && entry.contains("logprob")) {
      insert_token_score(row, entry.at("token").get<std::string>(),
                         entry.at("logprob").get<double>());
    }
    if (row.token_scores.empty()) {
      row.token_scores.emplace("", 0.0);  // keep positions consecutive
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail_remote

/// Chat-completions client with per-token log-probabilities. score_kind is
/// LogProb: hosted APIs expose log-probabilities, not raw logits.
class RemoteGenerativeAdapter : public GenerativeAdapter {
 public:
  RemoteGenerativeAdapter(ModelSpec spec, RetryPolicy policy = {})
      : GenerativeAdapter(std::move(spec)), policy_(policy) {}

 protected:
  GenerationResult do_generate(const PromptBundle& bundle) override {
    const json request = generate_request(spec(), bundle);
    const json response =
        post_json(spec().endpoint, request, bearer_token_from_env(spec().auth_env), policy_);
    try {
      const json& choice = response.at("choices").at(0);
      GenerationResult result;
      const json& message = choice.at("message");
      if (message.contains("content") && message.at("content").is_string()) {
        result.text = message.at("content").get<std::string>();
      }
      result.finish_reason = choice.value("finish_reason", "stop");
      result.rows = detail_remote::rows_from_chat_logprobs(choice);
      result.score_kind = ScoreKind::LogProb;
      return result;
    } catch (const json::exception& e) {
      throw EvalError(ErrorCode::ServiceError,
                      std::string("unexpected chat response shape: ") + e.what());
    }
  }

 private:
  RetryPolicy policy_;
};

/// Text generation for demo forging, over the same chat-completions shape.
class RemoteTextGenClient : public TextGenClient {
 public:
  RemoteTextGenClient(std::string endpoint, std::string model, std::string auth_env,
                      RetryPolicy policy = {}, double temperature = 1.0)
      : endpoint_(std::move(endpoint)),
        model_(std::move(model)),
        auth_env_(std::move(auth_env)),
        policy_(policy),
        temperature_(temperature) {}

  std::string model_id() const override { return model_; }

  std::string complete(const std::string& prompt) override {
    const json request{{"model", model_},
                       {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
                       {"temperature", temperature_}};
    const json response = post_json(endpoint_, request, bearer_token_from_env(auth_env_), policy_);
    try {
      return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw EvalError(ErrorCode::ServiceError,
                      std::string("unexpected chat response shape: ") + e.what());
    }
  }

 private:
  std::string endpoint_;
  std::string model_;
  std::string auth_env_;
  RetryPolicy policy_;
  double temperature_;
};

/// Image generation client. Accepts either `b64_json` payloads or a `url` to
/// fetch, mirroring the prevailing images-API response.
class RemoteImageGenClient : public ImageGenClient {
 public:
  RemoteImageGenClient(std::string endpoint, std::string model, std::string auth_env,
                       RetryPolicy policy = {})
      : endpoint_(std::move(endpoint)),
        model_(std::move(model)),
        auth_env_(std::move(auth_env)),
        policy_(policy) {}

  std::string model_id() const override { return model_; }

  GeneratedImage generate(const std::string& prompt) override {
    const json request{
        {"model", model_}, {"prompt", prompt}, {"n", 1}, {"response_format", "b64_json"}};
    const json response = post_json(endpoint_, request, bearer_token_from_env(auth_env_), policy_);
    try {
      const json& data = response.at("data").at(0);
      if (data.contains("b64_json")) {
        return GeneratedImage{detail::base64_decode(data.at("b64_json").get<std::string>())};
      }
      if (data.contains("url")) {
        return GeneratedImage{get_bytes(data.at("url").get<std::string>(), policy_)};
      }
      throw EvalError(ErrorCode::ServiceError, "image response has neither b64_json nor url");
    } catch (const json::exception& e) {
      throw EvalError(ErrorCode::ServiceError,
                      std::string("unexpected image response shape: ") + e.what());
    }
  }

 private:
  std::string endpoint_;
  std::string model_;
  std::string auth_env_;
  RetryPolicy policy_;
};

}  // namespace compeval
