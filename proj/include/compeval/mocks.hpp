#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "compeval/dataset.hpp"
#include "compeval/detail/util.hpp"
#include "compeval/gateway.hpp"
#include "compeval/prompt.hpp"
#include "compeval/scoring.hpp"

namespace compeval {

namespace detail_mocks {

/// Deterministic pseudo-random direction for a token, identical across
/// platforms and runs.
inline std::vector<double> token_direction(std::uint64_t key, std::size_t dim) {
  std::vector<double> v(dim);
  std::uint64_t state = detail::splitmix64(key);
  for (std::size_t i = 0; i < dim; ++i) {
    state = detail::splitmix64(state);
    // map to [-1, 1)
    v[i] = static_cast<double>(static_cast<std::int64_t>(state >> 11)) / 4503599627370496.0 - 1.0;
  }
  return v;
}

inline void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

/// Query captions from the last text segment of a choice bundle
/// ("A. ...\nB. ..." lines).
inline std::optional<std::pair<std::string, std::string>> query_captions(const PromptBundle& bundle) {
  for (auto it = bundle.segments.rbegin(); it != bundle.segments.rend(); ++it) {
    if (it->kind != PromptSegment::Kind::Text) continue;
    const std::string& text = it->text;
    const std::size_t a_pos = text.find("A. ");
    if (a_pos == std::string::npos) return std::nullopt;
    const std::size_t a_end = text.find("\nB. ", a_pos);
    if (a_end == std::string::npos) return std::nullopt;
    const std::size_t b_start = a_end + 4;
    std::size_t b_end = text.find("\nASSISTANT:", b_start);
    if (b_end == std::string::npos) b_end = text.size();
    return std::make_pair(text.substr(a_pos + 3, a_end - (a_pos + 3)),
                          text.substr(b_start, b_end - b_start));
  }
  return std::nullopt;
}

/// Probe caption from a yes/no bundle ("Caption: ...\n" line in the last text
/// segment).
inline std::optional<std::string> probe_caption(const PromptBundle& bundle) {
  for (auto it = bundle.segments.rbegin(); it != bundle.segments.rend(); ++it) {
    if (it->kind != PromptSegment::Kind::Text) continue;
    const std::string& text = it->text;
    const std::size_t start = text.find("Caption: ");
    if (start == std::string::npos) return std::nullopt;
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) return std::nullopt;
    return text.substr(start + 9, end - (start + 9));
  }
  return std::nullopt;
}

inline std::optional<ImageRef> last_image(const PromptBundle& bundle) {
  for (auto it = bundle.segments.rbegin(); it != bundle.segments.rend(); ++it) {
    if (it->kind == PromptSegment::Kind::ImageSlot) return it->image;
  }
  return std::nullopt;
}

}  // namespace detail_mocks

/// Caption/image identity tables shared by the oracle-style mocks. Built once
/// from the loaded fixture items; the mocks stay pure functions of these
/// tables and their inputs.
struct FixtureTables {
  // caption text -> basis index (positives/caption_0/caption_1 get their item
  // basis, negatives get the shifted basis)
  std::unordered_map<std::string, std::size_t> caption_pos_basis;
  std::unordered_map<std::string, std::size_t> caption_neg_basis;
  // image locator -> basis index, and -> matching caption text
  std::unordered_map<std::string, std::size_t> image_basis;
  std::unordered_map<std::string, std::string> image_caption;
  // caption text -> true when it is a positive/matching caption
  std::unordered_map<std::string, bool> caption_is_positive;
  // (caption, image locator) -> whether the pair matches, for winoground probes
  std::unordered_map<std::string, bool> pair_match;
  std::size_t dim = 0;

  static std::string pair_key(const std::string& caption, const std::string& locator) {
    return caption + "\x1f" + locator;
  }

  void add_caption(const std::string& caption, std::size_t pos_basis, std::size_t neg_basis,
                   bool is_positive) {
    if (!caption_pos_basis.emplace(caption, pos_basis).second) {
      throw EvalError(ErrorCode::InvalidConfig,
                      "fixture captions must be unique for mock models ('" + caption + "')");
    }
    caption_neg_basis.emplace(caption, neg_basis);
    caption_is_positive.emplace(caption, is_positive);
  }

  static FixtureTables build(const std::vector<PairItem>& pairs,
                             const std::vector<WinogroundItem>& winoground) {
    FixtureTables t;
    std::size_t next = 0;
    auto fresh = [&next] { return next++; };
    // Reserve one extra basis per caption so negatives land orthogonal.
    for (const PairItem& item : pairs) {
      const std::size_t item_basis = fresh();
      const std::size_t off_basis = fresh();
      t.image_basis[item.image.locator] = item_basis;
      t.image_caption[item.image.locator] = item.caption_pos;
      t.add_caption(item.caption_pos, item_basis, off_basis, true);
      t.add_caption(item.caption_neg, off_basis, item_basis, false);
      t.pair_match.emplace(pair_key(item.caption_pos, item.image.locator), true);
      t.pair_match.emplace(pair_key(item.caption_neg, item.image.locator), false);
    }
    for (const WinogroundItem& item : winoground) {
      const std::size_t basis_0 = fresh();
      const std::size_t basis_1 = fresh();
      t.image_basis[item.image_0.locator] = basis_0;
      t.image_basis[item.image_1.locator] = basis_1;
      t.image_caption[item.image_0.locator] = item.caption_0;
      t.image_caption[item.image_1.locator] = item.caption_1;
      // anti-oracle swaps caption targets; the swapped basis is the sibling
      t.add_caption(item.caption_0, basis_0, basis_1, true);
      t.add_caption(item.caption_1, basis_1, basis_0, true);
      t.pair_match.emplace(pair_key(item.caption_0, item.image_0.locator), true);
      t.pair_match.emplace(pair_key(item.caption_1, item.image_1.locator), true);
      t.pair_match.emplace(pair_key(item.caption_0, item.image_1.locator), false);
      t.pair_match.emplace(pair_key(item.caption_1, item.image_0.locator), false);
    }
    t.dim = next == 0 ? 1 : next;
    return t;
  }
};

/// Embeds item k's image and positive caption onto the same one-hot basis
/// vector, so cosine scoring is exactly right everywhere. The anti variant
/// swaps the caption targets and is exactly wrong everywhere.
class OracleEmbeddingMock : public EmbeddingAdapter {
 public:
  OracleEmbeddingMock(ModelSpec spec, FixtureTables tables, bool anti = false)
      : EmbeddingAdapter(std::move(spec)), tables_(std::move(tables)), anti_(anti) {}

 protected:
  EmbeddingVector do_embed_text(const std::string& text) override {
    const auto& table = anti_ ? tables_.caption_neg_basis : tables_.caption_pos_basis;
    auto it = table.find(text);
    if (it == table.end()) {
      throw EvalError(ErrorCode::ServiceError, "oracle mock has no entry for caption '" + text + "'");
    }
    return one_hot(it->second);
  }

  EmbeddingVector do_embed_image(const ImageRef& image) override {
    auto it = tables_.image_basis.find(image.locator);
    if (it == tables_.image_basis.end()) {
      throw EvalError(ErrorCode::ServiceError,
                      "oracle mock has no entry for image '" + image.locator + "'");
    }
    return one_hot(it->second);
  }

 private:
  EmbeddingVector one_hot(std::size_t k) const {
    EmbeddingVector v;
    v.values.assign(tables_.dim, 0.0);
    v.values[k] = 1.0;
    return v;
  }

  FixtureTables tables_;
  bool anti_;
};

/// Bag-of-words text encoder: the base embedding sums per-token directions in
/// sorted token order, so word order cannot reach the decision. A tiny
/// deterministic jitter (1e-6, keyed on the full string, or on the locator
/// for images) breaks the exact ties that strict comparison would otherwise
/// score as losses: permutation pairs resolve like a fair coin instead.
class BowEmbeddingMock : public EmbeddingAdapter {
 public:
  static constexpr std::size_t kDim = 64;
  static constexpr double kTieBreak = 1e-6;

  BowEmbeddingMock(ModelSpec spec, FixtureTables tables)
      : EmbeddingAdapter(std::move(spec)), tables_(std::move(tables)) {}

 protected:
  EmbeddingVector do_embed_text(const std::string& text) override {
    return embed_tokens(text, "text:" + text);
  }

  EmbeddingVector do_embed_image(const ImageRef& image) override {
    auto it = tables_.image_caption.find(image.locator);
    if (it == tables_.image_caption.end()) {
      throw EvalError(ErrorCode::ServiceError,
                      "bow mock has no caption for image '" + image.locator + "'");
    }
    return embed_tokens(it->second, "image:" + image.locator);
  }

 private:
  EmbeddingVector embed_tokens(const std::string& text, const std::string& jitter_key) const {
    std::vector<std::string> tokens = detail::word_tokens(text);
    std::sort(tokens.begin(), tokens.end());
    std::vector<double> sum(kDim, 0.0);
    for (const std::string& token : tokens) {
      const auto dir = detail_mocks::token_direction(detail::fnv1a64(token), kDim);
      for (std::size_t i = 0; i < kDim; ++i) sum[i] += dir[i];
    }
    detail_mocks::normalize(sum);
    auto jitter = detail_mocks::token_direction(
        detail::fnv1a64(jitter_key) ^ 0x6a09e667f3bcc908ULL, kDim);
    detail_mocks::normalize(jitter);
    for (std::size_t i = 0; i < kDim; ++i) sum[i] += kTieBreak * jitter[i];
    detail_mocks::normalize(sum);
    return EmbeddingVector{std::move(sum)};
  }

  FixtureTables tables_;
};

/// Position-aware counterpart of the bag-of-words mock: permuting words moves
/// the embedding, so order fixtures score exactly 1.0.
class OrderSensitiveEmbeddingMock : public EmbeddingAdapter {
 public:
  static constexpr std::size_t kDim = 64;

  OrderSensitiveEmbeddingMock(ModelSpec spec, FixtureTables tables)
      : EmbeddingAdapter(std::move(spec)), tables_(std::move(tables)) {}

 protected:
  EmbeddingVector do_embed_text(const std::string& text) override { return embed_tokens(text); }

  EmbeddingVector do_embed_image(const ImageRef& image) override {
    auto it = tables_.image_caption.find(image.locator);
    if (it == tables_.image_caption.end()) {
      throw EvalError(ErrorCode::ServiceError,
                      "order mock has no caption for image '" + image.locator + "'");
    }
    return embed_tokens(it->second);
  }

 private:
  EmbeddingVector embed_tokens(const std::string& text) const {
    std::vector<double> sum(kDim, 0.0);
    std::size_t position = 0;
    for (const std::string& token : detail::word_tokens(text)) {
      const std::uint64_t key = detail::fnv1a64(token) ^ detail::splitmix64(position + 1);
      const auto dir = detail_mocks::token_direction(key, kDim);
      for (std::size_t i = 0; i < kDim; ++i) sum[i] += dir[i];
      ++position;
    }
    detail_mocks::normalize(sum);
    return EmbeddingVector{std::move(sum)};
  }

  FixtureTables tables_;
};

/// Identity of a bundle for scripting purposes: the flattened text plus the
/// image locators. The text alone renders all slots as <image> markers, so
/// probes differing only in the image would collide without the locators.
inline std::string scripted_bundle_key(const PromptBundle& bundle) {
  std::string key = bundle_text(bundle);
  for (const PromptSegment& seg : bundle.segments) {
    if (seg.kind == PromptSegment::Kind::ImageSlot) {
      key += '\x1e';
      key += seg.image->locator;
    }
  }
  return key;
}

/// Scripted generative model. Resolution order: exact bundle-key table,
/// then the behavior function, then the default result.
class ScriptedGenerativeMock : public GenerativeAdapter {
 public:
  using Behavior = std::function<std::optional<GenerationResult>(const PromptBundle&)>;

  explicit ScriptedGenerativeMock(ModelSpec spec) : GenerativeAdapter(std::move(spec)) {}

  void script(const PromptBundle& bundle, GenerationResult result) {
    table_[scripted_bundle_key(bundle)] = std::move(result);
  }

  void set_behavior(Behavior behavior) { behavior_ = std::move(behavior); }

  void set_default(GenerationResult result) { default_ = std::move(result); }

 protected:
  GenerationResult do_generate(const PromptBundle& bundle) override {
    if (auto it = table_.find(scripted_bundle_key(bundle)); it != table_.end()) return it->second;
    if (behavior_) {
      if (auto result = behavior_(bundle)) return *result;
    }
    if (default_) return *default_;
    throw EvalError(ErrorCode::ServiceError, "scripted mock has no entry for bundle");
  }

 private:
  std::unordered_map<std::string, GenerationResult> table_;
  Behavior behavior_;
  std::optional<GenerationResult> default_;
};

inline GenerationResult make_choice_result(LabelSide label) {
  GenerationResult result;
  result.text = std::string("The correct caption is: ") + label_char(label);
  result.rows = {LogitRow{0, {{"yes", 0.0}}}};
  return result;
}

inline GenerationResult make_yesno_result(bool match) {
  GenerationResult result;
  result.text = match ? "The image matches the caption. Yes" : "The image does not match. No";
  // L_yes separates matches from mismatches by a wide margin
  result.rows = {LogitRow{0, {{"yes", match ? 2.0 : -2.0}}}};
  return result;
}

/// Label-aware scripted model: answers A/B choice bundles with the letter
/// whose caption the fixture marks positive, and yes/no probes with the true
/// match value. `wrong_items` (caption texts) flips the answer, for building
/// partially-correct fixtures.
inline ScriptedGenerativeMock::Behavior correct_answer_behavior(
    FixtureTables tables, std::unordered_map<std::string, bool> wrong_captions = {}) {
  return [tables = std::move(tables), wrong_captions = std::move(wrong_captions)](
             const PromptBundle& bundle) -> std::optional<GenerationResult> {
    if (auto probe = detail_mocks::probe_caption(bundle)) {
      const auto image = detail_mocks::last_image(bundle);
      if (!image) return std::nullopt;
      auto it = tables.pair_match.find(FixtureTables::pair_key(*probe, image->locator));
      if (it == tables.pair_match.end()) return std::nullopt;
      bool match = it->second;
      if (wrong_captions.count(*probe)) match = !match;
      return make_yesno_result(match);
    }
    if (auto captions = detail_mocks::query_captions(bundle)) {
      auto a_it = tables.caption_is_positive.find(captions->first);
      auto b_it = tables.caption_is_positive.find(captions->second);
      if (a_it == tables.caption_is_positive.end() || b_it == tables.caption_is_positive.end()) {
        return std::nullopt;
      }
      LabelSide answer = a_it->second ? LabelSide::A : LabelSide::B;
      if (wrong_captions.count(captions->first) || wrong_captions.count(captions->second)) {
        answer = answer == LabelSide::A ? LabelSide::B : LabelSide::A;
      }
      return make_choice_result(answer);
    }
    return std::nullopt;
  };
}

/// Inverse of correct_answer_behavior: always the wrong letter / wrong match.
inline ScriptedGenerativeMock::Behavior wrong_answer_behavior(FixtureTables tables) {
  auto correct = correct_answer_behavior(std::move(tables));
  return [correct](const PromptBundle& bundle) -> std::optional<GenerationResult> {
    auto result = correct(bundle);
    if (!result) return std::nullopt;
    if (auto probe = detail_mocks::probe_caption(bundle)) {
      const bool said_yes = parse_yes_no(result->text) == YesNoOutcome::Yes;
      return make_yesno_result(!said_yes);
    }
    const Choice choice = parse_choice(result->text);
    return make_choice_result(choice == Choice::A ? LabelSide::B : LabelSide::A);
  };
}

/// Decorators that tally calls into an external counter, for asserting that a
/// warm cache issues no adapter calls at all.
class CountingEmbeddingAdapter : public EmbeddingAdapter {
 public:
  CountingEmbeddingAdapter(std::unique_ptr<EmbeddingAdapter> inner,
                           std::shared_ptr<std::atomic<std::uint64_t>> counter)
      : EmbeddingAdapter(inner->spec()), inner_(std::move(inner)), counter_(std::move(counter)) {}

 protected:
  EmbeddingVector do_embed_text(const std::string& text) override {
    counter_->fetch_add(1);
    return inner_->embed_text(text);
  }
  EmbeddingVector do_embed_image(const ImageRef& image) override {
    counter_->fetch_add(1);
    return inner_->embed_image(image);
  }

 private:
  std::unique_ptr<EmbeddingAdapter> inner_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

class CountingGenerativeAdapter : public GenerativeAdapter {
 public:
  CountingGenerativeAdapter(std::unique_ptr<GenerativeAdapter> inner,
                            std::shared_ptr<std::atomic<std::uint64_t>> counter)
      : GenerativeAdapter(inner->spec()), inner_(std::move(inner)), counter_(std::move(counter)) {}

 protected:
  GenerationResult do_generate(const PromptBundle& bundle) override {
    counter_->fetch_add(1);
    return inner_->generate(bundle);
  }

 private:
  std::unique_ptr<GenerativeAdapter> inner_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

}  // namespace compeval
