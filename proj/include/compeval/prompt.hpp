#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "compeval/dataset.hpp"
#include "compeval/demoforge.hpp"
#include "compeval/detail/util.hpp"
#include "compeval/errors.hpp"

namespace compeval {

enum class LabelSide { A, B };

inline char label_char(LabelSide side) { return side == LabelSide::A ? 'A' : 'B'; }

/// Which letter carries the positive caption for the query. A bijection by
/// construction: the other letter carries the negative.
struct QueryLabels {
  LabelSide positive_at = LabelSide::A;

  bool operator==(const QueryLabels&) const = default;
};

struct PromptSegment {
  enum class Kind { Text, ImageSlot };
  Kind kind = Kind::Text;
  std::string text;               // empty for ImageSlot
  std::optional<ImageRef> image;  // present only for ImageSlot

  static PromptSegment make_text(std::string text) {
    PromptSegment seg;
    seg.kind = Kind::Text;
    seg.text = std::move(text);
    return seg;
  }
  static PromptSegment make_image(ImageRef image) {
    PromptSegment seg;
    seg.kind = Kind::ImageSlot;
    seg.image = std::move(image);
    return seg;
  }
};

struct PromptBundle {
  std::vector<PromptSegment> segments;
  QueryLabels label_map;
  std::vector<LabelSide> demo_label_maps;  // correct letter per demonstration, bank order

  std::size_t image_slot_count() const {
    std::size_t n = 0;
    for (const PromptSegment& seg : segments) {
      if (seg.kind == PromptSegment::Kind::ImageSlot) ++n;
    }
    return n;
  }
};

/// A demonstration with its captions already shuffled onto letters.
struct LabeledDemonstration {
  ImageRef image;
  std::string caption_a;
  std::string caption_b;
  LabelSide correct_label = LabelSide::A;

  bool operator==(const LabeledDemonstration&) const = default;
};

/// Places each demo's correct caption at A or B by a seeded draw, so neither
/// letter accumulates bias (A in particular is a common token).
inline std::vector<LabeledDemonstration> assign_labels(const std::vector<Demonstration>& demos,
                                                       std::uint64_t seed) {
  if (demos.empty()) {
    throw EvalError(ErrorCode::EmptyDemos, "assign_labels over empty demo sequence");
  }
  std::vector<LabeledDemonstration> labeled;
  labeled.reserve(demos.size());
  std::uint64_t state = detail::splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  for (const Demonstration& demo : demos) {
    state = detail::splitmix64(state);
    const bool correct_at_a = (state & 1) == 0;
    LabeledDemonstration out;
    out.image = demo.image;
    out.correct_label = correct_at_a ? LabelSide::A : LabelSide::B;
    out.caption_a = correct_at_a ? demo.caption_correct : demo.caption_wrong;
    out.caption_b = correct_at_a ? demo.caption_wrong : demo.caption_correct;
    labeled.push_back(std::move(out));
  }
  return labeled;
}

/// Seeded per-item A/B assignment for the query itself, keyed on the item id
/// so the draw is independent of iteration order.
inline QueryLabels assign_query_labels(const std::string& item_id, std::uint64_t seed) {
  const std::uint64_t h = detail::splitmix64(detail::fnv1a64(item_id) ^ detail::splitmix64(seed));
  return QueryLabels{(h & 1) == 0 ? LabelSide::A : LabelSide::B};
}

namespace detail_prompt {

inline constexpr const char* kDemoQuestion = "USER: Does the image match the caption?\n";
inline constexpr const char* kFewShotQueryInstruction =
    "USER: Similarly, given an image and two captions choose the correct caption. Think "
    "step-by-step and analyze the captions against the image. Begin by describing the key "
    "elements visible in the image. Then, compare these elements with the details mentioned in "
    "the captions. Clearly state your final answer only in a single character, either A or B.\n";
inline constexpr const char* kZeroShotQuestion =
    " Given this image and two candidate captions (A and B), which caption is the better "
    "description of the given image? Clearly state your final answer only in a single character, "
    "either A or B.\n";
inline constexpr const char* kYesNoInstruction =
    "After providing a brief explanation of your reasoning, clearly state your final answer as "
    "<Yes> or <No>.";

inline void append_demo_block(PromptBundle& bundle, const LabeledDemonstration& demo) {
  bundle.segments.push_back(PromptSegment::make_text(std::string(kDemoQuestion) + "A. " +
                                                     demo.caption_a + "\nB. " + demo.caption_b +
                                                     "\n"));
  bundle.segments.push_back(PromptSegment::make_image(demo.image));
  bundle.segments.push_back(PromptSegment::make_text(
      std::string(". The correct caption is: ") + label_char(demo.correct_label) + "\n"));
  bundle.demo_label_maps.push_back(demo.correct_label);
}

inline void check_shots(int shots, std::size_t available) {
  if (shots != 1 && shots != 5) {
    throw EvalError(ErrorCode::InvalidShotCount,
                    "shot count " + std::to_string(shots) + " unsupported (1 or 5)");
  }
  if (available < static_cast<std::size_t>(shots)) {
    throw EvalError(ErrorCode::NotEnoughDemos, "need " + std::to_string(shots) + " demos, have " +
                                                   std::to_string(available));
  }
}

inline std::vector<LabeledDemonstration> select_demos(const std::vector<LabeledDemonstration>& demos,
                                                      int shots, std::size_t one_shot_index) {
  if (shots == 1) {
    if (one_shot_index >= demos.size()) {
      throw EvalError(ErrorCode::NotEnoughDemos,
                      "one-shot demo index " + std::to_string(one_shot_index) + " out of range");
    }
    return {demos[one_shot_index]};
  }
  return std::vector<LabeledDemonstration>(demos.begin(), demos.begin() + shots);
}

}  // namespace detail_prompt

/// Few-shot A/B bundle: demo blocks in bank order, then the step-by-step
/// query block, ending with "ASSISTANT:". One image slot per demo plus one
/// for the query.
inline PromptBundle render_fewshot_prompt(const std::vector<LabeledDemonstration>& demos,
                                          const std::string& query_caption_pos,
                                          const std::string& query_caption_neg,
                                          const ImageRef& query_image, QueryLabels query_labels,
                                          int shots, std::size_t one_shot_index = 0) {
  detail_prompt::check_shots(shots, demos.size());
  PromptBundle bundle;
  bundle.label_map = query_labels;
  for (const LabeledDemonstration& demo :
       detail_prompt::select_demos(demos, shots, one_shot_index)) {
    detail_prompt::append_demo_block(bundle, demo);
  }
  const bool pos_at_a = query_labels.positive_at == LabelSide::A;
  const std::string& caption_a = pos_at_a ? query_caption_pos : query_caption_neg;
  const std::string& caption_b = pos_at_a ? query_caption_neg : query_caption_pos;
  bundle.segments.push_back(
      PromptSegment::make_text(detail_prompt::kFewShotQueryInstruction));
  bundle.segments.push_back(PromptSegment::make_image(query_image));
  bundle.segments.push_back(PromptSegment::make_text(". The caption is: \nA. " + caption_a +
                                                     "\nB. " + caption_b + "\nASSISTANT:"));
  return bundle;
}

inline PromptBundle render_fewshot_prompt(const std::vector<LabeledDemonstration>& demos,
                                          const PairItem& item, QueryLabels query_labels, int shots,
                                          std::size_t one_shot_index = 0) {
  return render_fewshot_prompt(demos, item.caption_pos, item.caption_neg, item.image, query_labels,
                               shots, one_shot_index);
}

/// Zero-shot choice bundle: one image slot, the two captions placed per
/// query_labels.
inline PromptBundle render_zeroshot_choice_prompt(const PairItem& item, QueryLabels query_labels) {
  PromptBundle bundle;
  bundle.label_map = query_labels;
  const bool pos_at_a = query_labels.positive_at == LabelSide::A;
  const std::string& caption_a = pos_at_a ? item.caption_pos : item.caption_neg;
  const std::string& caption_b = pos_at_a ? item.caption_neg : item.caption_pos;
  bundle.segments.push_back(PromptSegment::make_text("USER: "));
  bundle.segments.push_back(PromptSegment::make_image(item.image));
  bundle.segments.push_back(PromptSegment::make_text(
      std::string(detail_prompt::kZeroShotQuestion) + "A. " + caption_a + "\nB. " + caption_b));
  return bundle;
}

/// One yes/no probe for a single (caption, image) pair.
inline PromptBundle render_winoground_yesno_prompt(const std::string& caption,
                                                   const ImageRef& image) {
  PromptBundle bundle;
  bundle.segments.push_back(PromptSegment::make_text("USER: "));
  bundle.segments.push_back(PromptSegment::make_image(image));
  bundle.segments.push_back(PromptSegment::make_text(
      std::string(" Does the image match the caption?\nCaption: ") + caption + "\n" +
      detail_prompt::kYesNoInstruction));
  return bundle;
}

/// Few-shot variant of the yes/no probe: A/B demonstrations are prepended
/// unchanged ahead of the probe block.
inline PromptBundle render_fewshot_yesno_prompt(const std::vector<LabeledDemonstration>& demos,
                                                const std::string& caption, const ImageRef& image,
                                                int shots, std::size_t one_shot_index = 0) {
  detail_prompt::check_shots(shots, demos.size());
  PromptBundle bundle;
  for (const LabeledDemonstration& demo :
       detail_prompt::select_demos(demos, shots, one_shot_index)) {
    detail_prompt::append_demo_block(bundle, demo);
  }
  bundle.segments.push_back(PromptSegment::make_text("USER: "));
  bundle.segments.push_back(PromptSegment::make_image(image));
  bundle.segments.push_back(PromptSegment::make_text(
      std::string(" Does the image match the caption?\nCaption: ") + caption + "\n" +
      detail_prompt::kYesNoInstruction));
  return bundle;
}

/// Flattened text view: image slots render as <image1>..<imageN> for leading
/// slots and <image> for the final (query) slot. Golden files pin this form.
inline std::string bundle_text(const PromptBundle& bundle) {
  const std::size_t slots = bundle.image_slot_count();
  std::string out;
  std::size_t slot_index = 0;
  for (const PromptSegment& seg : bundle.segments) {
    if (seg.kind == PromptSegment::Kind::Text) {
      out += seg.text;
    } else {
      ++slot_index;
      if (slot_index == slots) {
        out += "<image>";
      } else {
        out += "<image" + std::to_string(slot_index) + ">";
      }
    }
  }
  return out;
}

/// Image refs in slot order, for adapters that attach them separately.
inline std::vector<ImageRef> bundle_images(const PromptBundle& bundle) {
  std::vector<ImageRef> refs;
  for (const PromptSegment& seg : bundle.segments) {
    if (seg.kind == PromptSegment::Kind::ImageSlot) refs.push_back(*seg.image);
  }
  return refs;
}

}  // namespace compeval
