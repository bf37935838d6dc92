#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compeval/errors.hpp"

namespace compeval {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// s_ij = score of caption i against image j.
struct SimilarityMatrix2x2 {
  double s00 = 0.0;
  double s01 = 0.0;
  double s10 = 0.0;
  double s11 = 0.0;
};

struct WinogroundScores {
  bool text_correct = false;
  bool image_correct = false;
  bool group_correct = false;

  bool operator==(const WinogroundScores&) const = default;
};

/// Sparse view of one generated position: only the tokens the model reported
/// scores for. Positions within a result are consecutive from 0.
struct LogitRow {
  int position = 0;
  std::map<std::string, double> token_scores;

  bool operator==(const LogitRow&) const = default;
};

enum class Choice { A, B, Unparseable };
enum class YesNoOutcome { Yes, No, Unparseable };

inline double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.values.empty() || u.values.size() != v.values.size()) {
    throw EvalError(ErrorCode::DimensionMismatch,
                    "embedding dimensions " + std::to_string(u.values.size()) + " vs " +
                        std::to_string(v.values.size()));
  }
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw EvalError(ErrorCode::ZeroNorm, "cosine similarity of a zero vector");
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// Strict comparison: ties count as incorrect, so a constant scorer earns 0.
inline bool pairwise_correct(double score_pos, double score_neg) {
  return score_pos > score_neg;
}

inline double accuracy(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) {
    throw EvalError(ErrorCode::EmptySequence, "accuracy over empty outcome sequence");
  }
  std::size_t correct = 0;
  for (bool b : outcomes) {
    if (b) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

/// Text: each image's matching caption outscores the other caption.
/// Image: each caption's matching image outscores the other image.
/// Group: both. All inequalities strict.
inline WinogroundScores winoground_item_scores(const SimilarityMatrix2x2& m) {
  WinogroundScores out;
  out.text_correct = (m.s00 > m.s10) && (m.s11 > m.s01);
  out.image_correct = (m.s00 > m.s01) && (m.s11 > m.s10);
  out.group_correct = out.text_correct && out.image_correct;
  return out;
}

/// Mean over generated positions of the target token's log-score. Positions
/// where the target is absent from the reported top-k contribute `floor`
/// instead of shrinking the sequence length.
inline double mean_token_logit(const std::vector<LogitRow>& rows, const std::string& target_token,
                               double floor) {
  if (rows.empty()) {
    throw EvalError(ErrorCode::EmptyRows, "mean_token_logit over empty rows");
  }
  double sum = 0.0;
  for (const LogitRow& row : rows) {
    auto it = row.token_scores.find(target_token);
    sum += (it != row.token_scores.end()) ? it->second : floor;
  }
  return sum / static_cast<double>(rows.size());
}

namespace detail_scoring {

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

}  // namespace detail_scoring

/// Returns the LAST standalone 'A' or 'B' token (case-sensitive). The prompt
/// asks for step-by-step reasoning before the final answer, so earlier A/B
/// occurrences inside the reasoning or the echoed caption list lose to the
/// stated final answer.
inline Choice parse_choice(std::string_view text) {
  std::optional<Choice> last;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != 'A' && c != 'B') continue;
    const bool left_ok = (i == 0) || !detail_scoring::is_word_char(text[i - 1]);
    const bool right_ok = (i + 1 == text.size()) || !detail_scoring::is_word_char(text[i + 1]);
    if (left_ok && right_ok) {
      last = (c == 'A') ? Choice::A : Choice::B;
    }
  }
  return last.value_or(Choice::Unparseable);
}

/// Case-insensitive search for standalone "yes"/"no"; the FIRST match wins.
/// Baseline method only; its failure modes are the reason mean_token_logit
/// exists.
inline YesNoOutcome parse_yes_no(std::string_view text) {
  const auto matches_at = [&](std::size_t i, std::string_view word) {
    if (i + word.size() > text.size()) return false;
    for (std::size_t k = 0; k < word.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(text[i + k])) != word[k]) return false;
    }
    const bool left_ok = (i == 0) || !detail_scoring::is_word_char(text[i - 1]);
    const bool right_ok =
        (i + word.size() == text.size()) || !detail_scoring::is_word_char(text[i + word.size()]);
    return left_ok && right_ok;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (matches_at(i, "yes")) return YesNoOutcome::Yes;
    if (matches_at(i, "no")) return YesNoOutcome::No;
  }
  return YesNoOutcome::Unparseable;
}

}  // namespace compeval
