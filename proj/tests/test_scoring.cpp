#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "compeval/scoring.hpp"

using namespace compeval;

namespace {

// Independent check of the winoground conditions: per image pick the
// strictly-best caption, per caption the strictly-best image, and compare
// against the expected winner assignments.
WinogroundScores wino_brute_force(const SimilarityMatrix2x2& m) {
  const double by_caption[2][2] = {{m.s00, m.s01}, {m.s10, m.s11}};
  auto best_caption_for_image = [&](int j) -> int {
    if (by_caption[0][j] > by_caption[1][j]) return 0;
    if (by_caption[1][j] > by_caption[0][j]) return 1;
    return -1;  // tie
  };
  auto best_image_for_caption = [&](int i) -> int {
    if (by_caption[i][0] > by_caption[i][1]) return 0;
    if (by_caption[i][1] > by_caption[i][0]) return 1;
    return -1;
  };
  WinogroundScores scores;
  scores.text_correct = best_caption_for_image(0) == 0 && best_caption_for_image(1) == 1;
  scores.image_correct = best_image_for_caption(0) == 0 && best_image_for_caption(1) == 1;
  scores.group_correct = scores.text_correct && scores.image_correct;
  return scores;
}

double lyes_brute_force(const std::vector<LogitRow>& rows, const std::string& token, double floor) {
  long double sum = 0.0L;
  for (const LogitRow& row : rows) {
    bool found = false;
    for (const auto& [t, score] : row.token_scores) {
      if (t == token) {
        sum += score;
        found = true;
        break;
      }
    }
    if (!found) sum += floor;
  }
  return static_cast<double>(sum / static_cast<long double>(rows.size()));
}

}  // namespace

TEST_CASE("cosine similarity on unit vectors") {
  REQUIRE(cosine_similarity({{1, 0}}, {{1, 0}}) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(cosine_similarity({{1, 0}}, {{0.6, 0.8}}) == Catch::Approx(0.6).margin(1e-12));
}

TEST_CASE("cosine similarity against high-precision reference") {
  const EmbeddingVector u{{1, 2, 3}};
  const EmbeddingVector v{{4, 5, 6}};
  // reference via long double dot/norms
  long double dot = 0, nu = 0, nv = 0;
  for (int i = 0; i < 3; ++i) {
    dot += static_cast<long double>(u.values[i]) * v.values[i];
    nu += static_cast<long double>(u.values[i]) * u.values[i];
    nv += static_cast<long double>(v.values[i]) * v.values[i];
  }
  const double expected = static_cast<double>(dot / (std::sqrt(nu) * std::sqrt(nv)));
  REQUIRE(cosine_similarity(u, v) == Catch::Approx(expected).margin(1e-12));
  REQUIRE(cosine_similarity(u, v) == Catch::Approx(0.974631846).margin(1e-9));
}

TEST_CASE("cosine similarity rejects bad input") {
  REQUIRE_THROWS_AS(cosine_similarity({{1, 2}}, {{1, 2, 3}}), EvalError);
  REQUIRE_THROWS_AS(cosine_similarity({{0, 0}}, {{1, 2}}), EvalError);
  try {
    cosine_similarity({{0, 0}}, {{1, 0}});
    FAIL("expected ZeroNorm");
  } catch (const EvalError& e) {
    REQUIRE(e.code() == ErrorCode::ZeroNorm);
  }
  try {
    cosine_similarity({{1}}, {{1, 0}});
    FAIL("expected DimensionMismatch");
  } catch (const EvalError& e) {
    REQUIRE(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("cosine similarity properties on random vectors") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t dim = 2 + rng() % 16;
    EmbeddingVector u, v;
    for (std::size_t i = 0; i < dim; ++i) {
      u.values.push_back(dist(rng));
      v.values.push_back(dist(rng));
    }
    u.values[rng() % dim] += 1.0;  // keep norms clear of zero
    v.values[rng() % dim] += 1.0;
    const double uu = cosine_similarity(u, u);
    REQUIRE(std::abs(uu - 1.0) < 1e-9);
    const double uv = cosine_similarity(u, v);
    REQUIRE(std::abs(uv) <= 1.0 + 1e-12);
    REQUIRE(uv == cosine_similarity(v, u));  // same summation order both ways
  }
}

TEST_CASE("pairwise correctness is strict") {
  REQUIRE(pairwise_correct(0.8, 0.3));
  REQUIRE_FALSE(pairwise_correct(0.3, 0.8));
  REQUIRE_FALSE(pairwise_correct(0.5, 0.5));
}

TEST_CASE("pairwise decisions are scale invariant") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = dist(rng);
    const double b = dist(rng);
    const double alpha = scale(rng);
    REQUIRE(pairwise_correct(alpha * a, alpha * b) == pairwise_correct(a, b));
  }
}

TEST_CASE("accuracy") {
  REQUIRE(accuracy({true, false, true}) == Catch::Approx(2.0 / 3.0));
  REQUIRE(accuracy(std::vector<bool>(7, true)) == 1.0);
  try {
    accuracy({});
    FAIL("expected EmptySequence");
  } catch (const EvalError& e) {
    REQUIRE(e.code() == ErrorCode::EmptySequence);
  }
}

TEST_CASE("winoground scores on pinned matrices") {
  {
    const auto s = winoground_item_scores({0.9, 0.2, 0.1, 0.8});
    REQUIRE(s.text_correct);
    REQUIRE(s.image_correct);
    REQUIRE(s.group_correct);
  }
  {
    // 0.8 > 0.85 fails the text condition, image still holds
    const auto s = winoground_item_scores({0.9, 0.85, 0.1, 0.8});
    REQUIRE_FALSE(s.text_correct);
    REQUIRE(s.image_correct);
    REQUIRE_FALSE(s.group_correct);
  }
  {
    const auto s = winoground_item_scores({0.5, 0.5, 0.5, 0.5});
    REQUIRE_FALSE(s.text_correct);
    REQUIRE_FALSE(s.image_correct);
    REQUIRE_FALSE(s.group_correct);
  }
}

TEST_CASE("winoground scores match the brute-force enumerator") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::uniform_int_distribution<int> coarse(0, 3);
  for (int trial = 0; trial < 500; ++trial) {
    SimilarityMatrix2x2 m;
    if (trial % 3 == 0) {
      // quantized values so ties actually occur
      m = {coarse(rng) * 0.5, coarse(rng) * 0.5, coarse(rng) * 0.5, coarse(rng) * 0.5};
    } else {
      m = {dist(rng), dist(rng), dist(rng), dist(rng)};
    }
    const auto got = winoground_item_scores(m);
    const auto expected = wino_brute_force(m);
    REQUIRE(got == expected);
    REQUIRE((!got.group_correct || (got.text_correct && got.image_correct)));
  }
}

TEST_CASE("winoground scores are invariant to shift and positive scale") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const SimilarityMatrix2x2 m{dist(rng), dist(rng), dist(rng), dist(rng)};
    const double c = dist(rng);
    const double a = scale(rng);
    const SimilarityMatrix2x2 shifted{m.s00 + c, m.s01 + c, m.s10 + c, m.s11 + c};
    const SimilarityMatrix2x2 scaled{a * m.s00, a * m.s01, a * m.s10, a * m.s11};
    REQUIRE(winoground_item_scores(shifted) == winoground_item_scores(m));
    REQUIRE(winoground_item_scores(scaled) == winoground_item_scores(m));
  }
}

TEST_CASE("mean token logit on pinned rows") {
  const std::vector<LogitRow> four = {{0, {{"yes", 2.0}}},
                                      {1, {{"yes", 0.0}}},
                                      {2, {{"yes", 1.0}}},
                                      {3, {{"yes", 1.0}}}};
  REQUIRE(mean_token_logit(four, "yes", -20.0) == Catch::Approx(1.0));
  REQUIRE(mean_token_logit({{0, {{"yes", -3.5}}}}, "yes", -20.0) == Catch::Approx(-3.5));
  // floor substitution at the position missing the target
  const std::vector<LogitRow> mixed = {{0, {{"yes", 1.0}}}, {1, {{"no", 0.2}}}};
  REQUIRE(mean_token_logit(mixed, "yes", -10.0) == Catch::Approx(-4.5));
  try {
    mean_token_logit({}, "yes", -20.0);
    FAIL("expected EmptyRows");
  } catch (const EvalError& e) {
    REQUIRE(e.code() == ErrorCode::EmptyRows);
  }
}

TEST_CASE("mean token logit matches brute-force accumulation") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> score(-15.0, 5.0);
  const std::vector<std::string> vocab = {"yes", "no", "Yes", " maybe", "the", "a"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t len = 1 + rng() % 64;
    std::vector<LogitRow> rows;
    for (std::size_t p = 0; p < len; ++p) {
      LogitRow row;
      row.position = static_cast<int>(p);
      const std::size_t entries = 1 + rng() % vocab.size();
      for (std::size_t k = 0; k < entries; ++k) {
        row.token_scores[vocab[rng() % vocab.size()]] = score(rng);
      }
      rows.push_back(std::move(row));
    }
    const double floor = score(rng);
    REQUIRE(mean_token_logit(rows, "yes", floor) ==
            Catch::Approx(lyes_brute_force(rows, "yes", floor)).margin(1e-9));
  }
}

TEST_CASE("parse_choice picks the last standalone letter") {
  REQUIRE(parse_choice("A") == Choice::A);
  REQUIRE(parse_choice("...The correct caption is: B") == Choice::B);
  REQUIRE(parse_choice("Both captions describe the scene") == Choice::Unparseable);
  REQUIRE(parse_choice("") == Choice::Unparseable);
  // reasoning mentions both letters before the final answer
  REQUIRE(parse_choice("A. cat on mat\nB. mat on cat\nThe correct caption is: B") == Choice::B);
  REQUIRE(parse_choice("I considered B at first, but the answer is A") == Choice::A);
  // case-sensitive, word-boundary delimited
  REQUIRE(parse_choice("BANANA") == Choice::Unparseable);
  REQUIRE(parse_choice("a b") == Choice::Unparseable);
  REQUIRE(parse_choice("(B)") == Choice::B);
}

TEST_CASE("parse_choice handles every golden answer template") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const bool a = (rng() & 1) == 0;
    const std::string text =
        std::string("The key elements match caption ") + (a ? "A" : "B") +
        ". The correct caption is: " + (a ? "A" : "B");
    REQUIRE(parse_choice(text) == (a ? Choice::A : Choice::B));
  }
}

TEST_CASE("parse_yes_no finds the first standalone word") {
  REQUIRE(parse_yes_no("Yes, the caption matches.") == YesNoOutcome::Yes);
  REQUIRE(parse_yes_no("no") == YesNoOutcome::No);
  REQUIRE(parse_yes_no("The image shows a dog.") == YesNoOutcome::Unparseable);
  REQUIRE(parse_yes_no("It does not match. Yes I am sure.") == YesNoOutcome::Yes);
  REQUIRE(parse_yes_no("no, wait, yes") == YesNoOutcome::No);
  REQUIRE(parse_yes_no("<Yes>") == YesNoOutcome::Yes);
  REQUIRE(parse_yes_no("notable yesterday") == YesNoOutcome::Unparseable);
}
