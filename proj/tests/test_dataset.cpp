#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "compeval/dataset.hpp"
#include "fixtures.hpp"

using namespace compeval;

namespace {

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  out << line << "\n";
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const EvalError& e) {
    return e.code();
  }
  throw std::runtime_error("expected an EvalError");
}

}  // namespace

TEST_CASE("pairwise manifest loads in file order") {
  testfx::TempDir dir("ds_pair");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::SugarCrepe, 3);
  const auto items = load_pairwise_benchmark(fixture.manifest);
  REQUIRE(items.size() == 3);
  REQUIRE(items == fixture.items);
  for (const auto& item : items) REQUIRE(item.benchmark == Benchmark::SugarCrepe);
}

TEST_CASE("pairwise manifest with every SugarCrepe subset the same") {
  testfx::TempDir dir("ds_addobj");
  std::filesystem::create_directories(dir.path / "images");
  std::vector<PairItem> items;
  for (int i = 0; i < 3; ++i) {
    const auto image = dir.path / "images" / ("i" + std::to_string(i) + ".png");
    testfx::write_png(image, i);
    items.push_back({"it-" + std::to_string(i),
                     {image.string(), "image/png"},
                     "pos " + std::to_string(i),
                     "neg " + std::to_string(i),
                     Benchmark::SugarCrepe,
                     "add_obj"});
  }
  const auto manifest = dir.path / "m.jsonl";
  write_pairwise_manifest(manifest, items);
  const auto loaded = load_pairwise_benchmark(manifest);
  REQUIRE(loaded.size() == 3);
  for (const auto& item : loaded) REQUIRE(item.subset == "add_obj");
}

TEST_CASE("unknown subset fails with the offending line") {
  testfx::TempDir dir("ds_subset");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::SugarCrepe, 1);
  json row = to_json(fixture.items[0]);
  row["item_id"] = "bad";
  row["subset"] = "swap_color";
  append_line(fixture.manifest, row.dump());
  try {
    load_pairwise_benchmark(fixture.manifest);
    FAIL("expected UnknownSubset");
  } catch (const EvalError& e) {
    REQUIRE(e.code() == ErrorCode::UnknownSubset);
    REQUIRE(e.line_no() == 2);
  }
}

TEST_CASE("equal captions fail validation on the right row") {
  testfx::TempDir dir("ds_capeq");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::ARO, 1);
  json row = to_json(fixture.items[0]);
  row["item_id"] = "same";
  row["caption_neg"] = row["caption_pos"];
  append_line(fixture.manifest, row.dump());
  try {
    load_pairwise_benchmark(fixture.manifest);
    FAIL("expected InvariantViolation");
  } catch (const EvalError& e) {
    REQUIRE(e.code() == ErrorCode::InvariantViolation);
    REQUIRE(e.line_no() == 2);
  }
}

TEST_CASE("pairwise loader error taxonomy") {
  testfx::TempDir dir("ds_errors");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::ARO, 2);

  SECTION("missing field") {
    json row = to_json(fixture.items[0]);
    row["item_id"] = "broken";
    row.erase("caption_neg");
    append_line(fixture.manifest, row.dump());
    REQUIRE(code_of([&] { load_pairwise_benchmark(fixture.manifest); }) ==
            ErrorCode::MissingField);
  }
  SECTION("duplicate id") {
    append_line(fixture.manifest, to_json(fixture.items[0]).dump());
    REQUIRE(code_of([&] { load_pairwise_benchmark(fixture.manifest); }) == ErrorCode::DuplicateId);
  }
  SECTION("unresolvable image") {
    json row = to_json(fixture.items[0]);
    row["item_id"] = "ghost";
    row["image"] = {{"locator", (dir.path / "nope.png").string()}, {"media_type", "image/png"}};
    append_line(fixture.manifest, row.dump());
    REQUIRE(code_of([&] { load_pairwise_benchmark(fixture.manifest); }) ==
            ErrorCode::ImageUnresolvable);
  }
  SECTION("unknown benchmark name") {
    json row = to_json(fixture.items[0]);
    row["item_id"] = "bench";
    row["benchmark"] = "Coco";
    append_line(fixture.manifest, row.dump());
    REQUIRE(code_of([&] { load_pairwise_benchmark(fixture.manifest); }) ==
            ErrorCode::UnknownBenchmark);
  }
  SECTION("malformed json") {
    append_line(fixture.manifest, "{not json");
    REQUIRE(code_of([&] { load_pairwise_benchmark(fixture.manifest); }) ==
            ErrorCode::MalformedRecord);
  }
  SECTION("missing file") {
    REQUIRE(code_of([&] { load_pairwise_benchmark(dir.path / "absent.jsonl"); }) ==
            ErrorCode::FileNotFound);
  }
}

TEST_CASE("winoground manifest of 400 rows loads as 400 items") {
  testfx::TempDir dir("ds_wg400");
  const auto fixture = testfx::make_winoground_fixture(dir.path, 400);
  const auto items = load_winoground(fixture.manifest);
  REQUIRE(items.size() == 400);
  REQUIRE(items == fixture.items);
}

TEST_CASE("empty winoground manifest is an empty sequence") {
  testfx::TempDir dir("ds_empty");
  const auto manifest = dir.path / "empty.jsonl";
  detail::atomic_write_file(manifest, "");
  REQUIRE(load_winoground(manifest).empty());
  REQUIRE(load_pairwise_benchmark(manifest).empty());
}

TEST_CASE("winoground row without image_1 is a MissingField") {
  testfx::TempDir dir("ds_wgmiss");
  const auto fixture = testfx::make_winoground_fixture(dir.path, 1);
  json row = to_json(fixture.items[0]);
  row["item_id"] = "broken";
  row.erase("image_1");
  append_line(fixture.manifest, row.dump());
  try {
    load_winoground(fixture.manifest);
    FAIL("expected MissingField");
  } catch (const EvalError& e) {
    REQUIRE(e.code() == ErrorCode::MissingField);
    REQUIRE(e.field() == "image_1");
  }
}

TEST_CASE("loading is deterministic") {
  testfx::TempDir dir("ds_det");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::ARO, 20);
  REQUIRE(load_pairwise_benchmark(fixture.manifest) == load_pairwise_benchmark(fixture.manifest));
}

TEST_CASE("manifest round-trips through serialization") {
  testfx::TempDir dir("ds_round");
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto fixture = testfx::make_pair_fixture(
        dir.path / std::to_string(trial), trial % 2 == 0 ? Benchmark::ARO : Benchmark::SugarCrepe,
        1 + rng() % 12, static_cast<std::uint32_t>(trial * 100));
    const auto once = load_pairwise_benchmark(fixture.manifest);
    const auto rewritten = dir.path / std::to_string(trial) / "rewritten.jsonl";
    write_pairwise_manifest(rewritten, once);
    REQUIRE(load_pairwise_benchmark(rewritten) == once);
  }
  const auto wg = testfx::make_winoground_fixture(dir.path / "wg", 17);
  const auto once = load_winoground(wg.manifest);
  const auto rewritten = dir.path / "wg" / "rewritten.jsonl";
  write_winoground_manifest(rewritten, once);
  REQUIRE(load_winoground(rewritten) == once);
}

TEST_CASE("image refs accept bare string locators") {
  testfx::TempDir dir("ds_bare");
  const auto image = dir.path / "x.png";
  testfx::write_png(image, 1);
  const auto manifest = dir.path / "m.jsonl";
  detail::atomic_write_file(
      manifest, json{{"item_id", "s1"},
                     {"image", image.string()},
                     {"caption_pos", "a"},
                     {"caption_neg", "b"},
                     {"benchmark", "ARO"},
                     {"subset", "VG-Relation"}}
                        .dump() +
                    "\n");
  const auto items = load_pairwise_benchmark(manifest);
  REQUIRE(items.size() == 1);
  REQUIRE(items[0].image.locator == image.string());
  REQUIRE(items[0].image.media_type == "image/png");
}

TEST_CASE("url locators skip the eager existence check") {
  testfx::TempDir dir("ds_url");
  const auto manifest = dir.path / "m.jsonl";
  detail::atomic_write_file(
      manifest, json{{"item_id", "u1"},
                     {"image", "https://example.org/images/1.png"},
                     {"caption_pos", "a"},
                     {"caption_neg", "b"},
                     {"benchmark", "ARO"},
                     {"subset", "VG-Attribution"}}
                        .dump() +
                    "\n");
  REQUIRE(load_pairwise_benchmark(manifest).size() == 1);
}

TEST_CASE("validate_manifest counts per subset") {
  testfx::TempDir dir("ds_val");
  std::filesystem::create_directories(dir.path / "images");
  std::vector<PairItem> items;
  for (int i = 0; i < 10; ++i) {
    const auto image = dir.path / "images" / ("v" + std::to_string(i) + ".png");
    testfx::write_png(image, 200 + i);
    items.push_back({"vr-" + std::to_string(i),
                     {image.string(), "image/png"},
                     "pos " + std::to_string(i),
                     "neg " + std::to_string(i),
                     Benchmark::ARO,
                     "VG-Relation"});
  }
  const auto manifest = dir.path / "m.jsonl";
  write_pairwise_manifest(manifest, items);
  const auto report = validate_manifest(manifest);
  REQUIRE(report.ok());
  REQUIRE(report.counts.at("VG-Relation") == 10);
  REQUIRE(report.kind == "pairwise");
}

TEST_CASE("validate_manifest reports a missing file without throwing") {
  const auto report = validate_manifest("/nonexistent/path/m.jsonl");
  REQUIRE(report.errors.size() == 1);
  REQUIRE(report.errors[0].code == ErrorCode::FileNotFound);
}

TEST_CASE("validate_manifest aggregates row errors and keeps counting") {
  testfx::TempDir dir("ds_mixed");
  const auto fixture = testfx::make_pair_fixture(dir.path, Benchmark::SugarCrepe, 4);
  json bad_subset = to_json(fixture.items[0]);
  bad_subset["item_id"] = "bad1";
  bad_subset["subset"] = "nope";
  append_line(fixture.manifest, bad_subset.dump());
  append_line(fixture.manifest, "{oops");
  json good = to_json(fixture.items[0]);
  good["item_id"] = "extra";
  good["caption_pos"] = "unique pos extra";
  good["caption_neg"] = "unique neg extra";
  append_line(fixture.manifest, good.dump());

  const auto report = validate_manifest(fixture.manifest);
  REQUIRE(report.errors.size() == 2);
  std::size_t total = 0;
  for (const auto& [subset, count] : report.counts) total += count;
  REQUIRE(total == 5);  // 4 fixture rows + 1 appended good row
  REQUIRE(report.errors[0].code == ErrorCode::UnknownSubset);
  REQUIRE(report.errors[0].line_no == 5);
  REQUIRE(report.errors[1].code == ErrorCode::MalformedRecord);
  REQUIRE(report.errors[1].line_no == 6);
}

TEST_CASE("validate agrees with load on whether a manifest is clean") {
  testfx::TempDir dir("ds_agree");
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sub = dir.path / std::to_string(trial);
    const auto fixture = testfx::make_pair_fixture(sub, Benchmark::ARO, 3,
                                                   static_cast<std::uint32_t>(trial * 10));
    const bool corrupt = (rng() & 1) == 0;
    if (corrupt) {
      json row = to_json(fixture.items[0]);
      row["item_id"] = "dup-or-bad";
      switch (rng() % 3) {
        case 0: row["subset"] = "mystery"; break;
        case 1: row["caption_neg"] = row["caption_pos"]; break;
        default: row["item_id"] = fixture.items[0].item_id; break;
      }
      append_line(fixture.manifest, row.dump());
    }
    const auto report = validate_manifest(fixture.manifest);
    bool load_ok = true;
    try {
      load_pairwise_benchmark(fixture.manifest);
    } catch (const EvalError&) {
      load_ok = false;
    }
    REQUIRE(report.ok() == load_ok);
  }
}

TEST_CASE("validation report exports as json") {
  testfx::TempDir dir("ds_valjson");
  const auto fixture = testfx::make_winoground_fixture(dir.path, 2);
  const auto report = validate_manifest(fixture.manifest);
  const json j = report.to_json();
  REQUIRE(j.at("kind") == "winoground");
  REQUIRE(j.at("counts").at("winoground") == 2);
  REQUIRE(j.at("errors").empty());
}
