// Shared test fixtures: tiny valid PNGs, benchmark manifests with resolvable
// images, and scripted generation clients.
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>
#include <zlib.h>

#include "compeval/dataset.hpp"
#include "compeval/demoforge.hpp"
#include "compeval/detail/util.hpp"

namespace testfx {

namespace fs = std::filesystem;

inline void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>(v & 0xFF));
}

inline void append_chunk(std::string& out, const char type[4], const std::string& data) {
  append_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc =
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

/// A valid 1x1 RGB PNG; distinct (r,g,b) gives distinct bytes.
inline std::string make_png_bytes(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  append_be32(ihdr, 1);  // width
  append_be32(ihdr, 1);  // height
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB
  append_chunk(png, "IHDR", ihdr);
  const unsigned char scanline[4] = {0x00, r, g, b};
  uLongf compressed_len = 64;
  unsigned char compressed[64];
  if (compress2(compressed, &compressed_len, scanline, 4, 9) != Z_OK) {
    throw std::runtime_error("failed to deflate test PNG scanline");
  }
  append_chunk(png, "IDAT", std::string(reinterpret_cast<char*>(compressed), compressed_len));
  append_chunk(png, "IEND", "");
  return png;
}

inline void write_png(const fs::path& path, std::uint32_t color_index) {
  compeval::detail::atomic_write_file(
      path, make_png_bytes(static_cast<std::uint8_t>(color_index & 0xFF),
                           static_cast<std::uint8_t>((color_index >> 8) & 0xFF),
                           static_cast<std::uint8_t>((color_index >> 16) & 0x7F)));
}

/// Scratch directory under the system temp root, removed on destruction.
struct TempDir {
  fs::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<std::uint64_t> counter{0};
    path = fs::temp_directory_path() /
           ("compeval_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

struct PairFixture {
  fs::path manifest;
  std::vector<compeval::PairItem> items;
};

/// n items cycling through the benchmark's subsets, every image a distinct
/// tiny PNG. Captions embed the item id so mock tables stay collision-free.
inline PairFixture make_pair_fixture(const fs::path& dir, compeval::Benchmark benchmark,
                                     std::size_t n, std::uint32_t color_base = 0) {
  PairFixture fixture;
  fs::create_directories(dir / "images");
  std::vector<std::string> subsets;
  if (benchmark == compeval::Benchmark::ARO) {
    for (auto s : compeval::aro_subsets()) subsets.emplace_back(s);
  } else {
    for (auto s : compeval::sugarcrepe_subsets()) subsets.emplace_back(s);
  }
  const std::string tag = benchmark == compeval::Benchmark::ARO ? "aro" : "sc";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = tag + "-" + std::to_string(i);
    const fs::path image = dir / "images" / (id + ".png");
    write_png(image, color_base + static_cast<std::uint32_t>(i));
    compeval::PairItem item;
    item.item_id = id;
    item.image = {image.string(), "image/png"};
    item.caption_pos = "a red cube " + id + " rests on a blue ball";
    item.caption_neg = "a blue cube " + id + " rests on a red ball";
    item.benchmark = benchmark;
    item.subset = subsets[i % subsets.size()];
    fixture.items.push_back(std::move(item));
  }
  fixture.manifest = dir / (tag + ".jsonl");
  compeval::write_pairwise_manifest(fixture.manifest, fixture.items);
  return fixture;
}

/// Order-shuffle fixture: the negative caption is a one-step rotation of the
/// positive's words, so bag-of-words scoring has nothing real to go on.
inline PairFixture make_order_fixture(const fs::path& dir, std::size_t n, std::uint64_t seed,
                                      std::uint32_t color_base = 50000) {
  PairFixture fixture;
  fs::create_directories(dir / "images");
  std::mt19937_64 rng(seed);
  const std::array<std::string_view, 2> subsets = {"COCO-Order", "Flickr30k-Order"};
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "ord-" + std::to_string(i);
    const fs::path image = dir / "images" / (id + ".png");
    write_png(image, color_base + static_cast<std::uint32_t>(i));
    const std::size_t word_count = 6 + rng() % 4;
    std::vector<std::string> words;
    for (std::size_t w = 0; w < word_count; ++w) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "w%llx", static_cast<unsigned long long>(rng() & 0xFFFFFF));
      words.emplace_back(buf);
    }
    auto join = [](const std::vector<std::string>& ws) {
      std::string out;
      for (std::size_t k = 0; k < ws.size(); ++k) {
        if (k > 0) out += ' ';
        out += ws[k];
      }
      return out;
    };
    compeval::PairItem item;
    item.item_id = id;
    item.image = {image.string(), "image/png"};
    item.caption_pos = join(words);
    std::rotate(words.begin(), words.begin() + 1, words.end());
    item.caption_neg = join(words);
    item.benchmark = compeval::Benchmark::ARO;
    item.subset = std::string(subsets[i % subsets.size()]);
    fixture.items.push_back(std::move(item));
  }
  fixture.manifest = dir / "order.jsonl";
  compeval::write_pairwise_manifest(fixture.manifest, fixture.items);
  return fixture;
}

struct WinogroundFixture {
  fs::path manifest;
  std::vector<compeval::WinogroundItem> items;
};

inline WinogroundFixture make_winoground_fixture(const fs::path& dir, std::size_t n,
                                                 std::uint32_t color_base = 100000) {
  WinogroundFixture fixture;
  fs::create_directories(dir / "images");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "wg-" + std::to_string(i);
    const fs::path image_0 = dir / "images" / (id + "-0.png");
    const fs::path image_1 = dir / "images" / (id + "-1.png");
    write_png(image_0, color_base + 2 * static_cast<std::uint32_t>(i));
    write_png(image_1, color_base + 2 * static_cast<std::uint32_t>(i) + 1);
    compeval::WinogroundItem item;
    item.item_id = id;
    item.image_0 = {image_0.string(), "image/png"};
    item.image_1 = {image_1.string(), "image/png"};
    item.caption_0 = "an old person " + id + " greets a young person";
    item.caption_1 = "a young person " + id + " greets an old person";
    fixture.items.push_back(std::move(item));
  }
  fixture.manifest = dir / "winoground.jsonl";
  compeval::write_winoground_manifest(fixture.manifest, fixture.items);
  return fixture;
}

/// Text client scripted with a response function; records every prompt.
class ScriptedTextGen : public compeval::TextGenClient {
 public:
  using Responder = std::function<std::string(const std::string&)>;

  explicit ScriptedTextGen(Responder responder, std::string model = "scripted-textgen")
      : responder_(std::move(responder)), model_(std::move(model)) {}

  std::string model_id() const override { return model_; }

  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    return responder_(prompt);
  }

  std::vector<std::string> prompts;

 private:
  Responder responder_;
  std::string model_;
};

/// Default responder: caption prompts echo all listed objects, counter-caption
/// prompts reshuffle the quoted caption.
inline ScriptedTextGen::Responder default_forge_responder() {
  return [](const std::string& prompt) -> std::string {
    const std::string caption_prefix = "Generate a caption for an image which is made of";
    const std::string counter_prefix = "Generate counter caption to this one";
    if (prompt.rfind(caption_prefix, 0) == 0) {
      const auto colon = prompt.find(": ");
      const auto end = prompt.find(". Can you");
      std::string objects = prompt.substr(colon + 2, end - colon - 2);
      return "A scene of " + objects + " arranged together";
    }
    if (prompt.rfind(counter_prefix, 0) == 0) {
      const auto open = prompt.find('\'');
      const auto close = prompt.rfind('\'');
      std::string caption = prompt.substr(open + 1, close - open - 1);
      return "Jumbled view: " + caption + " upside down";
    }
    return "unexpected prompt";
  };
}

class ScriptedImageGen : public compeval::ImageGenClient {
 public:
  explicit ScriptedImageGen(std::string model = "scripted-imagegen") : model_(std::move(model)) {}

  std::string model_id() const override { return model_; }

  compeval::GeneratedImage generate(const std::string& prompt) override {
    prompts.push_back(prompt);
    if (fail_with) throw *fail_with;
    if (return_garbage) return {std::string("not an image")};
    const auto index = static_cast<std::uint32_t>(prompts.size() - 1);
    return {make_png_bytes(static_cast<std::uint8_t>(10 + index), 20, 30)};
  }

  std::vector<std::string> prompts;
  std::optional<compeval::EvalError> fail_with;
  bool return_garbage = false;

 private:
  std::string model_;
};

inline compeval::ForgeOptions fixed_clock_options() {
  compeval::ForgeOptions opts;
  opts.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
  return opts;
}

}  // namespace testfx
