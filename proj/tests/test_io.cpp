#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"

#include "gatedgan/checkpoint.hpp"
#include "gatedgan/config.hpp"
#include "gatedgan/dataset.hpp"
#include "gatedgan/evaluation.hpp"
#include "gatedgan/image_io.hpp"
#include "gatedgan/textures.hpp"

using namespace gatedgan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::vector<char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

// Every byte value once per channel, so round trips cover the whole range.
TensorF byte_ramp() {
  TensorF img({1, 3, 16, 16});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 256; ++i) img[c * 256 + i] = byte_to_unit(std::uint8_t((i + 85 * c) % 256));
  return img;
}

TrainState small_state(std::size_t k = 2) {
  TrainConfig cfg;
  cfg.mode = TrainMode::texture_synthesis;
  cfg.style_count = k;
  cfg.width_scale = 0.125;
  cfg.image_size = 8;
  cfg.seed = 17;
  cfg.buffer_capacity = 3;
  return TrainState::initialize(cfg);
}

TrainingData small_data(std::size_t k = 2) {
  TrainingData d;
  for (std::size_t c = 0; c < k; ++c) d.styles.push_back(texture_collection(TextureKind(c % 3), 2, 12, c));
  return d;
}

}  // namespace

TEST_CASE("pixel mapping") {
  CHECK(byte_to_unit(0) == -1.0f);
  CHECK(byte_to_unit(255) == 1.0f);
  CHECK(byte_to_unit(128) == doctest::Approx(2.0 * 128 / 255 - 1));
  for (int b = 0; b < 256; ++b) CHECK(unit_to_byte(byte_to_unit(std::uint8_t(b))) == b);
  CHECK(unit_to_byte(-3.f) == 0);
  CHECK(unit_to_byte(3.f) == 255);
  CHECK(unit_to_byte(std::nanf("")) == 0);
}

TEST_CASE("image round trips") {
  TempDir dir("gatedgan_test_images");
  const TensorF img = byte_ramp();
  for (const char* name : {"a.png", "a.ppm"}) {
    CAPTURE(name);
    save_image(img, dir / name);
    const TensorF back = load_image(dir / name);
    CHECK(bit_identical(back, img));
    save_image(back, dir / (std::string("b_") + name));
    CHECK(read_bytes(dir / name) == read_bytes(dir / (std::string("b_") + name)));
  }
  // Format detection ignores the extension.
  fs::copy_file(dir / "a.png", dir / "png_named.ppm");
  CHECK(bit_identical(load_image(dir / "png_named.ppm"), img));
}

TEST_CASE("image errors") {
  TempDir dir("gatedgan_test_image_errors");
  const TensorF img = byte_ramp();
  save_image(img, dir / "ok.png");
  save_image(img, dir / "ok.ppm");
  for (const char* name : {"ok.png", "ok.ppm"}) {
    auto bytes = read_bytes(dir / name);
    bytes.resize(bytes.size() / 2);
    const std::string cut = dir / (std::string("cut_") + name);
    write_bytes(cut, bytes);
    try {
      load_image(cut);
      FAIL("truncated file loaded");
    } catch (const DecodeError& e) {
      CHECK(std::string(e.what()).find(cut) != std::string::npos);
    }
  }
  write_bytes(dir / "text.png", {'h', 'e', 'l', 'l', 'o', ' ', 'w', 'o', 'r', 'l', 'd'});
  CHECK_THROWS_AS(load_image(dir / "text.png"), FormatError);
  write_bytes(dir / "deep.ppm", {'P', '6', ' ', '1', ' ', '1', ' ', '6', '5', '5', '3', '5', '\n', 0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(load_image(dir / "deep.ppm"), FormatError);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
  CHECK_THROWS_AS(save_image(img, dir / "x.jpg"), FormatError);
  CHECK_THROWS_AS(save_image(TensorF({1, 1, 4, 4}), dir / "x.png"), ShapeError);
  CHECK(is_image_path("A.PNG"));
  CHECK_FALSE(is_image_path("notes.txt"));
}

TEST_CASE("saved generator output re-embeds closely") {
  TempDir dir("gatedgan_test_requant");
  std::mt19937_64 rng(2);
  const auto p = GeneratorParams<float>::initialize({1, 0.25, 1}, rng);
  const FeatureEmbedder e(5);
  for (std::uint64_t i = 0; i < 3; ++i) {
    const TensorF y = generate(p, make_content(32, i), 0);
    save_image(y, dir / "y.png");
    const double change = (e.embed(y) - e.embed(load_image(dir / "y.png"))).norm();
    CHECK(change < 1e-2);
  }
}

TEST_CASE("dataset indexing") {
  TempDir dir("gatedgan_test_dataset");
  const std::map<std::string, int> sizes{{"a", 2}, {"b", 3}, {"c", 4}};
  std::vector<StyleSource> styles;
  for (const auto& [name, n] : sizes) {
    fs::create_directories(dir.path / name);
    for (int i = n - 1; i >= 0; --i) {
      save_image(make_texture(TextureKind::dots, 8, i), dir / (name + "/img" + std::to_string(i) + ".png"));
    }
    styles.push_back({name, dir / name});
  }
  write_bytes(dir / "a/readme.txt", {'x'});
  fs::create_directories(dir.path / "content");
  save_image(make_content(8, 1), dir / "content/c.ppm");

  const DatasetIndex index = index_dataset(dir / "content", styles);
  CHECK(index.style_count() == 3);
  CHECK(index.counts() == std::vector<std::size_t>{2, 3, 4});
  CHECK(index.skipped == 1);
  CHECK(fs::path(index.style_files[1][0]).filename() == "img0.png");
  CHECK(index.content_files.size() == 1);
  const DatasetIndex again = index_dataset(dir / "content", styles);
  CHECK(again.style_files == index.style_files);
  CHECK(again.content_files == index.content_files);
  CHECK(index_dataset("", styles).content_files.empty());

  const TrainingData data = load_training_data(index);
  CHECK(data.styles[2].size() == 4);
  CHECK(data.style_names == std::vector<std::string>{"a", "b", "c"});

  fs::create_directories(dir.path / "empty");
  CHECK_THROWS_AS(index_dataset("", {{"e", dir / "empty"}}), DatasetError);
  CHECK_THROWS_AS(index_dataset("", {{"m", dir / "missing"}}), DatasetError);
  CHECK_THROWS_AS(index_dataset("", {styles[0], {"a", styles[1].dir}}), DatasetError);

  std::ofstream(dir / "data.manifest") << "# collections\ncontent content\nstyle b b\n\nstyle c c\n";
  const DatasetManifest m = read_manifest(dir / "data.manifest");
  CHECK(m.content_dir == dir / "content");
  REQUIRE(m.styles.size() == 2);
  CHECK(m.styles[1].name == "c");
  CHECK(m.styles[1].dir == dir / "c");
  std::ofstream(dir / "bad.manifest") << "painter x y\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad.manifest"), ConfigError);
}

TEST_CASE("configuration") {
  TempDir dir("gatedgan_test_config");
  std::ofstream(dir / "run.cfg") << "# desk run\n"
                                    "learning_rate = 1e-3\n"
                                    "image_size = 16   # small\n"
                                    "mode = texture_synthesis\n"
                                    "style.checks = textures/checks\n"
                                    "style.dots = /abs/dots\n"
                                    "record_wall_time = true\n";
  std::map<std::string, std::string> env{{"GATEDGAN_SEED", "99"}, {"GATEDGAN_IMAGE_SIZE", "24"}};
  const EnvLookup lookup = [&env](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  const AppConfig cfg = load_config(dir / "run.cfg", lookup, {"image_size=32", "k_d = 2"});
  CHECK(cfg.train.learning_rate == 1e-3);
  CHECK(cfg.train.seed == 99);
  CHECK(cfg.train.image_size == 32);
  CHECK(cfg.train.k_d == 2);
  CHECK(cfg.train.mode == TrainMode::texture_synthesis);
  CHECK(cfg.train.record_wall_time);
  CHECK(cfg.train.style_count == 2);
  CHECK(cfg.styles[0].dir == (dir.path / "textures/checks").string());
  CHECK(cfg.styles[1].dir == "/abs/dots");
  CHECK(cfg.output_dir == "run");
  CHECK(load_config(dir / "run.cfg", {}, {}).train.image_size == 16);

  CHECK(env_name("lambda_r") == "GATEDGAN_LAMBDA_R");
  CHECK(config_keys().size() > 10);
  CHECK_THROWS_AS(load_config(dir / "run.cfg", {}, {"unknown_key=1"}), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "run.cfg", {}, {"seed"}), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "run.cfg", {}, {"batch_size=-1"}), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "run.cfg", {}, {"image_size=30"}), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.cfg", {}, {}), IoError);
  CHECK_THROWS_AS(parse_key_values("just words\n", "x"), ConfigError);

  // format_config emits keys that load back to the same configuration.
  std::ofstream(dir / "round.cfg") << format_config(cfg.train);
  const AppConfig back = load_config(dir / "round.cfg", {}, {});
  CHECK(format_config(back.train) == format_config(cfg.train));
}

TEST_CASE("checkpoint round trip") {
  TrainState s = small_state();
  const TrainingData data = small_data();
  run_training(s, data, 5);
  s.style_names = {"checks", "stripes"};
  const auto bytes = checkpoint_bytes(s);
  TrainState back = checkpoint_from_bytes(bytes, "memory");
  CHECK(checkpoint_bytes(back) == bytes);
  CHECK(back.iteration == 5);
  CHECK(back.style_names == s.style_names);
  std::map<std::string, const TensorF*> original;
  s.generator.visit(ConstParamVisitor<float>([&](const std::string& n, const TensorF& t) { original[n] = &t; }));
  back.generator.visit(ConstParamVisitor<float>([&](const std::string& n, const TensorF& t) {
    CHECK(bit_identical(t, *original.at(n)));
  }));
  CHECK(back.rng() == s.rng());
  CHECK(back.buffer.size() == s.buffer.size());
  CHECK(back.counters().generator == s.counters().generator);

  TempDir dir("gatedgan_test_ckpt");
  save_checkpoint(s, dir / "a.ggck");
  save_checkpoint(load_checkpoint(dir / "a.ggck"), dir / "b.ggck");
  CHECK(read_bytes(dir / "a.ggck") == read_bytes(dir / "b.ggck"));

  CHECK(resolve_style(s, "stripes") == 1);
  CHECK(resolve_style(s, "0") == 0);
  CHECK_THROWS_AS(resolve_style(s, "7"), IndexError);
  CHECK_THROWS_AS(resolve_style(s, "cubism"), ArgumentError);
}

TEST_CASE("checkpoint corruption and mismatches") {
  const TrainState s = small_state();
  const auto bytes = checkpoint_bytes(s);
  SUBCASE("payload byte flipped") {
    auto bad = bytes;
    bad[bad.size() - 100] ^= 0x10;
    CHECK_THROWS_AS(checkpoint_from_bytes(bad, "x"), ChecksumError);
  }
  SUBCASE("wrong magic") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(checkpoint_from_bytes(bad, "x"), FormatError);
  }
  SUBCASE("future version") {
    auto bad = bytes;
    bad[8] = 2;
    CHECK_THROWS_AS(checkpoint_from_bytes(bad, "x"), VersionError);
  }
  SUBCASE("truncated") {
    auto bad = bytes;
    bad.resize(20);
    CHECK_THROWS_AS(checkpoint_from_bytes(bad, "x"), DecodeError);
  }
  SUBCASE("branch count") {
    CHECK_NOTHROW(checkpoint_from_bytes(bytes, "x", 2));
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes, "x", 3), ShapeError);
  }
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.ggck"), IoError);
}

TEST_CASE("checkpoint bytes are a pure function of the state") {
  TrainState a = small_state(), b = small_state();
  CHECK(checkpoint_bytes(a) == checkpoint_bytes(b));
  CHECK(fnv1a(nullptr, 0) == 14695981039346656037ull);
  const std::uint8_t text[] = {'a'};
  CHECK(fnv1a(text, 1) == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("procedural textures") {
  for (TextureKind k : {TextureKind::checkerboard, TextureKind::stripes, TextureKind::dots}) {
    CAPTURE(to_string(k));
    CHECK(parse_texture_kind(to_string(k)) == k);
    const TensorF t = make_texture(k, 24, 3);
    CHECK(t.shape() == Shape{1, 3, 24, 24});
    CHECK(bit_identical(t, make_texture(k, 24, 3)));
    CHECK_FALSE(bit_identical(t, make_texture(k, 24, 4)));
    for (float v : t.storage()) CHECK(std::abs(v) <= 1.0f);
    CHECK(texture_collection(k, 5, 16, 1).size() == 5);
  }
  CHECK_THROWS_AS(parse_texture_kind("plaid"), ArgumentError);
  CHECK_THROWS_AS(make_texture(TextureKind::dots, 0, 1), ArgumentError);
  const TensorF c = make_content(16, 1);
  CHECK(c.shape() == Shape{1, 3, 16, 16});
  for (float v : c.storage()) CHECK(std::abs(v) <= 1.0f);
}
