#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "adamf/checkpoint.hpp"
#include "adamf/config.hpp"
#include "adamf/errors.hpp"
#include "adamf/io.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace adamf;

namespace {

const char* kMinimal =
    "train_path = data/train.txt\n"
    "valid_path = data/valid.txt\n"
    "test_path = data/test.txt\n";

Model small_model(SeededRng& rng) {
  const auto cfg = testing::small_config();
  return Model(cfg, 5, 2, testing::random_features(rng, 5, Modality::visual, 4),
               testing::random_features(rng, 5, Modality::textual, 4));
}

// A store with non-trivial values, moments and step counts.
ParameterStore trained_like_store(std::uint64_t seed) {
  SeededRng rng(seed);
  const Model model = small_model(rng);
  auto params = model.init_params(seed);
  for (auto& p : params.parameters()) {
    p.adam.first_moment = Tensor(p.value.shape);
    p.adam.second_moment = Tensor(p.value.shape);
    for (auto& v : p.adam.first_moment.data) v = rng.normal() * 1e-3;
    for (auto& v : p.adam.second_moment.data) v = std::abs(rng.normal()) * 1e-6;
    p.adam.step = 1 + rng.below(1000);
  }
  return params;
}

}  // namespace

TEST_CASE("config: minimal file fills defaults and resolves paths against the config dir") {
  const auto c = parse_run_config(kMinimal, "/base/dir");
  CHECK(c.train_path == std::filesystem::path("/base/dir/data/train.txt"));
  CHECK(c.test_path == std::filesystem::path("/base/dir/data/test.txt"));
  CHECK(c.visual_path.empty());
  CHECK(c.model.fusion_mode == FusionMode::adaptive);
}

TEST_CASE("config: default output dir sits next to the config") {
  CHECK(parse_run_config(kMinimal, "/base").output_dir == std::filesystem::path("/base/out"));
  CHECK(parse_run_config(kMinimal, "rel").output_dir == std::filesystem::path("rel/out"));
  const auto set = parse_run_config(std::string(kMinimal) + "output_dir = runs/a\n", "rel");
  CHECK(set.output_dir == std::filesystem::path("rel/runs/a"));
}

TEST_CASE("config: absolute paths are kept") {
  const auto c = parse_run_config(
      "train_path = /x/t.txt\nvalid_path = v.txt\ntest_path = /y/te.txt\n", "/base");
  CHECK(c.train_path == std::filesystem::path("/x/t.txt"));
  CHECK(c.valid_path == std::filesystem::path("/base/v.txt"));
}

TEST_CASE("config: comments and blank lines are ignored") {
  const std::string text = std::string("# header\n\n") + kMinimal + "dim = 8   # trailing\n";
  const auto c = parse_run_config(text, "/b");
  CHECK(c.model.dim == 8);
}

TEST_CASE("config: unknown key is rejected") {
  const std::string text = std::string(kMinimal) + "dimension = 8\n";
  CHECK_THROWS_AS(parse_run_config(text, "/b"), ConfigError);
}

TEST_CASE("config: duplicate key is rejected") {
  const std::string text = std::string(kMinimal) + "dim = 8\ndim = 16\n";
  CHECK_THROWS_AS(parse_run_config(text, "/b"), ConfigError);
}

TEST_CASE("config: malformed values are rejected") {
  for (const char* bad : {"dim = eight\n", "gamma = nan\n", "mat_enabled = maybe\n",
                          "fusion_mode = max\n", "dim\n", "modality_missing_ratio = 1.5\n",
                          "dim = 0\n", "batch_size = -3\n"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_run_config(std::string(kMinimal) + bad, "/b"), ConfigError);
  }
}

TEST_CASE("config: missing data paths are an error only when data is required") {
  CHECK_THROWS_AS(parse_run_config("dim = 4\n", "/b"), ConfigError);
  CHECK_NOTHROW(parse_run_config("dim = 4\n", "/b", nullptr, false));
}

TEST_CASE("config: off-grid values are accepted with a warning") {
  std::vector<std::string> warnings;
  const auto c = parse_run_config(std::string(kMinimal) + "num_negatives = 100\n", "/b", &warnings);
  CHECK(c.train.num_negatives == 100);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("num_negatives") != std::string::npos);

  warnings.clear();
  parse_run_config(std::string(kMinimal) + "num_negatives = 64\ngamma = 4\nlr_d = 1e-4\n", "/b",
                   &warnings);
  CHECK(warnings.empty());
}

TEST_CASE("config: the echo parses back to the same configuration") {
  const std::string text = std::string(kMinimal) +
                           "dim = 12\ngamma = 2.5\nfusion_mode = mean\nmodalities = s,t\n"
                           "adversarial_patterns = hrt*\nmat_enabled = true\nseed = 77\n"
                           "tie_break = pessimistic\nlr_g = 3e-5\nvisual_path = v.tsv\n";
  const auto c = parse_run_config(text, "/b");
  const auto echo = format_run_config(c);
  const auto again = parse_run_config(echo, "/elsewhere");
  CHECK(format_run_config(again) == echo);
  for (auto key : run_config_keys()) {
    CHECK(echo.find("\n" + std::string(key) + " = ") != std::string::npos);
  }
}

TEST_CASE("config: AMF_SEED overrides the seed") {
  auto c = parse_run_config(std::string(kMinimal) + "seed = 3\n", "/b");
  ::setenv("AMF_SEED", "41", 1);
  apply_env_overrides(c);
  CHECK(c.train.seed == 41);
  ::setenv("AMF_SEED", "x1", 1);
  CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
  ::unsetenv("AMF_SEED");
  apply_env_overrides(c);
  CHECK(c.train.seed == 41);
}

TEST_CASE("config: unreadable config file is a config error") {
  testing::TempDir dir;
  CHECK_THROWS_AS(load_run_config(dir / "absent.conf"), ConfigError);
}

TEST_CASE("checkpoint: save, load, save is byte-identical") {
  testing::TempDir dir;
  const auto params = trained_like_store(5);
  save_checkpoint(params, dir / "a.ckpt");

  SeededRng rng(99);
  auto fresh = small_model(rng).init_params(1234);
  load_checkpoint(dir / "a.ckpt", fresh);
  save_checkpoint(fresh, dir / "b.ckpt");
  CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));
}

TEST_CASE("checkpoint: loaded state equals the float32-rounded original") {
  auto params = trained_like_store(6);
  const auto bytes = serialize_checkpoint(params);
  SeededRng rng(1);
  auto loaded = small_model(rng).init_params(0);
  deserialize_checkpoint(bytes, loaded);
  round_to_checkpoint_precision(params);
  CHECK(loaded == params);
  for (const auto& p : loaded.parameters()) {
    for (double v : p.value.data) CHECK(static_cast<double>(static_cast<float>(v)) == v);
  }
}

TEST_CASE("checkpoint: header carries the magic and version") {
  const auto bytes = serialize_checkpoint(trained_like_store(2));
  REQUIRE(bytes.size() > 8);
  CHECK(bytes.substr(0, 4) == "AMF1");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  CHECK(version == 1);
}

TEST_CASE("checkpoint: every truncation is an I/O error") {
  const auto params = trained_like_store(3);
  const auto bytes = serialize_checkpoint(params);
  auto target = params;
  for (std::size_t cut = 0; cut < bytes.size(); cut += 1 + cut / 8) {
    CAPTURE(cut);
    CHECK_THROWS_AS(deserialize_checkpoint(std::string_view(bytes).substr(0, cut), target), IoError);
  }
}

TEST_CASE("checkpoint: bad magic, bad version and trailing bytes are I/O errors") {
  const auto params = trained_like_store(4);
  auto target = params;
  auto bytes = serialize_checkpoint(params);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad_magic, target), IoError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize_checkpoint(bad_version, target), IoError);

  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x", target), IoError);
}

TEST_CASE("checkpoint: shape mismatch names the tensor") {
  testing::TempDir dir;
  const auto params = trained_like_store(7);
  save_checkpoint(params, dir / "c.ckpt");

  SeededRng rng(2);
  auto cfg = testing::small_config(5);
  const Model bigger(cfg, 5, 2, testing::random_features(rng, 5, Modality::visual, 4),
                     testing::random_features(rng, 5, Modality::textual, 4));
  auto target = bigger.init_params(0);
  const auto before = target;
  try {
    load_checkpoint(dir / "c.ckpt", target);
    FAIL("expected a contract violation");
  } catch (const ContractViolation& e) {
    CHECK(std::string(e.what()).find("entity") != std::string::npos);
  }
  CHECK(target == before);
}

TEST_CASE("checkpoint: name mismatch is a contract violation") {
  ParameterStore a;
  a.add("alpha", Group::discriminator, Tensor::vector({1, 2}));
  ParameterStore b;
  b.add("beta", Group::discriminator, Tensor::vector({1, 2}));
  CHECK_THROWS_AS(deserialize_checkpoint(serialize_checkpoint(a), b), ContractViolation);

  ParameterStore c;
  c.add("alpha", Group::discriminator, Tensor::vector({1, 2}));
  c.add("gamma", Group::generator, Tensor::vector({3}));
  CHECK_THROWS_AS(deserialize_checkpoint(serialize_checkpoint(a), c), ContractViolation);
}

TEST_CASE("checkpoint: missing file is an I/O error") {
  testing::TempDir dir;
  auto params = trained_like_store(8);
  CHECK_THROWS_AS(load_checkpoint(dir / "nope.ckpt", params), IoError);
}
