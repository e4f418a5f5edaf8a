#include <filesystem>

#include <gtest/gtest.h>

#include "spoofkit/config.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/synth.hpp"

using namespace spoofkit;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigDir = std::filesystem::path(SPOOFKIT_SOURCE_DIR) / "configs";

}  // namespace

TEST(Config, ShippedConfigsParseAndRoundTrip) {
  int experiments = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kConfigDir)) {
    const auto name = entry.path().filename().string();
    if (name.ends_with("_synth.json")) {
      EXPECT_NO_THROW(synth_spec_from_json(json::parse(read_file(entry.path())))) << name;
      continue;
    }
    ++experiments;
    const auto c = load_config(entry.path());
    const auto again = config_from_json(to_json(c), c.base_dir);
    EXPECT_EQ(to_json(again).dump(), to_json(c).dump()) << name;
    EXPECT_EQ(config_hash(again), config_hash(c)) << name;
  }
  EXPECT_GE(experiments, 6);
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(config_from_json(json{{"sed", 1}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"optimizer", {{"epoch", 3}}}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"loss", {{"focal_gama", 1.0}}}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"scoring", {{"mode", "sliding"}}}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"provider", {{"kind", "mystery"}}}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"crop_s", "long"}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"augmentation", {{"awgn_snr_db", {1.0}}}}}), ValidationError);
  try {
    config_from_json(json{{"model", {{"adaptor", true}}}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("model.adaptor"), std::string::npos) << e.what();
  }
}

TEST(Config, HashIgnoresKeyOrderAndOutputDir) {
  const auto a = config_from_json(json::parse(R"({"seed":3,"output_dir":"x","optimizer":{"epochs":4,"batch_size":8}})"));
  const auto b = config_from_json(json::parse(R"({"optimizer":{"batch_size":8,"epochs":4},"output_dir":"y","seed":3})"));
  EXPECT_EQ(config_hash(a), config_hash(b));
  const auto c = config_from_json(json::parse(R"({"seed":4,"optimizer":{"epochs":4,"batch_size":8}})"));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_FALSE(to_json(a, false).contains("output_dir"));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, RelativePathsResolveAgainstConfigDirectory) {
  const auto c = load_config(kConfigDir / "toy_ce.json");
  EXPECT_EQ(resolve_path(c, c.manifests.all),
            (std::filesystem::absolute(kConfigDir) / c.manifests.all).lexically_normal());
  EXPECT_EQ(resolve_path(c, "/abs/file"), std::filesystem::path("/abs/file"));
  EXPECT_THROW(load_config(kConfigDir / "missing.json"), ValidationError);
}
