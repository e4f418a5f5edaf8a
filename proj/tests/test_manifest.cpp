#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spoofkit/error.hpp"
#include "spoofkit/io.hpp"
#include "spoofkit/manifest.hpp"

using namespace spoofkit;

namespace {

Manifest make(std::size_t reals, std::size_t fakes) {
  Manifest m;
  m.name = "m";
  for (std::size_t i = 0; i < reals + fakes; ++i) {
    ManifestEntry e;
    e.id = "id" + std::to_string(i);
    e.source = "wav/" + e.id + ".wav";
    e.label = i < reals ? Label::real : Label::fake;
    e.duration_s = 1.0 + static_cast<double>(i);
    m.entries.push_back(e);
  }
  return m;
}

}  // namespace

TEST(Manifest, ParseAndSerializeRoundTrip) {
  const std::string text =
      R"({"id":"a","source":"x/a.wav","label":"real","duration_s":2.5,"subset":"train"})"
      "\n\n"
      R"({"id":"b","source":"/abs/b.wav","label":"spoof","attack":"A07","duration_s":1,"quality_sisdr_db":12.5,"codec_tag":"mp3","subset":"eval","extra":1})"
      "\n";
  const auto m = parse_manifest(text, "t");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.entries[1].label, Label::fake);
  EXPECT_EQ(m.entries[1].attack, "A07");
  EXPECT_EQ(m.entries[1].subset, Subset::test);
  EXPECT_EQ(m.entries[1].codec_tag, "mp3");
  EXPECT_EQ(*m.entries[1].quality_sisdr_db, 12.5);
  EXPECT_EQ(m.count(Label::fake), 1u);
  const auto again = parse_manifest(serialize_manifest(m), "t");
  EXPECT_EQ(again.entries, m.entries);
}

TEST(Manifest, ErrorsNameTheLine) {
  const std::string text = R"({"id":"a","label":"real"})"
                           "\n"
                           R"({"id":"b","label":"maybe"})";
  try {
    parse_manifest(text, "bad.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_manifest(R"({"label":"real"})"), ValidationError);
  EXPECT_THROW(parse_manifest("not json"), ValidationError);
  EXPECT_THROW(parse_manifest(R"({"id":"a","label":"real","duration_s":-1})"), ValidationError);
  EXPECT_THROW(parse_manifest(R"({"id":"a","label":"real"})"
                              "\n"
                              R"({"id":"a","label":"fake"})"),
               ValidationError);
}

TEST(Manifest, ResolveAndRebase) {
  const std::filesystem::path dir = oracle::scratch_dir("manifest");
  write_file(dir / "in" / "m.jsonl", R"({"id":"a","source":"wav/a.wav","label":"real"})"
                                     "\n");
  const auto m = load_manifest(dir / "in" / "m.jsonl");
  EXPECT_EQ(m.resolve(m.entries[0]), (dir / "in" / "wav" / "a.wav").lexically_normal());
  save_manifest(m, dir / "in" / "same.jsonl");
  EXPECT_EQ(load_manifest(dir / "in" / "same.jsonl").entries[0].source, "wav/a.wav");
  save_manifest(m, dir / "other" / "moved.jsonl");
  const auto moved = load_manifest(dir / "other" / "moved.jsonl");
  EXPECT_EQ(moved.resolve(moved.entries[0]), m.resolve(m.entries[0]));
  EXPECT_THROW(load_manifest(dir / "missing.jsonl"), ValidationError);
}

TEST(Manifest, FixedSampleIsSeededSubsetInFileOrder) {
  const auto m = make(30, 20);
  const auto a = sample_fixed(m, 10, 7);
  const auto b = sample_fixed(m, 10, 7);
  EXPECT_EQ(a.entries, b.entries);
  ASSERT_EQ(a.size(), 10u);
  std::set<std::string> ids;
  std::size_t last = 0;
  for (const auto& e : a.entries) {
    ids.insert(e.id);
    const auto pos = static_cast<std::size_t>(std::stoul(e.id.substr(2)));
    EXPECT_GE(pos + 1, last + 1);
    last = pos;
  }
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_NE(sample_fixed(m, 10, 8).entries, a.entries);
  EXPECT_EQ(sample_fixed(m, 50, 1).size(), 50u);
  EXPECT_THROW(sample_fixed(m, 51, 1), ValidationError);
  EXPECT_TRUE(sample_fixed(m, 0, 1).empty());
}

TEST(Manifest, ProportionedSampleIsExact) {
  const auto m = make(200, 200);
  const auto s = sample_proportioned(m, 100, 0.9, 3);
  EXPECT_EQ(s.count(Label::fake), 90u);
  EXPECT_EQ(s.count(Label::real), 10u);
  EXPECT_EQ(sample_proportioned(m, 7, 0.5, 3).count(Label::fake), 4u);  // round(3.5)
  EXPECT_EQ(sample_proportioned(m, 10, 0.0, 3).count(Label::fake), 0u);
  EXPECT_THROW(sample_proportioned(m, 10, 1.5, 3), ValidationError);
  EXPECT_THROW(sample_proportioned(make(5, 200), 100, 0.9, 3), ValidationError);
}

TEST(Manifest, SplitBySubset) {
  auto m = make(3, 3);
  const Subset tags[] = {Subset::train, Subset::val, Subset::test, Subset::train, Subset::train, Subset::test};
  for (std::size_t i = 0; i < 6; ++i) m.entries[i].subset = tags[i];
  const auto s = split_by_subset(m);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_EQ(s.test.size(), 2u);
  m.entries[0].subset.reset();
  EXPECT_THROW(split_by_subset(m), ValidationError);
}
