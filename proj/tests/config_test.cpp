#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "imgbias/config.hpp"
#include "imgbias/provenance.hpp"
#include "support/temp_dir.hpp"

using namespace imgbias;

namespace {

RunConfig parse(const std::string& text, const std::filesystem::path& base = {}) {
  std::istringstream in(text);
  return parse_config(in, base);
}

}  // namespace

TEST(ConfigTest, DefaultsWhenEmpty) {
  const RunConfig c = parse("");
  EXPECT_FALSE(c.seed);
  EXPECT_EQ(c.jobs, 0u);
  EXPECT_EQ(c.split, "jpeg96");
  EXPECT_EQ(c.constraints.target_qf, 96);
  EXPECT_EQ(c.constraints.size_low, 450);
  EXPECT_EQ(c.constraints.size_high, 550);
  EXPECT_EQ(c.series.qualities(), (std::vector<int>{95, 90, 80, 70, 60}));
  EXPECT_DOUBLE_EQ(c.threshold, 0.5);
  EXPECT_EQ(c.bin_width, 50);
  EXPECT_EQ(c.max_edge, 1050);
  EXPECT_EQ(c.generators.size("Midjourney"), 1024);
}

TEST(ConfigTest, FullDocument) {
  const RunConfig c = parse(R"(
[run]
seed = 7
jobs = 2
out = results

[corpus:nat]
root = data/imagenet
origin = natural
class_pattern = ^(n[0-9]+)/

[corpus:sd]
root = /abs/sd14
origin = generated:SD14
subset = sd14

[constraints]
split = size
generator_native_side = 512
per_class_balance = false
generators = SD14, SD15

[series]
qualities = 90, 50

[probe]
test_fraction = 0.25

[generators]
Foo = 300

[eval]
threshold = 0.4
bin_width = 100
max_edge = 1000
size_condition = jpeg90
)",
                            "/base");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.jobs, 2u);
  EXPECT_EQ(c.out->generic_string(), "/base/results");
  ASSERT_EQ(c.corpora.size(), 2u);
  EXPECT_EQ(c.corpora[0].root.generic_string(), "/base/data/imagenet");
  EXPECT_EQ(c.corpora[0].subset, "nat");
  EXPECT_TRUE(c.corpora[0].origin.is_natural());
  EXPECT_EQ(c.corpora[1].root.generic_string(), "/abs/sd14");
  EXPECT_EQ(c.corpora[1].subset, "sd14");
  EXPECT_EQ(c.corpora[1].origin.str(), "generated:SD14");
  EXPECT_EQ(c.split, "size");
  EXPECT_EQ(c.constraints.generator_native_side, 512);
  EXPECT_FALSE(c.constraints.per_class_balance);
  EXPECT_EQ(c.constraints.generators, (std::vector<std::string>{"SD14", "SD15"}));
  EXPECT_EQ(c.series.qualities(), (std::vector<int>{90, 50}));
  EXPECT_DOUBLE_EQ(c.probe_test_fraction, 0.25);
  EXPECT_EQ(c.generators.size("foo"), 300);
  EXPECT_DOUBLE_EQ(c.threshold, 0.4);
  EXPECT_EQ(c.bin_width, 100);
  EXPECT_EQ(c.max_edge, 1000);
  EXPECT_EQ(c.size_condition, "jpeg90");
}

TEST(ConfigTest, RejectsUnknownAndMalformed) {
  EXPECT_THROW(parse("[bogus]\nx = 1\n"), ParseError);
  EXPECT_THROW(parse("[run]\nsead = 1\n"), ParseError);
  EXPECT_THROW(parse("[run]\nseed = -1\n"), ParseError);
  EXPECT_THROW(parse("[run]\nseed = 12abc\n"), ParseError);
  EXPECT_THROW(parse("[corpus:x]\norigin = natural\n"), ParseError);
  EXPECT_THROW(parse("[corpus:x]\nroot = a\norigin = synthetic\n"), ParseError);
  EXPECT_THROW(parse("[corpus:x]\nroot = a\norigin = natural\nclass_pattern = (\n"), ParseError);
  EXPECT_THROW(parse("[series]\nqualities = 60, 90\n"), ParseError);
  EXPECT_THROW(parse("[probe]\ntest_fraction = 1.5\n"), ParseError);
  EXPECT_THROW(parse("[constraints]\nsplit = random\n"), ParseError);
  EXPECT_THROW(parse("[constraints]\nper_class_balance = maybe\n"), ParseError);
  EXPECT_THROW(parse("[run\nseed = 1\n"), ParseError);
}

TEST(ConfigTest, LoadResolvesAgainstFileDirectory) {
  testutil::TempDir dir;
  const std::string text = "[corpus:a]\nroot = imgs\norigin = natural\n";
  const auto file = dir.put("cfg/run.ini", text);
  const RunConfig c = load_config(file);
  EXPECT_EQ(c.corpora.at(0).root, dir.path() / "cfg" / "imgs");
  EXPECT_THROW(load_config(dir.path() / "missing.ini"), IoError);
}

TEST(ProvenanceTest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(std::string()), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex(std::string("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ProvenanceTest, DirectoryDigestTracksContent) {
  testutil::TempDir dir;
  dir.put("d/a.txt", std::string("one"));
  dir.put("d/sub/b.txt", std::string("two"));
  const std::string first = digest_path(dir.path() / "d");
  EXPECT_EQ(first, digest_path(dir.path() / "d"));
  dir.put("d/sub/b.txt", std::string("tw0"));
  EXPECT_NE(first, digest_path(dir.path() / "d"));
}
