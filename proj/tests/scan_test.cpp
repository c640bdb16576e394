#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <string>

#include "imgbias/scan.hpp"
#include "imgbias/transcode.hpp"
#include "support/reference_codecs.hpp"
#include "support/temp_dir.hpp"

using namespace imgbias;
using testutil::TempDir;

namespace {

const LabelRule kNatural(Origin::natural(), "sd14");

std::string serialize(const ScanResult& r) {
  std::ostringstream out;
  write_metas_jsonl(out, r.metas);
  for (const auto& e : r.errors) out << e.path << '|' << e.kind << '\n';
  return out.str();
}

}  // namespace

TEST(ScanTest, EmptyDirectoryYieldsNothing) {
  TempDir dir;
  const ScanResult r = scan_corpus(dir.path(), kNatural);
  EXPECT_TRUE(r.metas.empty());
  EXPECT_TRUE(r.errors.empty());
}

TEST(ScanTest, MissingRootIsIoError) {
  EXPECT_THROW(scan_corpus("/nonexistent/imgbias/root", kNatural), IoError);
}

TEST(ScanTest, MixedFixturesGiveTwoMetasAndOneError) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const Raster img = refcodec::random_raster(rng, 40, 24);
  dir.put("n01440764/a.jpg", encode_qf(img, 96));
  dir.put("n01440764/b.png", encode_png(img));
  dir.put("n01440764/notes.txt", std::string("not an image"));

  const ScanResult r = scan_corpus(dir.path(), kNatural);
  ASSERT_EQ(r.metas.size(), 2u);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].kind, "UnsupportedStream");
  EXPECT_NE(r.errors[0].path.find("notes.txt"), std::string::npos);

  const ImageMeta& jpg = r.metas[0];
  EXPECT_EQ(jpg.format, ImageFormat::Jpeg);
  EXPECT_EQ(jpg.width, 40);
  EXPECT_EQ(jpg.height, 24);
  EXPECT_EQ(jpg.qf, 96);
  EXPECT_TRUE(jpg.qf_exact);
  EXPECT_EQ(jpg.qf_distance, 0);
  EXPECT_EQ(jpg.class_label, "n01440764");
  EXPECT_EQ(jpg.subset, "sd14");
  EXPECT_TRUE(jpg.origin.is_natural());

  const ImageMeta& png = r.metas[1];
  EXPECT_EQ(png.format, ImageFormat::Png);
  EXPECT_FALSE(png.qf.has_value());
  EXPECT_FALSE(png.qf_exact);
}

TEST(ScanTest, OutputIsSortedAndIndependentOfJobs) {
  TempDir dir;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 24; ++i) {
    const Raster img = refcodec::random_raster(rng, 16 + i, 16);
    const std::string cls = "c" + std::to_string(i % 3);
    dir.put(cls + "/img" + std::to_string(23 - i) + (i % 2 ? ".png" : ".jpg"),
            i % 2 ? encode_png(img) : encode_qf(img, 70 + i));
  }
  dir.put("c0/broken.jpg", std::string("\xFF\xD8\xFF", 3));

  const ScanResult serial = scan_corpus(dir.path(), kNatural, 1);
  const ScanResult parallel = scan_corpus(dir.path(), kNatural, 4);
  EXPECT_EQ(serialize(serial), serialize(parallel));
  EXPECT_EQ(serial.metas.size(), 24u);
  ASSERT_EQ(serial.errors.size(), 1u);
  EXPECT_EQ(serial.errors[0].kind, "MalformedStream");
  EXPECT_TRUE(std::is_sorted(serial.metas.begin(), serial.metas.end(),
                             [](const ImageMeta& a, const ImageMeta& b) { return a.path < b.path; }));
}

TEST(ScanTest, RepeatedScansSerializeIdentically) {
  TempDir dir;
  std::mt19937_64 rng(3);
  dir.put("x/a.jpg", encode_qf(refcodec::random_raster(rng, 30, 30), 85));
  dir.put("x/b.png", encode_png(refcodec::random_raster(rng, 20, 10)));
  EXPECT_EQ(serialize(scan_corpus(dir.path(), kNatural)), serialize(scan_corpus(dir.path(), kNatural)));
}

TEST(ScanTest, LabelRulePatternAndRejection) {
  const LabelRule by_name(Origin::generated("ADM"), "adm", R"(^(n\d+)_)");
  const auto l = by_name("train/ai/n01530575_123.png");
  EXPECT_FALSE(l.has_value());  // pattern is anchored at the start of the relative path
  const LabelRule by_file(Origin::generated("ADM"), "adm", R"((?:^|/)(n\d+)_[^/]*$)");
  const auto l2 = by_file("train/ai/n01530575_123.png");
  ASSERT_TRUE(l2.has_value());
  EXPECT_EQ(l2->class_label, "n01530575");
  EXPECT_EQ(l2->origin, Origin::generated("ADM"));
  EXPECT_EQ(l2->subset, "adm");

  EXPECT_FALSE(kNatural("toplevel.jpg").has_value());
  EXPECT_THROW(LabelRule(Origin::natural(), "s", "no_group"), ParseError);
  EXPECT_THROW(LabelRule(Origin::natural(), "s", "(unclosed"), ParseError);
}

TEST(ScanTest, UnlabeledFileIsPerFileError) {
  TempDir dir;
  std::mt19937_64 rng(4);
  dir.put("top.png", encode_png(refcodec::random_raster(rng, 4, 4)));
  const ScanResult r = scan_corpus(dir.path(), kNatural);
  EXPECT_TRUE(r.metas.empty());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].kind, "ParseError");
}

TEST(ScanTest, JsonlRoundTrip) {
  ImageMeta a;
  a.path = "root/n1/a.jpg";
  a.format = ImageFormat::Jpeg;
  a.width = 500;
  a.height = 375;
  a.qf = 96;
  a.qf_exact = true;
  a.qf_distance = 0;
  a.class_label = "n1";
  a.origin = Origin::natural();
  a.subset = "sd14";
  ImageMeta b = a;
  b.path = "root/n1/b.png";
  b.format = ImageFormat::Png;
  b.qf.reset();
  b.qf_exact = false;
  b.qf_distance.reset();
  b.origin = Origin::generated("Midjourney");

  std::stringstream io;
  write_metas_jsonl(io, {a, b});
  const std::string text = io.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            R"({"path":"root/n1/a.jpg","format":"JPEG","width":500,"height":375,"qf":96,"qf_exact":true,)"
            R"("qf_distance":0,"class_label":"n1","origin":"natural","subset":"sd14"})");
  EXPECT_EQ(text.find("\"qf\"", text.find('\n')), std::string::npos);  // absent optional omitted
  const auto back = read_metas_jsonl(io);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
}

TEST(ScanTest, JsonlRejectsInvalidRecordsWithLineNumbers) {
  std::istringstream bad(
      "\n{\"path\":\"p\",\"format\":\"PNG\",\"width\":0,\"height\":1,\"qf_exact\":false,"
      "\"class_label\":\"c\",\"origin\":\"natural\",\"subset\":\"s\"}\n");
  try {
    read_metas_jsonl(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream garbage("{not json\n");
  EXPECT_THROW(read_metas_jsonl(garbage), ParseError);
  std::istringstream qf_on_png(
      R"({"path":"p","format":"PNG","width":1,"height":1,"qf":90,"qf_exact":false,"qf_distance":3,"class_label":"c","origin":"natural","subset":"s"})");
  EXPECT_THROW(read_metas_jsonl(qf_on_png), ParseError);
}
