#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "rdd/errors.hpp"
#include "rdd/io.hpp"

using namespace rdd;
using fixtures::det;

namespace {

std::vector<Detection> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_detections(in);
}

std::vector<SubmissionRow> parse_rows(const std::string& text) {
  std::istringstream in(text);
  return parse_submission(in);
}

std::string rows_text(const std::vector<SubmissionRow>& rows) {
  std::ostringstream out;
  write_submission_rows(rows, out);
  return out.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("detection lines") {
  const auto dets = parse(
      "{\"image\":\"Japan_000001.jpg\",\"class\":\"D20\",\"bbox\":[100,200,300,400],\"score\":0.87}\n"
      "\n"
      "  {\"score\": 0.5, \"bbox\": [1.5, 2, 3, 4.25], \"class\": \"D43\", \"image\": \"b.jpg\"}  \n");
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].image_id() == "Japan_000001.jpg");
  CHECK(dets[0].label() == DamageClass("D20"));
  CHECK(dets[0].box() == BoundingBox(100, 200, 300, 400));
  CHECK(dets[0].score() == 0.87);
  CHECK(dets[1].label().code() == "D43");
  CHECK(dets[1].box() == BoundingBox(1.5, 2, 3, 4.25));
}

TEST_CASE("empty input gives no detections") {
  CHECK(parse("").empty());
  CHECK(parse("\n\n  \n").empty());
}

TEST_CASE("bad detection lines name the line") {
  const auto expect_line = [](const std::string& text, std::size_t line) {
    try {
      parse(text);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK_MESSAGE(std::string(e.what()).find("line " + std::to_string(line)) != std::string::npos, e.what());
    }
  };
  const std::string good = "{\"image\":\"a\",\"class\":\"D00\",\"bbox\":[0,0,1,1],\"score\":0.5}\n";
  expect_line(good + "{\"image\":\"a\",\"class\":\"D00\",\"bbox\":[0,0,1,1],\"score\":1.3}\n", 2);
  expect_line(good + good + "{not json}\n", 3);
  expect_line("{\"image\":\"a\",\"class\":\"D00\",\"bbox\":[0,0,1],\"score\":0.5}\n", 1);
  expect_line("{\"image\":\"a\",\"class\":\"D00\",\"bbox\":[5,0,1,1],\"score\":0.5}\n", 1);
  expect_line("{\"image\":\"a\",\"bbox\":[0,0,1,1],\"score\":0.5}\n", 1);
  expect_line("[1,2]\n", 1);
}

TEST_CASE("detections round trip through text") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 500), s(0, 1);
  std::vector<Detection> dets;
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng), y = u(rng);
    dets.push_back(det("img_" + std::to_string(i % 7) + ".jpg", "D10", x, y, x + 1 + u(rng), y + 1 + u(rng), s(rng)));
  }
  std::ostringstream out;
  write_detections(dets, out);
  const auto back = parse(out.str());
  REQUIRE(back.size() == dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(back[i].image_id() == dets[i].image_id());
    CHECK(back[i].box() == dets[i].box());
    CHECK(back[i].score() == dets[i].score());
  }
}

TEST_CASE("submission rows") {
  SUBCASE("single prediction") {
    const std::vector<Detection> dets{det("img.jpg", "D20", 100, 200, 300, 400, 0.9)};
    const auto rows = build_submission(dets, LabelEncoding::code());
    CHECK(rows_text(rows) == "img.jpg,D20 100 200 300 400\n");
  }
  SUBCASE("rows sorted by name, predictions by descending score") {
    const std::vector<Detection> dets{det("b.jpg", "D00", 1, 1, 2, 2, 0.5), det("a.jpg", "D10", 1, 1, 3, 3, 0.2),
                                      det("a.jpg", "D40", 4, 4, 6, 6, 0.8)};
    CHECK(rows_text(build_submission(dets, LabelEncoding::code())) ==
          "a.jpg,D40 4 4 6 6 D10 1 1 3 3\nb.jpg,D00 1 1 2 2\n");
  }
  SUBCASE("rounding half away from zero, never collapsing a box") {
    const std::vector<Detection> dets{det("a.jpg", "D00", 0.5, 1.49, 2.5, 3.5, 0.9),
                                      det("a.jpg", "D00", 10.2, 10.2, 10.4, 10.4, 0.8)};
    CHECK(rows_text(build_submission(dets, LabelEncoding::code())) == "a.jpg,D00 1 1 3 4 D00 10 10 11 11\n");
  }
  SUBCASE("index encoding") {
    const std::vector<Detection> dets{det("a.jpg", "D00", 0, 0, 1, 1, 0.9), det("a.jpg", "D10", 0, 0, 1, 1, 0.8),
                                      det("a.jpg", "D20", 0, 0, 1, 1, 0.7), det("a.jpg", "D40", 0, 0, 1, 1, 0.6)};
    CHECK(rows_text(build_submission(dets, LabelEncoding::index())) ==
          "a.jpg,1 0 0 1 1 2 0 0 1 1 3 0 0 1 1 4 0 0 1 1\n");
    CHECK(LabelEncoding::index().label("3") == DamageClass("D20"));
  }
  SUBCASE("unmapped classes") {
    const std::vector<Detection> dets{det("a.jpg", "D43", 0, 0, 1, 1, 0.9)};
    CHECK_THROWS_AS(build_submission(dets, LabelEncoding::index()), EncodingError);
    CHECK_THROWS_AS(LabelEncoding::index().label("7"), EncodingError);
    const auto custom = LabelEncoding::custom({{DamageClass("D43"), "crosswalk"}});
    CHECK(custom.token(DamageClass("D43")) == "crosswalk");
    CHECK_THROWS_AS(custom.token(DamageClass("D00")), EncodingError);
  }
  SUBCASE("empty rows on request") {
    const std::vector<Detection> dets{det("b.jpg", "D00", 1, 1, 2, 2, 0.5)};
    SubmissionOptions opts;
    opts.include_empty = true;
    opts.all_images = {"c.jpg", "a.jpg", "b.jpg"};
    CHECK(rows_text(build_submission(dets, LabelEncoding::code(), opts)) == "a.jpg,\nb.jpg,D00 1 1 2 2\nc.jpg,\n");
    CHECK(rows_text(build_submission(dets, LabelEncoding::code())) == "b.jpg,D00 1 1 2 2\n");
  }
}

TEST_CASE("submission parsing") {
  const auto rows = parse_rows("a.jpg,D40 4 4 6 6 D10 1 1 3 3\nb.jpg,\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].image_name == "a.jpg");
  CHECK(rows[0].predictions == std::vector<SubmissionPrediction>{{"D40", 4, 4, 6, 6}, {"D10", 1, 1, 3, 3}});
  CHECK(rows[1].predictions.empty());
  CHECK_THROWS_AS(parse_rows("a.jpg D00 1 1 2 2\n"), ParseError);
  CHECK_THROWS_AS(parse_rows("a.jpg,D00 1 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_rows("a.jpg,D00 1 1 2 x\n"), ParseError);
}

TEST_CASE("property: submission round trip is byte-identical") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 590), s(0, 1), e(1, 100);
  std::uniform_int_distribution<int> cls(0, 3), img(0, 40);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Detection> dets;
    for (int i = 0; i < 100; ++i) {
      const double x = u(rng), y = u(rng);
      dets.emplace_back("Czech_" + std::to_string(img(rng)) + ".jpg", whitelisted_classes()[cls(rng)],
                        BoundingBox(x, y, x + e(rng), y + e(rng)), s(rng));
    }
    const auto rows = build_submission(dets, LabelEncoding::index());
    const auto text = rows_text(rows);
    CHECK(parse_rows(text) == rows);
    CHECK(rows_text(parse_rows(text)) == text);
    CHECK(rows_text(build_submission(dets, LabelEncoding::index())) == text);
  }
}

TEST_CASE("files") {
  fixtures::TempDir dir("io");
  const std::vector<Detection> dets{det("a.jpg", "D00", 1, 1, 2, 2, 0.5)};
  write_detections(dets, dir.path() / "d.jsonl");
  CHECK(read_detections(dir.path() / "d.jsonl").size() == 1);
  CHECK(write_submission(dets, LabelEncoding::code(), dir.path() / "s.csv") == 1);
  CHECK(read_submission(dir.path() / "s.csv").size() == 1);
  CHECK_THROWS_AS(read_detections(dir.path() / "missing.jsonl"), IoError);
}

}  // TEST_SUITE
