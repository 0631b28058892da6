#include <catch_amalgamated.hpp>

#include "isr/video.hpp"

using namespace isr;

namespace {

Video two_frames(double a = 0.2, double b = 0.4) {
  return Video({Frame::filled(4, 3, a), Frame::filled(4, 3, b)});
}

Dataset two_class_dataset() {
  Dataset d;
  d.class_names = {"a", "b"};
  d.items.push_back({two_frames(), 0, "v0"});
  d.items.push_back({two_frames(0.5, 0.6), 1, "v1"});
  return d;
}

}  // namespace

TEST_CASE("frame rejects bad construction") {
  CHECK_THROWS_AS(Frame(0, 3, {}), InvalidVideo);
  CHECK_THROWS_AS(Frame(2, 2, {0.0, 0.1, 0.2}), InvalidVideo);
  CHECK_THROWS_AS(Frame(1, 1, {1.5}), InvalidVideo);
  CHECK_THROWS_AS(Frame(1, 1, {std::nan("")}), InvalidVideo);
  CHECK_NOTHROW(Frame(1, 2, {0.0, 1.0}));
}

TEST_CASE("clamped reads stay on the border") {
  const Frame f(2, 2, {0.1, 0.2, 0.3, 0.4});
  CHECK(f.clamped(-5, -5) == 0.1);
  CHECK(f.clamped(9, 0) == 0.2);
  CHECK(f.clamped(0, 9) == 0.3);
  CHECK(f.clamped(1, 1) == f.at(1, 1));
}

TEST_CASE("video needs two frames of one size") {
  CHECK_THROWS_AS(Video({Frame::filled(4, 3, 0.0)}), InvalidVideo);
  CHECK_THROWS_AS(Video({Frame::filled(4, 3, 0.0), Frame::filled(3, 3, 0.0)}), InvalidVideo);
  const auto v = two_frames();
  CHECK(v.frame_count() == 2);
  CHECK(v.width() == 4);
  CHECK(v.height() == 3);
}

TEST_CASE("validate_dataset on a well-formed dataset is empty") {
  CHECK(validate_dataset(two_class_dataset()).empty());
}

TEST_CASE("validate_dataset reports a one-frame video") {
  auto d = two_class_dataset();
  d.items[0].video = Video::unchecked({Frame::filled(4, 3, 0.1)});
  const auto problems = validate_dataset(d);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0] == "video v0: frame count < 2");
}

TEST_CASE("validate_dataset reports a label outside the classes") {
  Dataset d = two_class_dataset();
  d.class_names = {"a", "b", "c"};
  d.items[1].label = 5;
  const auto problems = validate_dataset(d);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("label out of range") != std::string::npos);
}

TEST_CASE("validate_dataset reports one entry per violation") {
  auto d = two_class_dataset();
  d.items[1].source_id = "v0";
  d.items[1].label = 9;
  d.items[1].video = Video::unchecked({Frame::filled(4, 3, 0.1), Frame::filled(2, 2, 0.1)});
  const auto problems = validate_dataset(d);
  CHECK(problems.size() == 3);
}

TEST_CASE("luma weights sum to one") {
  CHECK(luma(1.0, 1.0, 1.0) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(luma(0.0, 0.0, 0.0) == 0.0);
}
