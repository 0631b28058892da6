#include <catch_amalgamated.hpp>

#include <random>

#include "isr/transform.hpp"
#include "oracles.hpp"

using namespace isr;

TEST_CASE("identity warp is bit-exact") {
  std::mt19937_64 rng(3);
  const auto f = oracle::random_frame(17, 11, rng);
  CHECK(apply_motion_transform(f, MotionTransform::identity()) == f);
}

TEST_CASE("integer shift moves pixels and clamps the left column") {
  std::mt19937_64 rng(4);
  const auto f = oracle::random_frame(8, 6, rng);
  const auto g = apply_motion_transform(f, {1.0, 0.0, 1.0, 0.0});
  for (std::size_t y = 0; y < 6; ++y) {
    CHECK(g.at(0, y) == f.at(0, y));
    for (std::size_t x = 1; x < 8; ++x) CHECK(g.at(x, y) == f.at(x - 1, y));
  }
}

TEST_CASE("integer shifts in both axes are exact in the interior") {
  std::mt19937_64 rng(5);
  const auto f = oracle::random_frame(10, 9, rng);
  const auto g = apply_motion_transform(f, {-2.0, 1.0, 1.0, 0.0});
  for (std::size_t y = 1; y < 9; ++y)
    for (std::size_t x = 0; x + 2 < 10; ++x) CHECK(g.at(x, y) == f.at(x + 2, y - 1));
}

TEST_CASE("half-pixel shift of a two-pixel row") {
  const Frame f(2, 1, {0.0, 1.0});
  const auto g = apply_motion_transform(f, {0.5, 0.0, 1.0, 0.0});
  CHECK(g.at(0, 0) == 0.0);
  CHECK(g.at(1, 0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("warp keeps dimensions and range") {
  std::mt19937_64 rng(6);
  const auto f = oracle::random_frame(12, 9, rng);
  const auto g = apply_motion_transform(f, {0.3, -0.7, 1.1, degrees(5.0)});
  CHECK(g.width() == 12);
  CHECK(g.height() == 9);
  for (double p : g.pixels()) CHECK((p >= 0.0 && p <= 1.0));
}

TEST_CASE("scale about the center leaves the center pixel fixed") {
  std::mt19937_64 rng(7);
  const auto f = oracle::random_frame(9, 9, rng);
  const auto g = apply_motion_transform(f, {0.0, 0.0, 1.1, degrees(5.0)});
  CHECK(g.at(4, 4) == Catch::Approx(f.at(4, 4)).margin(1e-12));
}

TEST_CASE("two-by-two block mean") {
  const Frame f(2, 2, {1.0 / 7, 3.0 / 7, 5.0 / 7, 7.0 / 7});
  const auto g = area_downsample(f, {1, 1});
  CHECK(g.at(0, 0) == Catch::Approx(16.0 / 28.0).margin(1e-15));
}

TEST_CASE("constant frame downsamples to a constant") {
  const auto g = area_downsample(Frame::filled(37, 23, 0.4), {5, 7});
  for (double p : g.pixels()) CHECK(p == Catch::Approx(0.4).margin(1e-14));
}

TEST_CASE("fractional overlap weights on a row of three") {
  // [0, 3, 6] scaled into [0, 1]; two outputs of width 1.5 source pixels:
  // (1*0 + 0.5*3) / 1.5 = 1 and (0.5*3 + 1*6) / 1.5 = 5.
  const Frame f(3, 2, {0.0, 0.3, 0.6, 0.0, 0.3, 0.6});
  const auto g = area_downsample(f, {2, 1});
  CHECK(g.at(0, 0) == Catch::Approx(0.1).margin(1e-15));
  CHECK(g.at(1, 0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("downsample rejects targets that are not smaller") {
  const auto f = Frame::filled(16, 12, 0.0);
  CHECK_THROWS_AS(area_downsample(f, {16, 6}), std::invalid_argument);
  CHECK_THROWS_AS(area_downsample(f, {8, 12}), std::invalid_argument);
  CHECK_THROWS_AS(area_downsample(f, {0, 6}), std::invalid_argument);
}

TEST_CASE("integer-ratio downsample matches the block-mean oracle and conserves the mean") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 8), factor(2, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t ow = dim(rng), oh = dim(rng), fx = factor(rng), fy = factor(rng);
    const auto f = oracle::random_frame(ow * fx, oh * fy, rng);
    const auto g = area_downsample(f, {ow, oh});
    const auto expect = oracle::block_mean(f, fx, fy);
    double in_mean = 0.0, out_mean = 0.0;
    for (double p : f.pixels()) in_mean += p;
    for (std::size_t i = 0; i < expect.size(); ++i) {
      REQUIRE(std::abs(g.pixels()[i] - expect[i]) <= 1e-12);
      out_mean += g.pixels()[i];
    }
    CHECK(std::abs(in_mean / static_cast<double>(f.size()) - out_mean / static_cast<double>(g.size())) <= 1e-12);
  }
}

TEST_CASE("center crop to aspect") {
  const auto wide = center_crop_to_aspect(Frame::filled(100, 60, 0.5), 4, 3);
  CHECK(wide.width() == 80);
  CHECK(wide.height() == 60);
  const auto tall = center_crop_to_aspect(Frame::filled(40, 60, 0.5), 4, 3);
  CHECK(tall.width() == 40);
  CHECK(tall.height() == 30);
  std::vector<double> px(6 * 3);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<double>(i % 6) / 10.0;
  const auto c = center_crop_to_aspect(Frame(6, 3, px), 4, 3);
  CHECK(c.width() == 4);
  CHECK(c.at(0, 0) == Catch::Approx(0.1));
}

namespace {

Video random_video(std::size_t w, std::size_t h, std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Frame> fs;
  for (std::size_t i = 0; i < frames; ++i) fs.push_back(oracle::random_frame(w, h, rng));
  return Video(std::move(fs));
}

}  // namespace

TEST_CASE("isr_generate with the identity equals the resize baseline") {
  const auto v = random_video(64, 48, 3, 1);
  CHECK(isr_generate(v, MotionTransform::identity(), {}) == hr_resize_baseline(v, {}));
}

TEST_CASE("resize baseline shape and constants") {
  const auto v = random_video(64, 48, 4, 2);
  const auto lr = hr_resize_baseline(v, {});
  CHECK(lr.frame_count() == 4);
  CHECK(lr.width() == 16);
  CHECK(lr.height() == 12);
  const Video c({Frame::filled(64, 48, 0.3), Frame::filled(64, 48, 0.3)});
  const auto resized = hr_resize_baseline(c, {});
  for (const auto& f : resized.frames())
    for (double p : f.pixels()) CHECK(p == Catch::Approx(0.3).margin(1e-14));
}

TEST_CASE("isr_generate is defined frame by frame") {
  const auto v = random_video(32, 24, 2, 3);
  const MotionTransform t{0.5, -0.5, 1.1, degrees(5.0)};
  const DownsampleSpec d{8, 6};
  const auto both = isr_generate(v, t, d);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto single = isr_generate(Video({v[i], v[i]}), t, d);
    CHECK(both[i] == single[0]);
  }
}

TEST_CASE("a half-pixel shift changes the LR rendering of an off-grid edge") {
  std::vector<double> px(64 * 48);
  for (std::size_t y = 0; y < 48; ++y)
    for (std::size_t x = 0; x < 64; ++x) px[y * 64 + x] = x >= 30 ? 1.0 : 0.0;  // edge inside LR column 7
  const Video v({Frame(64, 48, px), Frame(64, 48, px)});
  const auto a = isr_generate(v, MotionTransform::identity(), {});
  const auto b = isr_generate(v, {0.5, 0.0, 1.0, 0.0}, {});
  double max_diff = 0.0;
  for (std::size_t i = 0; i < a[0].size(); ++i) max_diff = std::max(max_diff, std::abs(a[0].pixels()[i] - b[0].pixels()[i]));
  CHECK(max_diff > 0.01);
}

TEST_CASE("non-matching aspect is cropped before downsampling") {
  const auto v = random_video(100, 60, 2, 4);
  const auto lr = hr_resize_baseline(v, {});
  CHECK(lr.width() == 16);
  CHECK(lr.height() == 12);
}

TEST_CASE("pool construction") {
  PoolGrid small;
  small.shifts_x = {0.0, 0.5};
  small.shifts_y = {0.0, 0.5};
  small.scales = {1.0};
  small.rotations = {0.0};
  const auto p = build_pool(small);
  CHECK(p.size() == 4);
  CHECK(p[0].is_identity());

  const auto def = build_pool({});
  CHECK(def.size() == 5 * 5 * 3 * 3);
  bool has_identity = false;
  for (const auto& t : def.candidates) has_identity |= t.is_identity();
  CHECK(has_identity);
  CHECK(build_pool({}).candidates == def.candidates);
  // lexicographic: rotation varies fastest, then scale, then shift y
  CHECK(def[1].rotation == 0.0);
  CHECK(def[3].scale == 1.0);
  CHECK(def[9].dy == -0.5);
  CHECK(def[45].dx == -0.5);

  PoolGrid no_unit;
  no_unit.scales = {0.9, 1.1};
  CHECK_THROWS_AS(build_pool(no_unit), std::invalid_argument);
  PoolGrid empty;
  empty.rotations.clear();
  CHECK_THROWS_AS(build_pool(empty), std::invalid_argument);
  PoolGrid wild;
  wild.rotations = {0.0, degrees(30.0)};
  CHECK_THROWS_AS(build_pool(wild), std::invalid_argument);
}

TEST_CASE("transform set rejects near-duplicates") {
  CHECK_THROWS_AS(TransformSet({{0.5, 0, 1, 0}, {0.5 + 1e-12, 0, 1, 0}}), std::invalid_argument);
  CHECK_NOTHROW(TransformSet({{0.5, 0, 1, 0}, {0.5 + 1e-6, 0, 1, 0}}));
}

TEST_CASE("warp audit counts non-identity warps per role") {
  WarpAudit::instance().reset();
  const auto f = Frame::filled(8, 6, 0.5);
  {
    RoleScope r(DataRole::test);
    (void)apply_motion_transform(f, MotionTransform::identity());
    CHECK(WarpAudit::current_role() == DataRole::test);
  }
  {
    RoleScope r(DataRole::train);
    (void)apply_motion_transform(f, {0.5, 0, 1, 0});
  }
  CHECK(WarpAudit::current_role() == DataRole::unspecified);
  CHECK(WarpAudit::instance().count(DataRole::test) == 0);
  CHECK(WarpAudit::instance().count(DataRole::train) == 1);
}
