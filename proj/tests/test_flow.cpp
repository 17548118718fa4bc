#include "millibot/flow.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "millibot/errors.hpp"
#include "millibot/fixtures.hpp"
#include "millibot/random.hpp"
#include "millibot/text.hpp"

using namespace millibot;
using namespace millibot::flow;

namespace {

// uniform rightward flow on a small rectangle, all lumen
FlowGrid uniform_grid(double vx) {
  FlowGrid g;
  g.origin_mm = Vec2(0.0, 0.0);
  g.spacing_mm = 1.0;
  g.nx = 5;
  g.ny = 4;
  g.vx.assign(static_cast<std::size_t>(g.nx * g.ny), vx);
  g.vy.assign(static_cast<std::size_t>(g.nx * g.ny), 0.0);
  g.lumen.assign(static_cast<std::size_t>(g.nx * g.ny), 1);
  return g;
}

PulsatileProfile steady() {
  PulsatileProfile p;
  p.waveform = Waveform::kConstant;
  return p;
}

}  // namespace

TEST_CASE("rectified sine modulation") {
  PulsatileProfile p;
  p.waveform = Waveform::kRectifiedSine;
  p.frequency_hz = 3.0;
  SUBCASE("peaks at a quarter of the rectified period") {
    CHECK(modulation(p, 1.0 / 12.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("is periodic with period 1/(2f)") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      double t = 10.0 * rng.uniform();
      CHECK(std::abs(modulation(p, t) - modulation(p, t + 1.0 / 6.0)) <= 1e-9);
    }
  }
  SUBCASE("mean over one period is 2/pi") {
    double period = 1.0 / (2.0 * p.frequency_hz);
    int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      acc += modulation(p, (i + 0.5) * period / n);
    CHECK(acc / n == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-6));
    CHECK(mean_modulation(p) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-15));
  }
  SUBCASE("constant waveform is always 1") {
    PulsatileProfile c = steady();
    CHECK(modulation(c, 0.123) == 1.0);
    CHECK(mean_modulation(c) == 1.0);
  }
  SUBCASE("phase shifts the waveform") {
    PulsatileProfile shifted = p;
    shifted.phase = std::numbers::pi / 2.0;
    CHECK(modulation(shifted, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sampling at grid nodes returns the stored values") {
  FlowGrid g = uniform_grid(0.0);
  // distinct values at each node
  for (int r = 0; r < g.ny; ++r)
    for (int c = 0; c < g.nx; ++c) {
      g.vx[g.idx(c, r)] = 10.0 * r + c;
      g.vy[g.idx(c, r)] = -(10.0 * r + c);
    }
  for (int r = 0; r < g.ny; ++r)
    for (int c = 0; c < g.nx; ++c) {
      auto s = sample_flow(g, steady(), Vec2(c * 1.0, r * 1.0), 0.5);
      CHECK(s.inside);
      CHECK(s.velocity.x() == doctest::Approx(10.0 * r + c).epsilon(1e-14));
      CHECK(s.velocity.y() == doctest::Approx(-(10.0 * r + c)).epsilon(1e-14));
    }
}

TEST_CASE("bilinear interpolation at a cell center averages the corners") {
  FlowGrid g = uniform_grid(0.0);
  g.vx[g.idx(0, 0)] = 1.0;
  g.vx[g.idx(1, 0)] = 1.0;
  g.vx[g.idx(0, 1)] = 3.0;
  g.vx[g.idx(1, 1)] = 3.0;
  auto s = sample_flow(g, steady(), Vec2(0.5, 0.5), 0.0);
  CHECK(s.velocity.x() == doctest::Approx(2.0).epsilon(1e-14));
  SUBCASE("linear along the edge") {
    auto q = sample_flow(g, steady(), Vec2(0.25, 0.0), 0.0);
    CHECK(q.velocity.x() == doctest::Approx(1.0).epsilon(1e-14));
    auto w = sample_flow(g, steady(), Vec2(0.0, 0.75), 0.0);
    CHECK(w.velocity.x() == doctest::Approx(2.5).epsilon(1e-14));
  }
}

TEST_CASE("outside the hull and outside the lumen report zero and not inside") {
  FlowGrid g = uniform_grid(2.0);
  SUBCASE("outside the bounding hull") {
    auto s = sample_flow(g, steady(), Vec2(-0.5, 1.0), 0.0);
    CHECK_FALSE(s.inside);
    CHECK(s.velocity.norm() == 0.0);
    auto s2 = sample_flow(g, steady(), Vec2(2.0, 3.5), 0.0);
    CHECK_FALSE(s2.inside);
  }
  SUBCASE("nearest node outside the lumen") {
    g.lumen[g.idx(2, 1)] = 0;
    auto s = sample_flow(g, steady(), Vec2(2.2, 1.1), 0.0);  // nearest (2,1)
    CHECK_FALSE(s.inside);
    CHECK(s.velocity.norm() == 0.0);
    // just across the midpoint, nearest node is back in the lumen
    auto s2 = sample_flow(g, steady(), Vec2(2.6, 1.1), 0.0);
    CHECK(s2.inside);
  }
}

TEST_CASE("modulation multiplies the sampled velocity") {
  FlowGrid g = uniform_grid(2.0);
  PulsatileProfile p;
  p.waveform = Waveform::kRectifiedSine;
  p.frequency_hz = 3.0;
  double t = 0.031;
  auto s = sample_flow(g, p, Vec2(2.0, 1.0), t);
  CHECK(s.velocity.x() == doctest::Approx(2.0 * modulation(p, t)).epsilon(1e-14));
}

TEST_CASE("synthetic jet field rescales exactly to the requested peak") {
  for (double peak : {0.10, 0.07}) {
    FlowGrid g = fixtures::phantom_flow(peak);
    double vmax = 0.0;
    for (std::size_t i = 0; i < g.vx.size(); ++i)
      vmax = std::max(vmax, std::hypot(g.vx[i], g.vy[i]));
    CHECK(vmax == doctest::Approx(peak).epsilon(1e-9));
  }
}

TEST_CASE("synthetic jet decays monotonically along its axis") {
  SynthGeometry geo;
  geo.origin_mm = Vec2(-46.0, -46.0);
  geo.spacing_mm = 1.0;
  geo.nx = 93;
  geo.ny = 93;  // default lumen: open rectangle, walled rim
  JetInlet jet;
  jet.center_mm = Vec2(-40.0, 0.0);
  jet.direction = Vec2(1.0, 0.0);
  jet.width_mm = 3.0;
  jet.amplitude = 1.0;
  geo.inlets = {jet};
  FlowGrid g = synth_jet_flow(0.1, geo);
  double prev = 1e9;
  for (double x = -39.0; x <= 40.0; x += 1.0) {
    auto s = sample_flow(g, steady(), Vec2(x, 0.0), 0.0);
    double sp = s.velocity.norm();
    CHECK(sp < prev + 1e-15);
    prev = sp;
  }
}

TEST_CASE("synthetic flow is tangent to the channel wall") {
  FlowGrid g = fixtures::phantom_flow(0.10);
  int checked = 0;
  for (int r = 1; r + 1 < g.ny; ++r)
    for (int c = 1; c + 1 < g.nx; ++c) {
      if (!g.lumen[g.idx(c, r)]) continue;
      // wall normal from solid 4-neighbors
      Vec2 n(0.0, 0.0);
      if (!g.lumen[g.idx(c + 1, r)]) n += Vec2(1.0, 0.0);
      if (!g.lumen[g.idx(c - 1, r)]) n += Vec2(-1.0, 0.0);
      if (!g.lumen[g.idx(c, r + 1)]) n += Vec2(0.0, 1.0);
      if (!g.lumen[g.idx(c, r - 1)]) n += Vec2(0.0, -1.0);
      if (n.norm() == 0.0) continue;
      n.normalize();
      Vec2 v(g.vx[g.idx(c, r)], g.vy[g.idx(c, r)]);
      CHECK(std::abs(v.dot(n)) <= 1e-9 * std::max(v.norm(), 1e-12));
      ++checked;
    }
  CHECK(checked > 50);  // the phantom has plenty of wall nodes
}

TEST_CASE("zero peak produces an all-zero grid") {
  FlowGrid g = fixtures::phantom_flow(0.0);
  for (std::size_t i = 0; i < g.vx.size(); ++i) {
    CHECK(g.vx[i] == 0.0);
    CHECK(g.vy[i] == 0.0);
  }
}

TEST_CASE("peak scaling is linear") {
  FlowGrid a = fixtures::phantom_flow(0.05);
  FlowGrid b = fixtures::phantom_flow(0.10);
  for (std::size_t i = 0; i < a.vx.size(); ++i) {
    CHECK(b.vx[i] == doctest::Approx(2.0 * a.vx[i]).epsilon(1e-12));
    CHECK(b.vy[i] == doctest::Approx(2.0 * a.vy[i]).epsilon(1e-12));
  }
}

TEST_CASE("geometry validation") {
  SynthGeometry geo;
  geo.nx = 0;
  CHECK_THROWS_AS(synth_jet_flow(0.1, geo), GeometryError);
  geo = SynthGeometry{};
  geo.spacing_mm = -1.0;
  CHECK_THROWS_AS(synth_jet_flow(0.1, geo), GeometryError);
  geo = SynthGeometry{};
  JetInlet j;
  j.width_mm = 0.0;
  geo.inlets = {j};
  CHECK_THROWS_AS(synth_jet_flow(0.1, geo), GeometryError);
}

TEST_CASE("flow csv round-trips bit-exactly") {
  FlowGrid g = fixtures::phantom_flow(0.10);
  auto path = (std::filesystem::temp_directory_path() / "flow_rt.csv").string();
  save_flow_csv(path, g);
  FlowGrid l = load_flow_csv(path);
  REQUIRE(l.nx == g.nx);
  REQUIRE(l.ny == g.ny);
  CHECK(l.origin_mm == g.origin_mm);
  CHECK(l.spacing_mm == g.spacing_mm);
  for (std::size_t i = 0; i < g.vx.size(); ++i) {
    CHECK(l.vx[i] == g.vx[i]);
    CHECK(l.vy[i] == g.vy[i]);
  }
  SUBCASE("saving the loaded grid reproduces the file byte for byte") {
    auto path2 = (std::filesystem::temp_directory_path() / "flow_rt2.csv").string();
    save_flow_csv(path2, l);
    CHECK(read_file(path) == read_file(path2));
    std::filesystem::remove(path2);
  }
  SUBCASE("interpolated samples agree everywhere") {
    // loaded lumen is all-true, so compare only where the source is lumen
    Rng rng(5);
    int n = 0;
    while (n < 1000) {
      Vec2 p(-46.0 + 92.0 * rng.uniform(), -46.0 + 92.0 * rng.uniform());
      auto a = sample_flow(g, steady(), p, 0.0);
      if (!a.inside) continue;
      auto b = sample_flow(l, steady(), p, 0.0);
      CHECK((a.velocity - b.velocity).norm() <= 1e-12);
      ++n;
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("flow csv parse errors carry the line number") {
  auto dir = std::filesystem::temp_directory_path();
  SUBCASE("bad header") {
    auto p = (dir / "flow_bad1.csv").string();
    write_file(p, "x,y,vx,vy\n0,0,0,0\n");
    CHECK_THROWS_AS(load_flow_csv(p), ParseError);
    std::filesystem::remove(p);
  }
  SUBCASE("wrong column count on a data line") {
    auto p = (dir / "flow_bad2.csv").string();
    write_file(p, "x_mm,y_mm,vx_mps,vy_mps\n0,0,0,0\n1,0,0\n");
    try {
      load_flow_csv(p);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::filesystem::remove(p);
  }
  SUBCASE("non-numeric field") {
    auto p = (dir / "flow_bad3.csv").string();
    write_file(p, "x_mm,y_mm,vx_mps,vy_mps\n0,zero,0,0\n");
    CHECK_THROWS_AS(load_flow_csv(p), ParseError);
    std::filesystem::remove(p);
  }
  SUBCASE("non-uniform spacing") {
    auto p = (dir / "flow_bad4.csv").string();
    write_file(p,
               "x_mm,y_mm,vx_mps,vy_mps\n"
               "0,0,0,0\n1,0,0,0\n2.5,0,0,0\n"
               "0,1,0,0\n1,1,0,0\n2.5,1,0,0\n");
    CHECK_THROWS_AS(load_flow_csv(p), GridError);
    std::filesystem::remove(p);
  }
}
