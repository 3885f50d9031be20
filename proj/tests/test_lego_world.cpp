#include <doctest.h>

#include <set>

#include "lego/errors.hpp"
#include "lego/lego_world.hpp"
#include "lego/rng.hpp"
#include "oracles.hpp"

using namespace lego;

namespace {

int count_plate_interfaces(const LegoWorld& w) {
  int n = 0;
  for (const auto& c : w.interfaces()) n += c.lower == kPlateId;
  return n;
}

// Occupied (layer, row, col) triples, recomputed from the raw brick list.
bool footprints_disjoint(const LegoWorld& w) {
  std::set<std::tuple<int, int, int>> used;
  for (const auto& b : w.bricks()) {
    const int rs = b.orientation == Orientation::deg0 ? b.kind.width : b.kind.length;
    const int cs = b.orientation == Orientation::deg0 ? b.kind.length : b.kind.width;
    for (int r = 0; r < rs; ++r) {
      for (int c = 0; c < cs; ++c) {
        if (!used.insert({b.layer, b.cell.row + r, b.cell.col + c}).second) return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("brick kinds parse and validate") {
  CHECK(BrickKind::parse("2x4") == BrickKind{2, 4});
  CHECK(BrickKind::parse("1x2").name() == "1x2");
  CHECK_THROWS_AS(BrickKind::parse("3x3"), WorldError);
  CHECK_THROWS_AS(BrickKind::parse("2x"), WorldError);
  CHECK_THROWS_AS((BrickKind{3, 1}.validate()), WorldError);
}

TEST_CASE("single 2x4 brick has 8 knobs on the plate") {
  LegoWorld w = build_structure({}, {}, {}, {2, 4}, {Support::solid, 1}, {10, 10}, 7);
  CHECK(w.bricks().size() == 1);
  REQUIRE(w.interfaces().size() == 1);
  CHECK(w.interfaces()[0].lower == kPlateId);
  CHECK(w.interfaces()[0].knobs.size() == 8);
  CHECK(w.interfaces()[0].per_knob_tightness.size() == 8);
}

TEST_CASE("ten layer 1x2 tower counts") {
  LegoWorld w = build_structure({}, {}, {}, {1, 2}, {Support::solid, 10}, {10, 10}, 7);
  CHECK(w.bricks().size() == 10);
  CHECK(w.interfaces().size() == 10);
  CHECK(count_plate_interfaces(w) == 1);
  const int top = top_brick(w);
  CHECK(w.at(top).layer == 10);
  auto below = interface_below(w, top);
  REQUIRE(below.size() == 1);
  CHECK(w.at(below[0].lower).layer == 9);
}

TEST_CASE("hollow towers rest on two pillars") {
  LegoWorld w = build_structure({}, {}, {}, {2, 4}, {Support::hollow, 3}, {10, 10}, 7);
  CHECK(w.bricks().size() == 5);
  auto below = interface_below(w, top_brick(w));
  CHECK(below.size() == 2);
  int knobs = 0;
  for (const auto& c : below) knobs += static_cast<int>(c.knobs.size());
  CHECK(knobs == 4);  // the end knob columns only
  CHECK(footprints_disjoint(w));
}

TEST_CASE("same seed replays identical tightness") {
  auto a = build_structure({}, {}, {}, {2, 2}, {Support::solid, 10}, {8, 8}, 99);
  auto b = build_structure({}, {}, {}, {2, 2}, {Support::solid, 10}, {8, 8}, 99);
  auto c = build_structure({}, {}, {}, {2, 2}, {Support::solid, 10}, {8, 8}, 100);
  CHECK(snapshot(a) == snapshot(b));
  CHECK(snapshot(a) != snapshot(c));
  CHECK(snapshot(a, false) == snapshot(c, false));
}

TEST_CASE("tightness stays inside the scaled range") {
  TightnessModel m;
  auto w = build_structure({}, {}, m, {2, 4}, {Support::solid, 10}, {8, 8}, 5);
  for (const auto& c : w.interfaces()) {
    for (double t : c.per_knob_tightness) {
      CHECK(t >= m.tau_min * (1 - m.position_spread));
      CHECK(t <= m.tau_max * (1 + m.position_spread));
    }
  }
  TightnessModel fixed;
  fixed.stochastic = false;
  auto f = build_structure({}, {}, fixed, {2, 4}, {Support::solid, 3}, {8, 8}, 5);
  for (const auto& c : f.interfaces()) {
    for (double t : c.per_knob_tightness) CHECK(t == doctest::Approx(14.0));
  }
}

TEST_CASE("knob poses") {
  BrickDims d;
  PlateGrid plate;
  plate.origin = Pose::from_translation({100, 200, 300});
  LegoWorld w(plate, d, {}, 1);
  BrickInstance b;
  b.kind = {2, 4};
  b.cell = {0, 0};
  const int id = w.add_brick(b);

  SUBCASE("first knob of a corner brick") {
    Vec3 t = knob_world_pose(w, id, 0).translation;
    CHECK((t - Vec3(100 + d.knob_pitch / 2, 200 + d.knob_pitch / 2, 300 + d.brick_height)).norm() <
          1e-12);
  }
  SUBCASE("stacking adds one brick height") {
    BrickInstance up = b;
    up.layer = 2;
    const int id2 = w.add_brick(up);
    CHECK(knob_world_pose(w, id2, 3).translation.z() - knob_world_pose(w, id, 3).translation.z() ==
          doctest::Approx(d.brick_height));
  }
  SUBCASE("quarter turn swaps the footprint axes") {
    BrickInstance r = b;
    r.cell = {10, 10};
    r.orientation = Orientation::deg90;
    const int rid = w.add_brick(r);
    const BrickInstance& placed = w.at(rid);
    CHECK(placed.row_span() == 4);
    CHECK(placed.col_span() == 2);
    Pose frame = brick_frame(w, placed);
    for (int k = 0; k < 8; ++k) {
      Pose knob = knob_world_pose(w, rid, k);
      // Knob positions in the brick frame are the unrotated local offsets.
      Vec3 local = frame.rotation.transpose() * (knob.translation - frame.translation);
      Vec3 expect((k / 2 + 0.5) * d.knob_pitch, (k % 2 + 0.5) * d.knob_pitch, d.brick_height);
      CHECK((local - expect).norm() < 1e-9);
      CHECK((frame.rotation - Eigen::AngleAxisd(oracle::kPi / 2, Vec3::UnitZ()).toRotationMatrix())
                .norm() < 1e-12);
    }
    // Every knob lies over a cell of the rotated footprint.
    for (int k = 0; k < 8; ++k) {
      Vec3 t = knob_world_pose(w, rid, k).translation - Vec3(100, 200, 300);
      const int col = static_cast<int>(std::floor(t.x() / d.knob_pitch));
      const int row = static_cast<int>(std::floor(t.y() / d.knob_pitch));
      CHECK(row >= 10);
      CHECK(row < 14);
      CHECK(col >= 10);
      CHECK(col < 12);
    }
  }
  CHECK_THROWS_AS(knob_world_pose(w, id, 8), WorldError);
}

TEST_CASE("interface queries and lifecycle") {
  LegoWorld w = build_structure({}, {}, {}, {1, 2}, {Support::solid, 2}, {4, 4}, 3);
  const int top = top_brick(w);
  int bottom = -1;
  for (const auto& b : w.bricks()) {
    if (b.id != top) bottom = b.id;
  }
  auto plate_iface = interface_below(w, bottom);
  REQUIRE(plate_iface.size() == 1);
  CHECK(plate_iface[0].lower == kPlateId);
  CHECK_THROWS_AS(w.remove_brick(bottom), WorldError);
  w.remove_brick(top);
  CHECK_THROWS_AS(interface_below(w, top), WorldError);
  CHECK_THROWS_AS(w.at(top), WorldError);
}

TEST_CASE("placement problems") {
  LegoWorld w({10, 10, {}}, {}, {}, 1);
  BrickInstance b;
  b.kind = {2, 4};
  b.cell = {0, 7};
  CHECK(!w.placement_problem(b).empty());  // leaves the plate
  b.cell = {0, 6};
  CHECK(w.placement_problem(b).empty());
  w.add_brick(b);
  CHECK(!w.placement_problem(b).empty());  // overlap
  BrickInstance floating;
  floating.kind = {1, 2};
  floating.cell = {5, 0};
  floating.layer = 2;
  CHECK(!w.placement_problem(floating).empty());
  CHECK_THROWS_AS(w.add_brick(floating), WorldError);
  BrickInstance dup = b;
  dup.id = 0;
  dup.cell = {4, 0};
  CHECK_THROWS_AS(w.add_brick(dup), WorldError);
}

TEST_CASE("assemble then disassemble restores topology") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    LegoWorld w = build_structure({}, {}, {}, {2, 2}, {Support::solid, 3}, {6, 6}, mix(5, trial));
    const std::string before = snapshot(w, false);
    BrickInstance b;
    b.kind = {1, 2};
    b.cell = {6 + static_cast<int>(rng() % 2), 6};
    b.layer = 4;
    const int id = w.add_brick(b);
    CHECK(snapshot(w, false) != before);
    w.remove_brick(id);
    CHECK(snapshot(w, false) == before);
  }
}

TEST_CASE("randomized build sequences never overlap") {
  Rng rng(12);
  const BrickKind kinds[] = {{1, 2}, {1, 4}, {2, 2}, {2, 4}};
  for (int trial = 0; trial < 200; ++trial) {
    LegoWorld w({12, 12, {}}, {}, {}, mix(12, trial));
    for (int k = 0; k < 60; ++k) {
      BrickInstance b;
      b.kind = kinds[rng() % 4];
      b.cell = {static_cast<int>(rng() % 12), static_cast<int>(rng() % 12)};
      b.layer = 1 + static_cast<int>(rng() % 3);
      b.orientation = rng() % 2 ? Orientation::deg0 : Orientation::deg90;
      if (w.placement_problem(b).empty()) {
        w.add_brick(b);
      } else {
        CHECK_THROWS_AS(w.add_brick(b), WorldError);
      }
      if (rng() % 5 == 0 && !w.bricks().empty()) {
        const auto& v = w.bricks();
        const int id = v[rng() % v.size()].id;
        if (!w.has_brick_above(id)) w.remove_brick(id);
      }
    }
    CHECK(footprints_disjoint(w));
  }
}

TEST_CASE("evaluation grid is 5x5 and keeps room for pillars") {
  PlateGrid plate;
  auto cells = evaluation_positions(plate);
  REQUIRE(cells.size() == 25);
  for (const Cell& c : cells) {
    CHECK(c.row >= 4);
    CHECK(c.col >= 4);
    CHECK(c.row + 4 + 1 <= plate.rows - 4 + 1);
    CHECK(c.col + 4 + 1 <= plate.cols - 4 + 1);
  }
  for (const Cell& c : cells) {
    for (Support s : {Support::solid, Support::hollow}) {
      for (BrickKind k : {BrickKind{1, 2}, BrickKind{2, 4}}) {
        CHECK_NOTHROW(build_structure(plate, {}, {}, k, {s, 10}, c, 1));
      }
    }
  }
}
