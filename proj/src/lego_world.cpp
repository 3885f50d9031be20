#include "lego/lego_world.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <numbers>
#include <set>
#include <sstream>

#include "lego/errors.hpp"
#include "lego/rng.hpp"

namespace lego {

void BrickKind::validate() const {
  bool ok = (width == 1 || width == 2) && (length == 2 || length == 4) && width <= length;
  if (!ok) throw WorldError("unsupported brick kind " + name());
}

std::string BrickKind::name() const {
  return std::to_string(width) + "x" + std::to_string(length);
}

BrickKind BrickKind::parse(const std::string& text) {
  BrickKind kind;
  char sep = 0;
  std::istringstream is(text);
  if (!(is >> kind.width >> sep >> kind.length) || (sep != 'x' && sep != 'X')) {
    throw WorldError("cannot parse brick kind '" + text + "'");
  }
  kind.validate();
  return kind;
}

void BrickDims::validate() const {
  if (knob_pitch <= 0 || brick_height <= 0 || knob_height <= 0 || knob_diameter <= 0 ||
      top_lever <= 0 || side_lever <= 0) {
    throw WorldError("brick dimensions must be strictly positive");
  }
}

void StructureStyle::validate() const {
  if (height_layers < 1 || height_layers > 10) throw WorldError("structure height must be 1..10");
  if (support == Support::hollow && height_layers < 2) {
    throw WorldError("hollow support needs at least two layers");
  }
}

std::vector<Cell> BrickInstance::footprint() const {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(row_span() * col_span()));
  for (int r = 0; r < row_span(); ++r) {
    for (int c = 0; c < col_span(); ++c) cells.push_back({cell.row + r, cell.col + c});
  }
  return cells;
}

bool BrickInstance::overlaps(const BrickInstance& other) const {
  if (layer != other.layer) return false;
  bool rows = cell.row < other.cell.row + other.row_span() && other.cell.row < cell.row + row_span();
  bool cols = cell.col < other.cell.col + other.col_span() && other.cell.col < cell.col + col_span();
  return rows && cols;
}

double ConnectionState::mean_tightness() const {
  if (per_knob_tightness.empty()) return 0.0;
  return std::accumulate(per_knob_tightness.begin(), per_knob_tightness.end(), 0.0) /
         static_cast<double>(per_knob_tightness.size());
}

LegoWorld::LegoWorld(PlateGrid plate, BrickDims dims, TightnessModel tightness, std::uint64_t seed)
    : plate_(std::move(plate)), dims_(dims), tightness_(tightness), seed_(seed) {
  dims_.validate();
}

const BrickInstance* LegoWorld::find(int id) const {
  auto it = std::find_if(bricks_.begin(), bricks_.end(), [id](const auto& b) { return b.id == id; });
  return it == bricks_.end() ? nullptr : &*it;
}

const BrickInstance& LegoWorld::at(int id) const {
  const BrickInstance* b = find(id);
  if (b == nullptr) throw WorldError("unknown brick id " + std::to_string(id));
  return *b;
}

namespace {

std::vector<Cell> shared_cells(const BrickInstance& a, const BrickInstance& b) {
  std::vector<Cell> out;
  auto fa = a.footprint();
  auto fb = b.footprint();
  std::set<Cell> sb(fb.begin(), fb.end());
  for (const Cell& c : fa) {
    if (sb.count(c) != 0) out.push_back(c);
  }
  return out;
}

}  // namespace

std::string LegoWorld::placement_problem(const BrickInstance& p) const {
  try {
    p.kind.validate();
  } catch (const WorldError& e) {
    return e.what();
  }
  if (p.layer < 1) return "layer must be >= 1";
  if (p.cell.row < 0 || p.cell.col < 0 || p.cell.row + p.row_span() > plate_.rows ||
      p.cell.col + p.col_span() > plate_.cols) {
    return "footprint leaves the plate";
  }
  for (const auto& b : bricks_) {
    if (b.overlaps(p)) return "footprint overlaps brick " + std::to_string(b.id);
  }
  if (p.layer > 1) {
    bool supported = std::any_of(bricks_.begin(), bricks_.end(), [&](const BrickInstance& b) {
      if (b.layer != p.layer - 1) return false;
      BrickInstance probe = p;
      probe.layer = b.layer;
      return probe.overlaps(b);
    });
    if (!supported) return "no supporting brick below layer " + std::to_string(p.layer);
  }
  return {};
}

std::vector<int> LegoWorld::bricks_above(int id) const {
  const BrickInstance& brick = at(id);
  std::vector<int> out;
  for (const auto& b : bricks_) {
    if (b.layer != brick.layer + 1) continue;
    BrickInstance probe = b;
    probe.layer = brick.layer;
    if (probe.overlaps(brick)) out.push_back(b.id);
  }
  return out;
}

bool LegoWorld::has_brick_above(int id) const { return !bricks_above(id).empty(); }

int LegoWorld::add_brick(BrickInstance placement) {
  if (placement.id >= 0 && find(placement.id) != nullptr) {
    throw WorldError("duplicate brick id " + std::to_string(placement.id));
  }
  if (std::string why = placement_problem(placement); !why.empty()) throw WorldError(why);
  if (placement.id < 0) placement.id = next_id_;
  next_id_ = std::max(next_id_, placement.id + 1);
  ++assembly_count_;

  auto make_interface = [&](const BrickInstance& upper, int lower_id, std::vector<Cell> knobs) {
    ConnectionState iface;
    iface.upper = upper.id;
    iface.lower = lower_id;
    iface.knobs = std::move(knobs);
    Rng rng(mix(seed_, 0x74696768ULL, static_cast<std::uint64_t>(upper.id),
                static_cast<std::uint64_t>(lower_id + 1), assembly_count_));
    double factor = 1.0;
    if (tightness_.stochastic && tightness_.position_spread > 0.0) {
      Rng pos(mix(tightness_.position_salt, static_cast<std::uint64_t>(upper.cell.row),
                  static_cast<std::uint64_t>(upper.cell.col), static_cast<std::uint64_t>(upper.layer)));
      factor = 1.0 + tightness_.position_spread * (2.0 * uniform01(pos) - 1.0);
    }
    for (std::size_t k = 0; k < iface.knobs.size(); ++k) {
      double tau = tightness_.stochastic ? uniform(rng, tightness_.tau_min, tightness_.tau_max)
                                         : 0.5 * (tightness_.tau_min + tightness_.tau_max);
      iface.per_knob_tightness.push_back(tau * factor);
    }
    interfaces_.push_back(std::move(iface));
  };

  if (placement.layer == 1) {
    make_interface(placement, kPlateId, placement.footprint());
  }
  for (const auto& b : bricks_) {
    if (b.layer == placement.layer - 1) {
      BrickInstance probe = b;
      probe.layer = placement.layer;
      if (auto cells = shared_cells(placement, probe); !cells.empty()) {
        make_interface(placement, b.id, std::move(cells));
      }
    } else if (b.layer == placement.layer + 1) {
      BrickInstance probe = b;
      probe.layer = placement.layer;
      if (auto cells = shared_cells(probe, placement); !cells.empty()) {
        make_interface(b, placement.id, std::move(cells));
      }
    }
  }
  bricks_.push_back(placement);
  return placement.id;
}

BrickInstance LegoWorld::remove_brick(int id) {
  BrickInstance brick = at(id);
  if (has_brick_above(id)) {
    throw WorldError("brick " + std::to_string(id) + " is covered and cannot be removed");
  }
  std::erase_if(bricks_, [id](const BrickInstance& b) { return b.id == id; });
  std::erase_if(interfaces_,
                [id](const ConnectionState& c) { return c.upper == id || c.lower == id; });
  return brick;
}

LegoWorld build_structure(const PlateGrid& plate, const BrickDims& dims,
                          const TightnessModel& tightness, BrickKind kind, StructureStyle style,
                          Cell cell, std::uint64_t seed, Orientation orientation) {
  kind.validate();
  style.validate();
  LegoWorld world(plate, dims, tightness, seed);
  const int top_layer = style.height_layers;

  auto place = [&](BrickKind k, Cell c, int layer) {
    BrickInstance b;
    b.kind = k;
    b.cell = c;
    b.layer = layer;
    b.orientation = orientation;
    world.add_brick(b);
  };

  for (int layer = 1; layer < top_layer; ++layer) {
    if (style.support == Support::solid) {
      place(kind, cell, layer);
    } else {
      BrickKind pillar{kind.width, 2};
      if (orientation == Orientation::deg0) {
        place(pillar, {cell.row, cell.col - 1}, layer);
        place(pillar, {cell.row, cell.col + kind.length - 1}, layer);
      } else {
        place(pillar, {cell.row - 1, cell.col}, layer);
        place(pillar, {cell.row + kind.length - 1, cell.col}, layer);
      }
    }
  }
  place(kind, cell, top_layer);
  return world;
}

int top_brick(const LegoWorld& world) {
  if (world.bricks().empty()) throw WorldError("world has no bricks");
  const BrickInstance* top = &world.bricks().front();
  for (const auto& b : world.bricks()) {
    if (b.layer > top->layer) top = &b;
  }
  return top->id;
}

Pose brick_frame(const LegoWorld& world, const BrickInstance& brick) {
  const BrickDims& d = world.dims();
  double z = (brick.layer - 1) * d.brick_height;
  Pose local;
  if (brick.orientation == Orientation::deg0) {
    local.translation = {brick.cell.col * d.knob_pitch, brick.cell.row * d.knob_pitch, z};
  } else {
    local.rotation = rot_z(std::numbers::pi / 2);
    local.translation = {(brick.cell.col + brick.kind.width) * d.knob_pitch,
                         brick.cell.row * d.knob_pitch, z};
  }
  return compose(world.plate().origin, local);
}

Pose knob_world_pose(const LegoWorld& world, int brick_id, int knob_index) {
  const BrickInstance& brick = world.at(brick_id);
  if (knob_index < 0 || knob_index >= brick.kind.knobs()) {
    throw WorldError("knob index out of range");
  }
  const BrickDims& d = world.dims();
  int along = knob_index / brick.kind.width;
  int across = knob_index % brick.kind.width;
  Pose knob = Pose::from_translation(
      {(along + 0.5) * d.knob_pitch, (across + 0.5) * d.knob_pitch, d.brick_height});
  return compose(brick_frame(world, brick), knob);
}

std::vector<ConnectionState> interface_below(const LegoWorld& world, int brick_id) {
  world.at(brick_id);
  std::vector<ConnectionState> out;
  for (const auto& c : world.interfaces()) {
    if (c.upper == brick_id) out.push_back(c);
  }
  return out;
}

std::vector<Cell> evaluation_positions(const PlateGrid& plate, int margin) {
  std::vector<Cell> cells;
  auto coord = [margin](int extent, int i) {
    int usable = extent - 2 * margin - 4;  // leave room for a 4-knob footprint
    return margin + (usable * i) / 4;
  };
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) cells.push_back({coord(plate.rows, r), coord(plate.cols, c)});
  }
  return cells;
}

std::string orientation_name(Orientation o) { return o == Orientation::deg0 ? "0" : "90"; }

Orientation parse_orientation(const std::string& text) {
  if (text == "0") return Orientation::deg0;
  if (text == "90") return Orientation::deg90;
  throw WorldError("orientation must be 0 or 90, got '" + text + "'");
}

std::string support_name(Support s) { return s == Support::solid ? "solid" : "hollow"; }

Support parse_support(const std::string& text) {
  if (text == "solid") return Support::solid;
  if (text == "hollow") return Support::hollow;
  throw WorldError("support must be solid or hollow, got '" + text + "'");
}

std::string snapshot(const LegoWorld& world, bool include_tightness) {
  std::ostringstream os;
  os << "plate " << world.plate().rows << "x" << world.plate().cols << "\n";
  auto bricks = world.bricks();
  std::sort(bricks.begin(), bricks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& b : bricks) {
    os << "brick id=" << b.id << " kind=" << b.kind.name() << " cell=(" << b.cell.row << ","
       << b.cell.col << ") layer=" << b.layer << " orientation=" << orientation_name(b.orientation)
       << "\n";
  }
  auto ifaces = world.interfaces();
  std::sort(ifaces.begin(), ifaces.end(), [](const auto& a, const auto& b) {
    return std::pair(a.upper, a.lower) < std::pair(b.upper, b.lower);
  });
  char buf[32];
  for (const auto& c : ifaces) {
    os << "interface upper=" << c.upper << " lower="
       << (c.lower == kPlateId ? std::string("plate") : std::to_string(c.lower))
       << " knobs=" << c.knobs.size();
    if (include_tightness) {
      os << " tightness=[";
      for (std::size_t k = 0; k < c.per_knob_tightness.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9g", c.per_knob_tightness[k]);
        os << (k ? "," : "") << buf;
      }
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace lego
