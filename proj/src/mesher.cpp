#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "delaunay.hpp"
#include "robinlab/errors.hpp"
#include "robinlab/geometry.hpp"

namespace robinlab {
namespace {

using detail::Delaunay;
using detail::kNone;

constexpr double kPi = std::numbers::pi;
constexpr double kMinAngleTarget = 25.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t edge_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

// A piece of the domain boundary between two triangulation vertices.
struct Segment {
  std::size_t a;
  std::size_t b;
  double ta = kNaN;  // curve parameters (curved domains)
  double tb = kNaN;
  int input_edge = -1;  // polygon side index (straight domains)
};

struct BoundaryInfo {
  double param = kNaN;
  int corner = -1;  // polygon corner index, if the vertex is one
  int side = -1;    // polygon side carrying the vertex (non-corner vertices)
};

double smallest_angle_deg(Point a, Point b, Point c) {
  auto angle = [](Point p, Point q, Point r) {
    const Point u = q - p;
    const Point v = r - p;
    return std::atan2(std::abs(cross(u, v)), dot(u, v));
  };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)}) * 180.0 / kPi;
}

// Uniform-arc-length samples of a closed curve.
std::vector<double> arc_length_parameters(const DomainSpec& spec, double h) {
  constexpr int kFine = 20000;
  std::vector<double> cumulative(kFine + 1, 0.0);
  Point prev = spec.curve_point(0.0);
  for (int i = 1; i <= kFine; ++i) {
    const Point p = spec.curve_point(2.0 * kPi * i / kFine);
    cumulative[i] = cumulative[i - 1] + distance(prev, p);
    prev = p;
  }
  const double length = cumulative.back();
  const auto n = static_cast<std::size_t>(std::ceil(length / h - 1e-9));
  if (n < 3) throw InvalidInput("h_target too large: fewer than 3 boundary vertices");
  std::vector<double> params(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = length * static_cast<double>(i) / static_cast<double>(n);
    while (j + 1 < static_cast<std::size_t>(kFine) && cumulative[j + 1] < target) ++j;
    const double w = (target - cumulative[j]) / (cumulative[j + 1] - cumulative[j]);
    params[i] = 2.0 * kPi * (static_cast<double>(j) + w) / kFine;
  }
  return params;
}

double point_segment_distance(Point p, Point a, Point b) {
  const Point d = b - a;
  const double len2 = dot(d, d);
  const double s = len2 > 0.0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + s * d);
}

class Mesher {
 public:
  Mesher(const DomainSpec& spec, double h) : spec_(spec), h_(h), dt_(lo_hi(spec, h).first, lo_hi(spec, h).second) {}

  TriangleMesh run() {
    sample_boundary();
    seed_interior();
    refine();
    return extract();
  }

 private:
  static std::pair<Point, Point> lo_hi(const DomainSpec& spec, double h) {
    Point lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Point hi{-lo.x, -lo.y};
    auto grow = [&](Point p) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    };
    if (spec.is_curved()) {
      for (int i = 0; i < 720; ++i) grow(spec.curve_point(2.0 * kPi * i / 720));
      lo = lo - Point{h, h};
      hi = hi + Point{h, h};
    } else {
      for (Point c : spec.corners()) grow(c);
    }
    return {lo, hi};
  }

  std::size_t add_point(Point p, BoundaryInfo info = {}) {
    const auto v = dt_.insert(p);
    if (!v) throw InvalidInput("mesher produced a duplicate vertex (degenerate domain)");
    if (info_.size() <= *v) info_.resize(*v + 1);
    info_[*v] = info;
    return *v;
  }

  void sample_boundary() {
    if (spec_.is_curved()) {
      const auto params = arc_length_parameters(spec_, h_);
      std::vector<std::size_t> ids;
      for (double t : params) ids.push_back(add_point(spec_.curve_point(t), {t, -1, -1}));
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t j = (i + 1) % ids.size();
        const double tb = (j == 0) ? 2.0 * kPi : params[j];
        segments_.push_back({ids[i], ids[j], params[i], tb, -1});
      }
      return;
    }
    const auto& corners = spec_.corners();
    const std::size_t n = corners.size();
    std::vector<std::size_t> corner_ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      corner_ids[i] = add_point(corners[i], {kNaN, static_cast<int>(i), -1});
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = corners[i];
      const Point b = corners[(i + 1) % n];
      const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(distance(a, b) / h_ - 1e-9)));
      std::size_t prev = corner_ids[i];
      for (std::size_t k = 1; k <= pieces; ++k) {
        const std::size_t next =
            (k == pieces) ? corner_ids[(i + 1) % n]
                          : add_point(a + (static_cast<double>(k) / pieces) * (b - a),
                                      {kNaN, -1, static_cast<int>(i)});
        segments_.push_back({prev, next, kNaN, kNaN, static_cast<int>(i)});
        prev = next;
      }
    }
  }

  // Jittered triangular lattice kept away from the boundary polyline.
  void seed_interior() {
    const double s = 0.9 * h_;
    const auto [lo, hi] = lo_hi(spec_, h_);
    std::vector<std::pair<Point, Point>> polyline;
    for (const Segment& seg : segments_) {
      polyline.emplace_back(dt_.points()[seg.a], dt_.points()[seg.b]);
    }
    // Bucket the polyline so distance queries stay local.
    const double cell = h_;
    const auto nx = static_cast<std::size_t>(std::ceil((hi.x - lo.x) / cell)) + 1;
    const auto ny = static_cast<std::size_t>(std::ceil((hi.y - lo.y) / cell)) + 1;
    std::vector<std::vector<std::size_t>> buckets(nx * ny);
    auto cell_of = [&](double x, double y) {
      const auto i = static_cast<std::size_t>(std::clamp((x - lo.x) / cell, 0.0, double(nx - 1)));
      const auto j = static_cast<std::size_t>(std::clamp((y - lo.y) / cell, 0.0, double(ny - 1)));
      return std::pair{i, j};
    };
    for (std::size_t k = 0; k < polyline.size(); ++k) {
      const auto [a, b] = polyline[k];
      const auto [i0, j0] = cell_of(std::min(a.x, b.x), std::min(a.y, b.y));
      const auto [i1, j1] = cell_of(std::max(a.x, b.x), std::max(a.y, b.y));
      for (std::size_t i = i0; i <= i1; ++i) {
        for (std::size_t j = j0; j <= j1; ++j) buckets[j * nx + i].push_back(k);
      }
    }
    std::mt19937 rng(20240917u);
    std::uniform_real_distribution<double> jitter(-0.02 * s, 0.02 * s);
    const double dy = s * std::sqrt(3.0) / 2.0;
    auto distance_to_boundary = [&](Point p) {
      const auto [ci, cj] = cell_of(p.x, p.y);
      double best = std::numeric_limits<double>::max();
      for (std::size_t i = ci > 0 ? ci - 1 : 0; i <= std::min(ci + 1, nx - 1); ++i) {
        for (std::size_t j = cj > 0 ? cj - 1 : 0; j <= std::min(cj + 1, ny - 1); ++j) {
          for (std::size_t k : buckets[j * nx + i]) {
            best = std::min(best, point_segment_distance(p, polyline[k].first, polyline[k].second));
          }
        }
      }
      return best;
    };
    double clearance = 0.55 * s;
    if (spec_.is_curved()) {
      // Row of equilateral apexes over the boundary segments keeps the boundary strip regular.
      double band = 0.0;
      std::vector<Point> apexes;
      for (const auto& [a, b] : polyline) {
        const Point d = b - a;
        const double height = std::sqrt(3.0) / 2.0 * norm(d);
        const Point apex = 0.5 * (a + b) + (std::sqrt(3.0) / 2.0) * Point{-d.y, d.x};
        band = std::max(band, height);
        if (!spec_.contains(apex) || distance_to_boundary(apex) < 0.8 * height) continue;
        if (!apexes.empty() && distance(apexes.back(), apex) < 0.6 * norm(d)) continue;
        if (apexes.size() > 1 && distance(apexes.front(), apex) < 0.6 * norm(d)) continue;
        apexes.push_back(apex);
        add_point(apex);
      }
      clearance += band;
    }
    for (std::size_t row = 0;; ++row) {
      const double y = lo.y + 0.5 * dy + static_cast<double>(row) * dy;
      if (y > hi.y) break;
      const double x0 = lo.x + ((row % 2 == 0) ? 0.25 * s : 0.75 * s);
      for (double x = x0; x <= hi.x; x += s) {
        const Point p{x + jitter(rng), y + jitter(rng)};
        if (spec_.contains(p) && distance_to_boundary(p) >= clearance) add_point(p);
      }
    }
  }

  Point segment_midpoint(const Segment& seg, BoundaryInfo& info) const {
    if (spec_.is_curved()) {
      const double t = 0.5 * (seg.ta + seg.tb);
      info = {t, -1, -1};
      return spec_.curve_point(t);
    }
    info = {kNaN, -1, seg.input_edge};
    return 0.5 * (dt_.points()[seg.a] + dt_.points()[seg.b]);
  }

  void split_segments(const std::vector<std::size_t>& which) {
    std::vector<std::size_t> order = which;
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    for (std::size_t idx : order) {
      const Segment seg = segments_[idx];
      BoundaryInfo info;
      const Point m = segment_midpoint(seg, info);
      const std::size_t v = add_point(m, info);
      const double tm = info.param;
      segments_[idx] = {seg.a, v, seg.ta, tm, seg.input_edge};
      segments_.push_back({v, seg.b, tm, seg.tb, seg.input_edge});
    }
  }

  bool encroaches(const Segment& seg, Point p) const {
    const Point a = dt_.points()[seg.a];
    const Point b = dt_.points()[seg.b];
    return dot(a - p, b - p) < 0.0;
  }

  // Splits segments that are missing from the triangulation or have an encroaching apex.
  void recover_segments() {
    for (int round = 0;; ++round) {
      if (round > 200) throw InvalidInput("boundary recovery did not converge");
      std::unordered_map<std::uint64_t, std::vector<std::size_t>> apex;
      const auto& tris = dt_.triangles();
      for (const auto& t : tris) {
        if (!t.alive) continue;
        for (int i = 0; i < 3; ++i) {
          apex[edge_key(t.v[(i + 1) % 3], t.v[(i + 2) % 3])].push_back(t.v[i]);
        }
      }
      std::vector<std::size_t> flagged;
      for (std::size_t k = 0; k < segments_.size(); ++k) {
        const auto it = apex.find(edge_key(segments_[k].a, segments_[k].b));
        if (it == apex.end()) {
          flagged.push_back(k);
          continue;
        }
        for (std::size_t v : it->second) {
          if (!Delaunay::is_super(v) && encroaches(segments_[k], dt_.points()[v])) {
            flagged.push_back(k);
            break;
          }
        }
      }
      if (flagged.empty()) return;
      split_segments(flagged);
    }
  }

  std::unordered_set<std::uint64_t> segment_keys() const {
    std::unordered_set<std::uint64_t> keys;
    for (const Segment& s : segments_) keys.insert(edge_key(s.a, s.b));
    return keys;
  }

  // Flood fill from the super triangle; segments block the fill.
  std::vector<bool> classify_inside() const {
    const auto& tris = dt_.triangles();
    const auto keys = segment_keys();
    std::vector<bool> outside(tris.size(), false);
    std::vector<std::size_t> stack;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!tris[t].alive) continue;
      const auto& v = tris[t].v;
      if (Delaunay::is_super(v[0]) || Delaunay::is_super(v[1]) || Delaunay::is_super(v[2])) {
        outside[t] = true;
        stack.push_back(t);
      }
    }
    while (!stack.empty()) {
      const std::size_t t = stack.back();
      stack.pop_back();
      for (int i = 0; i < 3; ++i) {
        const std::size_t n = tris[t].nbr[i];
        if (n == kNone || outside[n]) continue;
        if (keys.count(edge_key(tris[t].v[(i + 1) % 3], tris[t].v[(i + 2) % 3]))) continue;
        outside[n] = true;
        stack.push_back(n);
      }
    }
    std::vector<bool> inside(tris.size(), false);
    for (std::size_t t = 0; t < tris.size(); ++t) inside[t] = tris[t].alive && !outside[t];
    return inside;
  }

  // Small angle pinned between two polygon sides meeting at an input corner.
  bool corner_protected(const std::array<std::size_t, 3>& v) const {
    if (spec_.is_curved()) return false;
    const auto& pts = dt_.points();
    for (int i = 0; i < 3; ++i) {
      const BoundaryInfo& c = info_[v[i]];
      if (c.corner < 0) continue;
      const BoundaryInfo& p = info_[v[(i + 1) % 3]];
      const BoundaryInfo& q = info_[v[(i + 2) % 3]];
      const int n = static_cast<int>(spec_.corners().size());
      auto on_side = [&](const BoundaryInfo& b, int side) {
        return b.side == side || b.corner == side || b.corner == (side + 1) % n;
      };
      const int before = (c.corner + n - 1) % n;
      const int after = c.corner;
      if ((on_side(p, before) && on_side(q, after)) || (on_side(p, after) && on_side(q, before))) {
        const Point u = pts[v[(i + 1) % 3]] - pts[v[i]];
        const Point w = pts[v[(i + 2) % 3]] - pts[v[i]];
        const double ang = std::atan2(std::abs(cross(u, w)), dot(u, w)) * 180.0 / kPi;
        if (ang < 60.0) return true;
      }
    }
    return false;
  }

  bool inside_polyline(Point p) const {
    bool inside = false;
    for (const Segment& s : segments_) {
      const Point a = dt_.points()[s.a];
      const Point b = dt_.points()[s.b];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < x) inside = !inside;
      }
    }
    return inside;
  }

  void refine() {
    const double vertex_budget = 50.0 * (spec_.area() / (0.4 * h_ * h_) + 4.0 * segments_.size()) + 1000.0;
    for (int round = 0;; ++round) {
      if (round > 500) throw InvalidInput("mesh refinement did not converge");
      recover_segments();
      const auto inside = classify_inside();
      const auto& pts = dt_.points();
      const bool quality_allowed = static_cast<double>(pts.size()) < vertex_budget;
      struct Bad {
        std::array<std::size_t, 3> v;
        double size;
      };
      std::vector<Bad> bad;
      for (std::size_t t = 0; t < dt_.triangles().size(); ++t) {
        if (!inside[t]) continue;
        const auto v = dt_.triangles()[t].v;
        const Point a = pts[v[0]], b = pts[v[1]], c = pts[v[2]];
        const double longest = std::max({distance(a, b), distance(b, c), distance(c, a)});
        const bool too_big = longest > h_;
        const bool skinny = quality_allowed && smallest_angle_deg(a, b, c) < kMinAngleTarget &&
                            longest > 0.02 * h_ && !corner_protected(v);
        if (too_big || skinny) bad.push_back({v, longest});
      }
      if (bad.empty()) return;
      std::sort(bad.begin(), bad.end(), [](const Bad& x, const Bad& y) { return x.size > y.size; });

      std::vector<std::size_t> to_split;
      std::unordered_set<std::size_t> touched;
      for (const Bad& b : bad) {
        // Skip triangles whose vertices were already disturbed this round.
        if (touched.count(b.v[0]) || touched.count(b.v[1]) || touched.count(b.v[2])) continue;
        const Point c = detail::circumcenter(pts[b.v[0]], pts[b.v[1]], pts[b.v[2]]);
        std::vector<std::size_t> enc;
        for (std::size_t k = 0; k < segments_.size(); ++k) {
          if (encroaches(segments_[k], c)) enc.push_back(k);
        }
        if (!enc.empty()) {
          for (std::size_t k : enc) {
            to_split.push_back(k);
            touched.insert(segments_[k].a);
            touched.insert(segments_[k].b);
          }
          continue;
        }
        if (!inside_polyline(c)) continue;
        const auto v = dt_.insert(c);
        if (!v) continue;
        if (info_.size() <= *v) info_.resize(*v + 1);
        info_[*v] = {};
        for (std::size_t x : b.v) touched.insert(x);
        touched.insert(*v);
      }
      split_segments(to_split);
    }
  }

  TriangleMesh extract() {
    recover_segments();
    const auto inside = classify_inside();
    const auto& pts = dt_.points();
    const auto& tris = dt_.triangles();
    std::vector<std::size_t> remap(pts.size(), kNone);
    TriangleMesh mesh;
    mesh.domain = spec_;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!inside[t]) continue;
      std::array<std::size_t, 3> tri{};
      for (int i = 0; i < 3; ++i) {
        const std::size_t v = tris[t].v[i];
        if (remap[v] == kNone) {
          remap[v] = mesh.vertices.size();
          mesh.vertices.push_back(pts[v]);
          if (spec_.is_curved()) {
            const double param = v < info_.size() ? info_[v].param : kNaN;
            mesh.boundary_parameter.push_back(std::isnan(param) ? kNaN : std::fmod(param, 2.0 * kPi));
          }
        }
        tri[i] = remap[v];
      }
      mesh.triangles.push_back(tri);
    }
    const auto keys = segment_keys();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!inside[t]) continue;
      for (int i = 0; i < 3; ++i) {
        const std::size_t a = tris[t].v[(i + 1) % 3];
        const std::size_t b = tris[t].v[(i + 2) % 3];
        if (!keys.count(edge_key(a, b))) continue;
        const Point d = pts[b] - pts[a];
        const double len = norm(d);
        mesh.boundary_edges.push_back({{remap[a], remap[b]}, {d.y / len, -d.x / len}});
      }
    }
    mesh.h = max_edge_length(mesh);
    return mesh;
  }

  DomainSpec spec_;
  double h_;
  Delaunay dt_;
  std::vector<Segment> segments_;
  std::vector<BoundaryInfo> info_;
};

}  // namespace

TriangleMesh build_mesh(const DomainSpec& spec, double h_target) {
  if (!std::isfinite(h_target) || h_target <= 0.0) throw InvalidInput("h_target must be positive");
  Mesher mesher(spec, h_target);
  TriangleMesh mesh = mesher.run();
  validate_mesh(mesh);
  return mesh;
}

}  // namespace robinlab
