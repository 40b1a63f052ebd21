#include "delaunay.hpp"

#include <algorithm>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace robinlab::detail {

namespace {

using Exact = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<2400>,
                                            boost::multiprecision::et_off>;

constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0;
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIncircleBound = (10.0 + 96.0 * kEps) * kEps;

int sign(const Exact& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

}  // namespace

// Both predicates evaluate in double and fall back to a wide binary float when the
// result lies within the rounding bound. The fallback width covers every difference
// and degree-four product of doubles in the coordinate range the mesher produces.
double orient2d(Point a, Point b, Point c) {
  const double left = (a.x - c.x) * (b.y - c.y);
  const double right = (a.y - c.y) * (b.x - c.x);
  const double det = left - right;
  if (std::abs(det) > kOrientBound * (std::abs(left) + std::abs(right))) return det;
  const Exact acx = Exact(a.x) - c.x, bcx = Exact(b.x) - c.x;
  const Exact acy = Exact(a.y) - c.y, bcy = Exact(b.y) - c.y;
  return sign(acx * bcy - acy * bcx);
}

double incircle(Point a, Point b, Point c, Point d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double bc = bdx * cdy - cdx * bdy;
  const double ca = cdx * ady - adx * cdy;
  const double ab = adx * bdy - bdx * ady;
  const double det = alift * bc + blift * ca + clift * ab;
  const double permanent = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                           blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                           clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  if (std::abs(det) > kIncircleBound * permanent) return det;
  const Exact eax = Exact(a.x) - d.x, eay = Exact(a.y) - d.y;
  const Exact ebx = Exact(b.x) - d.x, eby = Exact(b.y) - d.y;
  const Exact ecx = Exact(c.x) - d.x, ecy = Exact(c.y) - d.y;
  const Exact exact = (eax * eax + eay * eay) * (ebx * ecy - ecx * eby) +
                      (ebx * ebx + eby * eby) * (ecx * eay - eax * ecy) +
                      (ecx * ecx + ecy * ecy) * (eax * eby - ebx * eay);
  return sign(exact);
}

Point circumcenter(Point a, Point b, Point c) {
  const Point ab = b - a;
  const Point ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = dot(ab, ab);
  const double ac2 = dot(ac, ac);
  return {a.x + (ac.y * ab2 - ab.y * ac2) / d, a.y + (ab.x * ac2 - ac.x * ab2) / d};
}

Delaunay::Delaunay(Point lo, Point hi) {
  const Point c = 0.5 * (lo + hi);
  const double size = std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
  const double big = 50.0 * size;
  points_ = {{c.x - big, c.y - big}, {c.x + big, c.y - big}, {c.x, c.y + big}};
  merge_tol_ = 1e-12 * size;
  Triangle t;
  t.v = {0, 1, 2};
  t.alive = true;
  tris_.push_back(t);
  stamp_.push_back(0);
}

std::size_t Delaunay::new_triangle() {
  if (!free_.empty()) {
    const std::size_t t = free_.back();
    free_.pop_back();
    return t;
  }
  tris_.emplace_back();
  stamp_.push_back(0);
  return tris_.size() - 1;
}

std::size_t Delaunay::locate(Point p) {
  std::size_t t = hint_;
  if (t >= tris_.size() || !tris_[t].alive) {
    t = 0;
    while (!tris_[t].alive) ++t;
  }
  std::size_t rotate = 0;
  const std::size_t max_steps = 4 * tris_.size() + 16;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Triangle& tri = tris_[t];
    bool moved = false;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t i = (k + rotate) % 3;
      const Point a = points_[tri.v[(i + 1) % 3]];
      const Point b = points_[tri.v[(i + 2) % 3]];
      if (orient2d(a, b, p) < 0.0) {
        if (tri.nbr[i] == kNone) throw std::logic_error("point outside the super triangle");
        t = tri.nbr[i];
        moved = true;
        break;
      }
    }
    ++rotate;
    if (!moved) return t;
  }
  // Walk failed to terminate (degenerate orientation results); fall back to a scan.
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    const Triangle& tri = tris_[i];
    if (!tri.alive) continue;
    if (orient2d(points_[tri.v[0]], points_[tri.v[1]], p) >= 0.0 &&
        orient2d(points_[tri.v[1]], points_[tri.v[2]], p) >= 0.0 &&
        orient2d(points_[tri.v[2]], points_[tri.v[0]], p) >= 0.0) {
      return i;
    }
  }
  throw std::logic_error("point location failed");
}

std::optional<std::size_t> Delaunay::insert(Point p) {
  const std::size_t start = locate(p);
  for (std::size_t v : tris_[start].v) {
    if (distance(points_[v], p) <= merge_tol_) return std::nullopt;
  }

  ++epoch_;
  const unsigned in_cavity = epoch_;
  std::vector<std::size_t> cavity = {start};
  stamp_[start] = in_cavity;
  for (std::size_t i = 0; i < cavity.size(); ++i) {
    const Triangle& tri = tris_[cavity[i]];
    for (std::size_t n : tri.nbr) {
      if (n == kNone || stamp_[n] == in_cavity) continue;
      const Triangle& nt = tris_[n];
      if (incircle(points_[nt.v[0]], points_[nt.v[1]], points_[nt.v[2]], p) > 0.0) {
        stamp_[n] = in_cavity;
        cavity.push_back(n);
      }
    }
  }

  struct Rim {
    std::size_t a, b, outside, owner;
  };
  std::vector<Rim> rim;
  // Shrink the cavity until p sees every rim edge strictly from the inside.
  for (;;) {
    rim.clear();
    std::size_t offender = kNone;
    bool grow = false;
    for (std::size_t t : cavity) {
      if (stamp_[t] != in_cavity) continue;
      const Triangle& tri = tris_[t];
      for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t n = tri.nbr[i];
        if (n != kNone && stamp_[n] == in_cavity) continue;
        const std::size_t a = tri.v[(i + 1) % 3];
        const std::size_t b = tri.v[(i + 2) % 3];
        if (orient2d(points_[a], points_[b], p) <= 0.0) {
          if (t == start) {
            // p sits on an edge of its own triangle: the neighbour must join.
            if (n == kNone) throw std::logic_error("point on the super triangle hull");
            stamp_[n] = in_cavity;
            cavity.push_back(n);
            grow = true;
          } else {
            offender = t;
          }
          break;
        }
        rim.push_back({a, b, n, t});
      }
      if (grow || offender != kNone) break;
    }
    if (grow) continue;
    if (offender == kNone) break;
    stamp_[offender] = 0;
  }

  const std::size_t vp = points_.size();
  points_.push_back(p);

  std::vector<std::size_t> removed;
  for (std::size_t t : cavity) {
    if (stamp_[t] == in_cavity) {
      tris_[t].alive = false;
      removed.push_back(t);
    }
  }
  std::unordered_map<std::size_t, std::size_t> by_start;
  std::unordered_map<std::size_t, std::size_t> by_end;
  std::vector<std::size_t> created;
  created.reserve(rim.size());
  for (const Rim& e : rim) {
    const std::size_t t = new_triangle();
    Triangle& tri = tris_[t];
    tri.v = {e.a, e.b, vp};
    tri.nbr = {kNone, kNone, e.outside};
    tri.alive = true;
    stamp_[t] = 0;
    if (e.outside != kNone) {
      Triangle& out = tris_[e.outside];
      for (std::size_t& back : out.nbr) {
        if (back == e.owner) back = t;
      }
    }
    by_start[e.a] = t;
    by_end[e.b] = t;
    created.push_back(t);
  }
  for (std::size_t t : created) {
    Triangle& tri = tris_[t];
    tri.nbr[0] = by_start.at(tri.v[1]);
    tri.nbr[1] = by_end.at(tri.v[0]);
  }
  // Slots are recycled only now so neighbour fix-ups above never see a reused id.
  for (std::size_t t : removed) free_.push_back(t);
  hint_ = created.front();
  return vp;
}

}  // namespace robinlab::detail
