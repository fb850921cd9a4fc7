#include "mra/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace mra {

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Domain Domain::unit(int dim) {
  Domain d;
  d.dim = dim;
  d.validate();
  return d;
}

Domain Domain::interval(double lo, double hi) {
  Domain d;
  d.dim = 1;
  d.lower = {lo, 0.0};
  d.upper = {hi, 1.0};
  d.validate();
  return d;
}

Domain Domain::box(double xlo, double xhi, double ylo, double yhi) {
  Domain d;
  d.dim = 2;
  d.lower = {xlo, ylo};
  d.upper = {xhi, yhi};
  d.validate();
  return d;
}

void Domain::validate() const {
  if (dim != 1 && dim != 2) {
    throw GeometryError("only 1-D and 2-D domains are supported (got d=" +
                        std::to_string(dim) + ")");
  }
  for (int a = 0; a < dim; ++a) {
    if (!(lower[a] < upper[a]) || !std::isfinite(lower[a]) ||
        !std::isfinite(upper[a])) {
      throw GeometryError("domain requires finite lower < upper on every axis");
    }
  }
}

bool Domain::contains(const Point& p) const {
  if (!(p.x >= lower[0] && p.x <= upper[0])) return false;
  if (dim == 2 && !(p.y >= lower[1] && p.y <= upper[1])) return false;
  return true;
}

// ---------------------------------------------------------------------------

PartitionTree::PartitionTree(Domain domain, int J, int M)
    : domain_(domain), J_(J), M_(M) {
  domain_.validate();
  if (J != 2 && J != 4) {
    throw GeometryError("partition requires J in {2, 4} (got J=" +
                        std::to_string(J) + ")");
  }
  if (M < 0) throw GeometryError("partition depth must be non-negative");
}

std::array<long, 2> PartitionTree::grid(int m) const {
  if (domain_.dim == 1) {
    long nx = 1;
    for (int l = 0; l < m; ++l) nx *= J_;
    return {nx, 1};
  }
  if (J_ == 4) return {1L << m, 1L << m};
  return {1L << ((m + 1) / 2), 1L << (m / 2)};
}

long PartitionTree::region_count(int m) const {
  auto g = grid(m);
  return g[0] * g[1];
}

std::array<long, 2> PartitionTree::cell(const Point& s, int m) const {
  if (!domain_.contains(s)) {
    std::ostringstream msg;
    msg << "point (" << s.x << ", " << s.y << ") lies outside the domain";
    throw GeometryError(msg.str());
  }
  // Locate at the finest level and derive coarser cells by integer division
  // so that paths are prefixes of each other regardless of rounding.
  const int finest = std::max(m, M_);
  const auto g = grid(finest);
  std::array<long, 2> c{0, 0};
  const double coord[2] = {s.x, s.y};
  for (int a = 0; a < domain_.dim; ++a) {
    const double t = (coord[a] - domain_.lower[a]) * static_cast<double>(g[a]) /
                     domain_.extent(a);
    long i = static_cast<long>(std::floor(t));
    c[a] = std::clamp(i, 0L, g[a] - 1);
  }
  const auto gm = grid(m);
  c[0] /= g[0] / gm[0];
  c[1] /= g[1] / gm[1];
  return c;
}

long PartitionTree::region_index(const Point& s, int m) const {
  const auto c = cell(s, m);
  return c[1] * grid(m)[0] + c[0];
}

std::vector<int> PartitionTree::region_path(const Point& s, int m) const {
  const auto leaf = cell(s, m);
  const auto gm = grid(m);
  std::vector<int> path;
  path.reserve(m);
  std::array<long, 2> parent{0, 0};
  for (int l = 1; l <= m; ++l) {
    const auto gl = grid(l);
    const auto gp = grid(l - 1);
    const std::array<long, 2> here{leaf[0] / (gm[0] / gl[0]),
                                   leaf[1] / (gm[1] / gl[1])};
    const long fx = gl[0] / gp[0];
    const long fy = gl[1] / gp[1];
    const long cx = here[0] - fx * parent[0];
    const long cy = here[1] - fy * parent[1];
    path.push_back(static_cast<int>(cx + fx * cy) + 1);
    parent = here;
  }
  return path;
}

Domain PartitionTree::region_bounds(int m, long flat) const {
  const auto g = grid(m);
  if (flat < 0 || flat >= g[0] * g[1]) {
    throw GeometryError("region index out of range");
  }
  const long ix = flat % g[0];
  const long iy = flat / g[0];
  Domain r = domain_;
  const double wx = domain_.extent(0) / static_cast<double>(g[0]);
  r.lower[0] = domain_.lower[0] + wx * static_cast<double>(ix);
  r.upper[0] = domain_.lower[0] + wx * static_cast<double>(ix + 1);
  if (domain_.dim == 2) {
    const double wy = domain_.extent(1) / static_cast<double>(g[1]);
    r.lower[1] = domain_.lower[1] + wy * static_cast<double>(iy);
    r.upper[1] = domain_.lower[1] + wy * static_cast<double>(iy + 1);
  }
  return r;
}

PartitionTree build_partition_tree(const Domain& domain, int J, int M) {
  return PartitionTree(domain, J, M);
}

// ---------------------------------------------------------------------------

std::size_t KnotHierarchy::total() const {
  std::size_t r = 0;
  for (const auto& q : levels) r += q.size();
  return r;
}

std::vector<std::pair<int, std::size_t>> KnotHierarchy::duplicates() const {
  std::map<std::pair<double, double>, int> seen;
  std::vector<std::pair<int, std::size_t>> dups;
  for (int m = 0; m <= depth(); ++m) {
    for (std::size_t i = 0; i < levels[m].size(); ++i) {
      const auto key = std::make_pair(levels[m][i].x, levels[m][i].y);
      auto [it, inserted] = seen.emplace(key, m);
      if (!inserted) dups.emplace_back(m, i);
    }
  }
  return dups;
}

void KnotHierarchy::validate() const {
  domain.validate();
  if (levels.empty()) throw GeometryError("knot hierarchy has no levels");
  for (const auto& q : levels) {
    if (q.empty()) throw GeometryError("knot hierarchy has an empty level");
    for (const auto& p : q) {
      if (!domain.contains(p)) throw GeometryError("knot lies outside the domain");
    }
  }
}

namespace {

// Factor r0 into an nx-by-ny base grid with nx >= ny and nx as small as
// possible.
std::array<long, 2> base_grid(int r0) {
  long nx = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(r0))));
  while (r0 % nx != 0) ++nx;
  return {nx, r0 / nx};
}

std::vector<Point> cell_centres(const Domain& d, long nx, long ny) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(nx * ny));
  const double hx = d.extent(0) / static_cast<double>(nx);
  const double hy = d.dim == 2 ? d.extent(1) / static_cast<double>(ny) : 0.0;
  if (hx < 1e-12 || (d.dim == 2 && hy < 1e-12)) {
    throw GeometryError("knot spacing below 1e-12; domain is degenerate");
  }
  for (long iy = 0; iy < ny; ++iy) {
    for (long ix = 0; ix < nx; ++ix) {
      Point p;
      p.x = d.lower[0] + hx * (static_cast<double>(ix) + 0.5);
      if (d.dim == 2) p.y = d.lower[1] + hy * (static_cast<double>(iy) + 0.5);
      pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace

KnotHierarchy build_regular_knots(const Domain& domain, int r0, int J, int M,
                                  KnotLayout layout) {
  domain.validate();
  if (r0 < 1) throw GeometryError("r0 must be at least 1");
  if (J < 2) throw GeometryError("J must be at least 2");
  if (M < 0) throw GeometryError("M must be non-negative");

  KnotHierarchy h;
  h.domain = domain;
  h.r0 = r0;
  h.J = J;
  h.levels.resize(static_cast<std::size_t>(M) + 1);

  if (layout == KnotLayout::boundary) {
    if (domain.dim != 1) {
      throw GeometryError("boundary knot layout is only defined for d = 1");
    }
    if (r0 != J - 1) {
      throw GeometryError("boundary knot layout requires r0 = J - 1");
    }
    // Level m holds the boundaries of the level-(m+1) regions that are not
    // already boundaries at level m; the finest level uses the same rule,
    // which places one knot inside each level-M region per new boundary.
    long denom = J;
    for (int m = 0; m <= M; ++m, denom *= J) {
      const double h_step = domain.extent(0) / static_cast<double>(denom);
      if (h_step < 1e-12) {
        throw GeometryError("knot spacing below 1e-12; domain is degenerate");
      }
      for (long j = 1; j < denom; ++j) {
        if (j % J == 0) continue;
        h.levels[m].push_back(
            Point{domain.lower[0] + domain.extent(0) * static_cast<double>(j) /
                                        static_cast<double>(denom),
                  0.0});
      }
    }
    return h;
  }

  // Lattice: cell centres of a grid refined along the same axes as the
  // partition, so the coordinates along any refined axis are odd multiples
  // of a halved spacing and never repeat across levels.
  if (J % 2 != 0) {
    // Odd J maps some cell centres onto cell centres of the next level.
    throw GeometryError("lattice knot layout requires an even J");
  }
  if (domain.dim == 1) {
    long count = r0;
    for (int m = 0; m <= M; ++m, count *= J) {
      h.levels[m] = cell_centres(domain, count, 1);
    }
    return h;
  }
  if (J != 2 && J != 4) {
    throw GeometryError("2-D lattice knots require J in {2, 4}");
  }
  const PartitionTree tree(domain, J, M);
  const auto base = base_grid(r0);
  for (int m = 0; m <= M; ++m) {
    const auto g = tree.grid(m);
    h.levels[m] = cell_centres(domain, base[0] * g[0], base[1] * g[1]);
  }
  return h;
}

KnotLayout parse_knot_layout(const std::string& name) {
  if (name == "lattice") return KnotLayout::lattice;
  if (name == "boundary") return KnotLayout::boundary;
  throw GeometryError("unknown knot layout '" + name + "'");
}

std::string to_string(KnotLayout layout) {
  return layout == KnotLayout::lattice ? "lattice" : "boundary";
}

}  // namespace mra
