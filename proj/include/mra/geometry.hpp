#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mra {

/// Location in a 1-D or 2-D domain. For d = 1 the y coordinate is ignored
/// (kept at zero) so that the Euclidean distance reduces to |x1 - x2|.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned box D = [lower, upper] in R^d, d in {1, 2}.
struct Domain {
  int dim = 1;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{1.0, 1.0};

  static Domain unit(int dim);
  static Domain interval(double lo, double hi);
  static Domain box(double xlo, double xhi, double ylo, double yhi);

  /// Throws GeometryError unless lower < upper on every axis and dim is 1 or 2.
  void validate() const;
  bool contains(const Point& p) const;
  double extent(int axis) const { return upper[axis] - lower[axis]; }
};

/// Recursive J-ary partition of a box domain. Level m has J^m regions laid
/// out as an nx-by-ny grid of half-open cells; the global upper edge is
/// closed and belongs to the last cell along each axis.
///
/// Split rules: d = 1 splits the interval into J equal parts; d = 2 with
/// J = 4 splits both axes in half; d = 2 with J = 2 alternates x (odd
/// levels) and y (even levels).
class PartitionTree {
 public:
  PartitionTree() = default;
  PartitionTree(Domain domain, int J, int M);

  const Domain& domain() const { return domain_; }
  int J() const { return J_; }
  int depth() const { return M_; }

  /// Cells along each axis at level m.
  std::array<long, 2> grid(int m) const;
  long region_count(int m) const;

  /// Flat index of the level-m region containing s (row-major in y, x).
  /// Two points share a region iff their flat indices agree.
  long region_index(const Point& s, int m) const;

  /// 1-based child-index path (j_1, ..., j_m) of the region containing s.
  std::vector<int> region_path(const Point& s, int m) const;

  /// Bounds of a level-m region given by its flat index.
  Domain region_bounds(int m, long flat) const;

 private:
  std::array<long, 2> cell(const Point& s, int m) const;

  Domain domain_;
  int J_ = 2;
  int M_ = 0;
};

PartitionTree build_partition_tree(const Domain& domain, int J, int M);

enum class KnotLayout { lattice, boundary };

/// Knot sets Q_0, ..., Q_M.
struct KnotHierarchy {
  Domain domain;
  int r0 = 1;
  int J = 2;
  std::vector<std::vector<Point>> levels;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  std::size_t total() const;
  std::size_t count(int m) const { return levels.at(m).size(); }

  /// Pairs (m, i) of knots equal to a knot at a coarser level.
  std::vector<std::pair<int, std::size_t>> duplicates() const;

  /// Checks that all knots lie inside the domain; does not reject duplicates.
  void validate() const;
};

KnotHierarchy build_regular_knots(const Domain& domain, int r0, int J, int M,
                                  KnotLayout layout);

KnotLayout parse_knot_layout(const std::string& name);
std::string to_string(KnotLayout layout);

}  // namespace mra
