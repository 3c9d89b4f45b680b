#ifndef KFBI_CLASSIFICATION_HPP
#define KFBI_CLASSIFICATION_HPP

#include <stdexcept>
#include <vector>

#include "kfbi/geometry.hpp"
#include "kfbi/grid.hpp"
#include "kfbi/level_set.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

struct Crossing {
  Real t;   // along the segment node -> neighbor, in [0, 1]
  int comp; // which component's interface is crossed
  Vec2 x;
};

// A 9-point stencil neighbor on the other side of some interface.
struct CutNeighbor {
  int di, dj;
  int nbr_region;
  std::vector<Crossing> crossings; // ascending t; one or two per component
};

struct IrregularNode {
  int i, j;
  std::vector<CutNeighbor> cuts;
};

struct NodeClassification {
  Grid2D grid;
  IntArray region;    // 0 = exterior, k >= 1 = inside component k
  IntArray irregular; // 0/1; box boundary nodes are never irregular
  std::vector<IrregularNode> irregulars; // ordered lexicographically by (i, j)
};

// Region ids from the level-set signs (|H| <= kNodeInsideTol counts as
// inside), irregular flags from mixed 9-point stencils, and per-cut-segment
// crossing records for the components the two endpoint regions name.
inline NodeClassification classify_nodes(const Grid2D& grid,
                                         const std::vector<LevelSet>& components) {
  const int n = grid.n;
  NodeClassification out;
  out.grid = grid;
  out.region = IntArray::Zero(n + 1, n + 1);
  out.irregular = IntArray::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      Vec2 x = grid.node(i, j);
      int reg = 0;
      for (int k = 0; k < static_cast<int>(components.size()); ++k) {
        if (components[k].value(x) < kNodeInsideTol) {
          if (reg != 0)
            throw std::runtime_error(
                "classify_nodes: overlapping component interiors at a node");
          reg = k + 1;
        }
      }
      out.region(i, j) = reg;
    }

  static constexpr int kOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                         {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      const int rp = out.region(i, j);
      IrregularNode rec{i, j, {}};
      for (auto [di, dj] : kOffsets) {
        const int rq = out.region(i + di, j + dj);
        if (rq == rp) continue;
        CutNeighbor cn{di, dj, rq, {}};
        Vec2 xp = grid.node(i, j), xq = grid.node(i + di, j + dj);
        for (int comp : {rp, rq}) {
          if (comp == 0) continue;
          // t convention here runs from the node toward the neighbor.
          for (Real t : find_crossings(components[comp - 1], xq, xp))
            cn.crossings.push_back({t, comp, t * xq + (1 - t) * xp});
        }
        std::sort(cn.crossings.begin(), cn.crossings.end(),
                  [](const Crossing& a, const Crossing& b) { return a.t < b.t; });
        rec.cuts.push_back(cn);
      }
      if (!rec.cuts.empty()) {
        out.irregular(i, j) = 1;
        out.irregulars.push_back(std::move(rec));
      }
    }
  return out;
}

} // namespace kfbi

#endif
