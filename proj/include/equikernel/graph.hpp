#ifndef EQUIKERNEL_GRAPH_HPP_
#define EQUIKERNEL_GRAPH_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "equikernel/geometry.hpp"
#include "equikernel/so3.hpp"

namespace equikernel {

// Symbol <-> atomic number for elements 1..118; throws on unknown symbol.
int atomic_number(std::string_view symbol);
const std::string& element_symbol(int atomic_number);

struct AtomicStructure {
  std::vector<int> species;     // atomic numbers, 1..118
  std::vector<Vec3> positions;  // Angstrom
  std::string comment;

  int size() const { return static_cast<int>(species.size()); }
};

// Standard XYZ: count line, comment line, then "Symbol x y z" rows.
// Errors carry the 1-based line number where parsing stopped.
AtomicStructure parse_xyz(const std::string& text);
std::string write_xyz(const AtomicStructure& s);

// One directed edge source -> target with r = pos(source) - pos(target).
struct Edge {
  int source = 0;
  int target = 0;
  Vec3 rel;          // Angstrom
  double dist = 0.0; // Angstrom
  Rotation align = Rotation::identity();  // maps rel/|rel| onto the y axis
};

struct AtomGraph {
  const AtomicStructure* structure = nullptr;
  double cutoff = 0.0;
  int max_neighbors = 0;
  // grouped by target node; inside a group ordered by (distance, source)
  std::vector<Edge> edges;
  std::vector<int> first_edge;  // per node, index into edges; size n+1

  int n_edges_of(int node) const {
    return first_edge[static_cast<std::size_t>(node + 1)] -
           first_edge[static_cast<std::size_t>(node)];
  }
};

// Directed edges j -> i for every j within `cutoff` of i, truncated to the
// max_neighbors nearest with ties broken by ascending source index.
// Coincident atoms raise a degenerate-edge error.
AtomGraph build_graph(const AtomicStructure& s, double cutoff, int max_neighbors);

}  // namespace equikernel

#endif  // EQUIKERNEL_GRAPH_HPP_
