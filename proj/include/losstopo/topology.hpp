#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "losstopo/field.hpp"

namespace losstopo {

enum class NodeKind { minimum, saddle, root };

struct MergeNode {
  std::size_t id = 0;
  std::size_t vertex = 0;
  double value = 0.0;
  NodeKind kind = NodeKind::minimum;
};

// One binary merge. Components are identified by their birth vertex.
struct MergeRecord {
  std::size_t saddle_node = 0;
  std::size_t component_a = 0;
  std::size_t component_b = 0;
  std::size_t survivor = 0;
};

struct MergeTree {
  std::vector<MergeNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (child, parent)
  std::vector<MergeRecord> merges;
  std::size_t components = 0;

  std::size_t count(NodeKind kind) const;
  std::size_t minima() const { return count(NodeKind::minimum); }
  std::size_t saddles() const { return count(NodeKind::saddle); }
  std::vector<std::size_t> degrees() const;
};

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;
  std::size_t birth_vertex = 0;
  std::size_t death_vertex = 0;
  bool essential = false;

  double persistence() const noexcept { return death - birth; }
};

struct PersistenceDiagram {
  std::vector<PersistencePair> pairs;
  double field_min = 0.0;
  double field_max = 0.0;

  std::size_t finite_count() const;
  std::size_t essential_count() const;
};

struct Topology {
  MergeTree tree;
  PersistenceDiagram diagram;
};

// Vertex order used by the sweep: ascending value, ties by ascending index.
std::vector<std::size_t> sweep_order(const ScalarField& field);

// Sub-level-set sweep with union-find. A vertex with no lower neighbour opens
// a minimum; a vertex joining m >= 2 components becomes m-1 binary saddles at
// its value, merged in order of component birth vertex. The younger
// component (later birth in the sweep order) dies at each merge. Each
// component ends in a root at its maximum vertex, and its oldest minimum
// forms the essential pair with death = that maximum.
Topology compute_topology(const ScalarField& field);

MergeTree merge_tree(const ScalarField& field);
PersistenceDiagram persistence_diagram(const ScalarField& field);

std::string to_string(NodeKind kind);
std::string merge_tree_json(const MergeTree& tree);
std::string merge_tree_dot(const MergeTree& tree);
std::string diagram_csv(const PersistenceDiagram& diagram);

}  // namespace losstopo
