#include "losstopo/topology.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "losstopo/error.hpp"
#include "losstopo/io.hpp"

namespace losstopo {

std::size_t MergeTree::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [kind](const MergeNode& n) { return n.kind == kind; }));
}

std::vector<std::size_t> MergeTree::degrees() const {
  std::vector<std::size_t> deg(nodes.size(), 0);
  for (const auto& [c, p] : edges) {
    ++deg[c];
    ++deg[p];
  }
  return deg;
}

std::size_t PersistenceDiagram::finite_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const PersistencePair& p) { return !p.essential; }));
}

std::size_t PersistenceDiagram::essential_count() const { return pairs.size() - finite_count(); }

std::vector<std::size_t> sweep_order(const ScalarField& field) {
  std::vector<std::size_t> order(field.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto values = field.values();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  return order;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns the new root.
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Bookkeeping for a live component, indexed by its union-find root.
struct Component {
  std::size_t birth = 0;     // oldest minimum vertex
  std::size_t node = 0;      // current top of the component's branch
  std::size_t maximum = 0;   // last vertex absorbed
};

}  // namespace

Topology compute_topology(const ScalarField& field) {
  const std::size_t n = field.size();
  if (n == 0) throw ConfigError("cannot compute topology of an empty field");

  const auto order = sweep_order(field);
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;

  Topology out;
  auto& tree = out.tree;
  auto& diagram = out.diagram;
  diagram.field_min = field.value(order.front());
  diagram.field_max = field.value(order.back());

  DisjointSets sets(n);
  std::vector<Component> comp(n);
  auto add_node = [&](std::size_t vertex, NodeKind kind) {
    tree.nodes.push_back({tree.nodes.size(), vertex, field.value(vertex), kind});
    return tree.nodes.back().id;
  };

  std::vector<std::size_t> roots;
  for (const std::size_t v : order) {
    roots.clear();
    for (const std::size_t u : field.neighbors(v))
      if (rank[u] < rank[v]) roots.push_back(sets.find(u));
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

    if (roots.empty()) {
      comp[v] = {v, add_node(v, NodeKind::minimum), v};
      continue;
    }

    std::sort(roots.begin(), roots.end(),
              [&](std::size_t a, std::size_t b) { return comp[a].birth < comp[b].birth; });
    std::size_t current = roots.front();
    for (std::size_t i = 1; i < roots.size(); ++i) {
      const std::size_t other = roots[i];
      const std::size_t saddle = add_node(v, NodeKind::saddle);
      tree.edges.emplace_back(comp[current].node, saddle);
      tree.edges.emplace_back(comp[other].node, saddle);

      const bool current_elder = rank[comp[current].birth] < rank[comp[other].birth];
      const Component& elder = current_elder ? comp[current] : comp[other];
      const Component& younger = current_elder ? comp[other] : comp[current];
      diagram.pairs.push_back({field.value(younger.birth), field.value(v), younger.birth, v, false});
      tree.merges.push_back({saddle, comp[current].birth, comp[other].birth, elder.birth});

      const std::size_t elder_birth = elder.birth;
      const std::size_t merged = sets.unite(current, other);
      comp[merged] = {elder_birth, saddle, v};
      current = merged;
    }
    const std::size_t root = sets.unite(current, v);
    comp[root] = comp[current];
    comp[root].maximum = v;
  }

  std::vector<std::size_t> final_roots;
  for (std::size_t v = 0; v < n; ++v)
    if (sets.find(v) == v) final_roots.push_back(v);
  std::sort(final_roots.begin(), final_roots.end(),
            [&](std::size_t a, std::size_t b) { return comp[a].birth < comp[b].birth; });
  for (const std::size_t r : final_roots) {
    const Component& c = comp[r];
    const std::size_t root = add_node(c.maximum, NodeKind::root);
    tree.edges.emplace_back(c.node, root);
    diagram.pairs.push_back({field.value(c.birth), field.value(c.maximum), c.birth, c.maximum, true});
  }
  tree.components = final_roots.size();
  return out;
}

MergeTree merge_tree(const ScalarField& field) { return compute_topology(field).tree; }

PersistenceDiagram persistence_diagram(const ScalarField& field) {
  return compute_topology(field).diagram;
}

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::minimum:
      return "min";
    case NodeKind::saddle:
      return "saddle";
    case NodeKind::root:
      return "root";
  }
  return "?";
}

// Values are written through format_double so a reload reproduces the text.
std::string merge_tree_json(const MergeTree& tree) {
  std::string s = "{\n  \"nodes\": [";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& nd = tree.nodes[i];
    s += i ? ",\n    " : "\n    ";
    s += "{\"id\":" + std::to_string(nd.id) + ",\"vertex\":" + std::to_string(nd.vertex) +
         ",\"value\":" + io::format_double(nd.value) + ",\"kind\":\"" + to_string(nd.kind) + "\"}";
  }
  s += "\n  ],\n  \"edges\": [";
  for (std::size_t i = 0; i < tree.edges.size(); ++i) {
    s += i ? "," : "";
    s += "[" + std::to_string(tree.edges[i].first) + "," + std::to_string(tree.edges[i].second) + "]";
  }
  s += "]\n}\n";
  return s;
}

std::string merge_tree_dot(const MergeTree& tree) {
  std::string s = "graph merge_tree {\n  node [shape=circle, fontsize=8];\n";
  for (const auto& nd : tree.nodes) {
    const char* shape = nd.kind == NodeKind::minimum ? "circle"
                        : nd.kind == NodeKind::saddle ? "diamond"
                                                      : "box";
    s += "  n" + std::to_string(nd.id) + " [shape=" + shape + ", label=\"" +
         io::format_double(nd.value) + "\"];\n";
  }
  for (const auto& [c, p] : tree.edges)
    s += "  n" + std::to_string(c) + " -- n" + std::to_string(p) + ";\n";
  s += "}\n";
  return s;
}

std::string diagram_csv(const PersistenceDiagram& diagram) {
  std::string s = "birth,death,essential\n";
  for (const auto& p : diagram.pairs) {
    s += io::format_double(p.birth);
    s += ',';
    s += io::format_double(p.death);
    s += p.essential ? ",1\n" : ",0\n";
  }
  return s;
}

}  // namespace losstopo
