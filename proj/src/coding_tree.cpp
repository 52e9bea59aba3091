#include "steps/coding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "steps/error.hpp"
#include "steps/io.hpp"

namespace steps {

double entropy_term(double boundary, double volume, double parent_volume,
                    double graph_volume) {
  if (boundary <= 0.0 || volume <= 0.0 || parent_volume <= 0.0 ||
      graph_volume <= 0.0) {
    return 0.0;
  }
  return -(boundary / graph_volume) * std::log2(volume / parent_volume);
}

const TreeNode& CodingTree::node(NodeId id) const {
  if (!alive(id)) fail_internal("dead node id " + std::to_string(id));
  return nodes[static_cast<std::size_t>(id)];
}

TreeNode& CodingTree::node(NodeId id) {
  if (!alive(id)) fail_internal("dead node id " + std::to_string(id));
  return nodes[static_cast<std::size_t>(id)];
}

std::size_t CodingTree::alive_count() const {
  std::size_t n = 0;
  for (const auto& nd : nodes)
    if (nd.id != kNoNode) ++n;
  return n;
}

NodeId CodingTree::leaf(SkillId skill) const {
  if (skill < 0 || static_cast<std::size_t>(skill) >= leaf_of.size())
    fail_internal("skill id out of range: " + std::to_string(skill));
  return leaf_of[static_cast<std::size_t>(skill)];
}

std::optional<SkillId> CodingTree::skill_by_name(const std::string& name) const {
  for (std::size_t i = 0; i < skill_names.size(); ++i)
    if (skill_names[i] == name) return static_cast<SkillId>(i);
  return std::nullopt;
}

std::vector<NodeId> CodingTree::path_to_root(NodeId id) const {
  std::vector<NodeId> path;
  NodeId cur = id;
  while (cur != kNoNode) {
    path.push_back(cur);
    if (path.size() > nodes.size()) fail_internal("parent cycle in tree");
    cur = node(cur).parent;
  }
  return path;
}

std::vector<SkillId> CodingTree::leaves_under(NodeId id) const {
  std::vector<SkillId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    const TreeNode& nd = node(cur);
    if (nd.is_leaf()) out.push_back(*nd.skill);
    for (NodeId c : nd.children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t CodingTree::leaf_count_under(NodeId id) const {
  std::size_t n = 0;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    const TreeNode& nd = node(cur);
    if (nd.is_leaf()) ++n;
    for (NodeId c : nd.children) stack.push_back(c);
  }
  return n;
}

bool CodingTree::is_ancestor_or_equal(NodeId ancestor, NodeId id) const {
  NodeId cur = id;
  std::size_t steps_taken = 0;
  while (cur != kNoNode) {
    if (cur == ancestor) return true;
    if (++steps_taken > nodes.size()) fail_internal("parent cycle in tree");
    cur = node(cur).parent;
  }
  return false;
}

void CodingTree::validate() const {
  if (!alive(root)) fail_internal("tree has no live root");
  if (node(root).parent != kNoNode) fail_internal("root has a parent");
  std::size_t seen = 0;
  for (const auto& nd : nodes) {
    if (nd.id == kNoNode) continue;
    ++seen;
    if (nd.id != kNoNode && nd.parent == kNoNode && nd.id != root)
      fail_internal("second root: node " + std::to_string(nd.id));
    if (nd.parent != kNoNode) {
      const auto& kids = node(nd.parent).children;
      if (std::find(kids.begin(), kids.end(), nd.id) == kids.end())
        fail_internal("parent/child mismatch at node " + std::to_string(nd.id));
    }
    for (NodeId c : nd.children) {
      if (!alive(c) || node(c).parent != nd.id)
        fail_internal("child link broken at node " + std::to_string(nd.id));
    }
    if (nd.is_leaf() && !nd.children.empty())
      fail_internal("leaf with children: node " + std::to_string(nd.id));
    if (!nd.is_leaf() && nd.children.empty() && nd.id != root)
      fail_internal("internal node without children: " + std::to_string(nd.id));
    if (!nd.children.empty()) {
      double vol_sum = 0.0;
      for (NodeId c : nd.children) vol_sum += node(c).volume;
      double tol = 1e-6 * std::max(1.0, std::abs(nd.volume));
      if (std::abs(vol_sum - nd.volume) > tol)
        fail_internal("child volumes disagree at node " + std::to_string(nd.id));
    }
  }
  // Reachability doubles as the acyclicity check.
  std::size_t reached = 0;
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    ++reached;
    if (reached > seen) fail_internal("cycle among tree nodes");
    for (NodeId c : node(cur).children) stack.push_back(c);
  }
  if (reached != seen) fail_internal("unreachable tree nodes");
  std::set<SkillId> skills_seen;
  for (std::size_t v = 0; v < leaf_of.size(); ++v) {
    NodeId l = leaf_of[v];
    if (!alive(l) || !node(l).is_leaf() ||
        *node(l).skill != static_cast<SkillId>(v))
      fail_internal("leaf_of broken for skill " + std::to_string(v));
    if (!skills_seen.insert(static_cast<SkillId>(v)).second)
      fail_internal("duplicate skill leaf");
  }
}

CodingTree trivial_tree(const CoocGraph& g) {
  CodingTree t;
  const int n = g.vertex_count();
  t.skill_names = g.skills();
  t.graph_volume = g.total_volume();
  t.nodes.resize(static_cast<std::size_t>(n) + 1);
  t.root = n;
  t.leaf_of.resize(static_cast<std::size_t>(n));
  TreeNode& r = t.nodes[static_cast<std::size_t>(n)];
  r.id = n;
  r.parent = kNoNode;
  r.volume = g.total_volume();
  r.boundary = 0.0;
  r.entropy_term = 0.0;
  for (int v = 0; v < n; ++v) {
    TreeNode& leaf = t.nodes[static_cast<std::size_t>(v)];
    leaf.id = v;
    leaf.parent = n;
    leaf.skill = v;
    leaf.volume = g.degree(v);
    leaf.boundary = g.degree(v);
    leaf.entropy_term =
        entropy_term(leaf.boundary, leaf.volume, r.volume, t.graph_volume);
    r.children.push_back(v);
    t.leaf_of[static_cast<std::size_t>(v)] = v;
  }
  return t;
}

double structural_entropy(const CodingTree& t) {
  double h = 0.0;
  for (const auto& nd : t.nodes) {
    if (nd.id == kNoNode || nd.id == t.root) continue;
    h += nd.entropy_term;
  }
  return h;
}

double skill_entropy(const CodingTree& t, SkillId v) {
  double h = 0.0;
  NodeId cur = t.leaf(v);
  while (cur != t.root) {
    h += t.node(cur).entropy_term;
    cur = t.node(cur).parent;
  }
  return h;
}

double community_cut(const CodingTree& t, const CoocGraph& g, NodeId a,
                     NodeId b) {
  std::vector<char> in_a(static_cast<std::size_t>(g.vertex_count()), 0);
  for (SkillId v : t.leaves_under(a)) in_a[static_cast<std::size_t>(v)] = 1;
  double cut = 0.0;
  for (SkillId v : t.leaves_under(b)) {
    for (const auto& [u, w] : g.neighbors(v)) {
      if (in_a[static_cast<std::size_t>(u)]) cut += w;
    }
  }
  return cut;
}

double merge_delta(const CodingTree& t, NodeId a, NodeId b, double cut_ab) {
  if (a == b) fail_internal("merge_delta on identical nodes");
  if (t.node(a).parent != t.root || t.node(b).parent != t.root)
    fail_internal("merge_delta expects root children");
  if (cut_ab <= 0.0) return 0.0;
  double vol_g = t.graph_volume;
  double vol_p = t.node(a).volume + t.node(b).volume;
  if (vol_g <= 0.0 || vol_p <= 0.0) return 0.0;
  return (2.0 * cut_ab / vol_g) * std::log2(vol_p / vol_g);
}

double merge_delta(const CodingTree& t, const CoocGraph& g, NodeId a,
                   NodeId b) {
  return merge_delta(t, a, b, community_cut(t, g, a, b));
}

NodeId apply_merge(CodingTree& t, NodeId a, NodeId b, double cut_ab) {
  if (t.node(a).parent != t.root || t.node(b).parent != t.root)
    fail_internal("apply_merge expects root children");
  NodeId p = static_cast<NodeId>(t.nodes.size());
  TreeNode parent;
  parent.id = p;
  parent.parent = t.root;
  parent.children = {std::min(a, b), std::max(a, b)};
  parent.volume = t.node(a).volume + t.node(b).volume;
  parent.boundary =
      std::max(0.0, t.node(a).boundary + t.node(b).boundary - 2.0 * cut_ab);
  parent.entropy_term = entropy_term(parent.boundary, parent.volume,
                                     t.node(t.root).volume, t.graph_volume);
  t.nodes.push_back(parent);

  auto& root_kids = t.node(t.root).children;
  root_kids.erase(std::remove_if(root_kids.begin(), root_kids.end(),
                                 [&](NodeId c) { return c == a || c == b; }),
                  root_kids.end());
  root_kids.push_back(p);

  for (NodeId c : {std::min(a, b), std::max(a, b)}) {
    TreeNode& nd = t.node(c);
    nd.parent = p;
    nd.entropy_term = entropy_term(nd.boundary, nd.volume,
                                   t.node(p).volume, t.graph_volume);
  }
  return p;
}

NodeId apply_merge(CodingTree& t, const CoocGraph& g, NodeId a, NodeId b) {
  return apply_merge(t, a, b, community_cut(t, g, a, b));
}

FlattenResult flatten_tree(const CodingTree& t, double epsilon) {
  FlattenResult res;
  res.tree = t;
  res.entropy_before = structural_entropy(t);
  CodingTree& out = res.tree;

  std::vector<char> drop(out.nodes.size(), 0);
  for (const auto& nd : t.nodes) {
    if (nd.id == kNoNode || nd.id == t.root || nd.is_leaf()) continue;
    if (nd.entropy_term <= epsilon) drop[static_cast<std::size_t>(nd.id)] = 1;
  }

  auto kept_ancestor = [&](NodeId id) {
    NodeId cur = out.node(id).parent;
    while (cur != kNoNode && drop[static_cast<std::size_t>(cur)])
      cur = out.node(cur).parent;
    return cur;
  };

  for (auto& nd : out.nodes) {
    if (nd.id == kNoNode || drop[static_cast<std::size_t>(nd.id)]) continue;
    if (nd.parent != kNoNode && drop[static_cast<std::size_t>(nd.parent)]) {
      nd.parent = kept_ancestor(nd.id);
    }
  }
  for (auto& nd : out.nodes) {
    if (nd.id == kNoNode) continue;
    if (drop[static_cast<std::size_t>(nd.id)]) {
      nd = TreeNode{};
      ++res.spliced;
      continue;
    }
    nd.children.clear();
  }
  for (auto& nd : out.nodes) {
    if (nd.id == kNoNode || nd.parent == kNoNode) continue;
    out.node(nd.parent).children.push_back(nd.id);
  }
  for (auto& nd : out.nodes) {
    if (nd.id == kNoNode) continue;
    std::sort(nd.children.begin(), nd.children.end());
    if (nd.id == out.root) {
      nd.entropy_term = 0.0;
    } else {
      nd.entropy_term = entropy_term(
          nd.boundary, nd.volume, out.node(nd.parent).volume, out.graph_volume);
    }
  }
  out.validate();
  res.entropy_after = structural_entropy(out);
  return res;
}

void save_taxonomy(const CodingTree& t, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["graph_volume"] = t.graph_volume;
  doc["root"] = t.root;
  auto& arr = doc["nodes"] = nlohmann::json::array();
  for (const auto& nd : t.nodes) {
    if (nd.id == kNoNode) continue;
    nlohmann::json jn;
    jn["id"] = nd.id;
    jn["parent"] = nd.parent == kNoNode ? nlohmann::json(nullptr)
                                        : nlohmann::json(nd.parent);
    jn["children"] = nd.children;
    jn["skill"] = nd.is_leaf()
                      ? nlohmann::json(t.skill_names[static_cast<std::size_t>(
                            *nd.skill)])
                      : nlohmann::json(nullptr);
    jn["volume"] = nd.volume;
    jn["boundary"] = nd.boundary;
    jn["entropy_term"] = nd.entropy_term;
    arr.push_back(jn);
  }
  io::atomic_write(path, doc.dump(2) + "\n");
}

CodingTree load_taxonomy(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail_user(path.string() + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array() ||
      doc["nodes"].empty())
    fail_user(path.string() + ": taxonomy needs a non-empty nodes array");
  if (!doc.contains("graph_volume") || !doc["graph_volume"].is_number())
    fail_user(path.string() + ": missing graph_volume");
  if (!doc.contains("root") || !doc["root"].is_number_integer())
    fail_user(path.string() + ": missing root id");

  CodingTree t;
  t.graph_volume = doc["graph_volume"].get<double>();
  t.root = doc["root"].get<NodeId>();

  NodeId max_id = 0;
  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_object() || !jn.contains("id") ||
        !jn["id"].is_number_integer())
      fail_user(path.string() + ": node entry missing id");
    max_id = std::max(max_id, jn["id"].get<NodeId>());
  }
  t.nodes.resize(static_cast<std::size_t>(max_id) + 1);

  // Leaf skills keyed by node id; ascending leaf id fixes SkillId order.
  std::map<NodeId, std::string> leaf_skill;
  for (const auto& jn : doc["nodes"]) {
    NodeId id = jn["id"].get<NodeId>();
    if (id < 0) fail_user(path.string() + ": negative node id");
    TreeNode& nd = t.nodes[static_cast<std::size_t>(id)];
    if (nd.id != kNoNode)
      fail_user(path.string() + ": duplicate node id " + std::to_string(id));
    nd.id = id;
    if (!jn.contains("parent") ||
        (!jn["parent"].is_null() && !jn["parent"].is_number_integer()))
      fail_user(path.string() + ": bad parent at node " + std::to_string(id));
    nd.parent = jn["parent"].is_null() ? kNoNode : jn["parent"].get<NodeId>();
    if (!jn.contains("children") || !jn["children"].is_array())
      fail_user(path.string() + ": bad children at node " + std::to_string(id));
    for (const auto& jc : jn["children"]) {
      if (!jc.is_number_integer())
        fail_user(path.string() + ": bad child id at node " +
                  std::to_string(id));
      nd.children.push_back(jc.get<NodeId>());
    }
    std::sort(nd.children.begin(), nd.children.end());
    if (!jn.contains("skill") ||
        (!jn["skill"].is_null() && !jn["skill"].is_string()))
      fail_user(path.string() + ": bad skill at node " + std::to_string(id));
    if (jn["skill"].is_string()) {
      std::string name = jn["skill"].get<std::string>();
      if (name.empty())
        fail_user(path.string() + ": empty skill name at node " +
                  std::to_string(id));
      if (!leaf_skill.emplace(id, name).second)
        fail_user(path.string() + ": duplicate leaf id " + std::to_string(id));
    }
    for (const char* key : {"volume", "boundary", "entropy_term"}) {
      if (!jn.contains(key) || !jn[key].is_number())
        fail_user(path.string() + ": bad " + std::string(key) + " at node " +
                  std::to_string(id));
    }
    nd.volume = jn["volume"].get<double>();
    nd.boundary = jn["boundary"].get<double>();
    nd.entropy_term = jn["entropy_term"].get<double>();
  }

  std::set<std::string> unique_names;
  for (const auto& [leaf_id, name] : leaf_skill) {
    if (!unique_names.insert(name).second)
      fail_user(path.string() + ": duplicate skill name " + name);
    SkillId sid = static_cast<SkillId>(t.skill_names.size());
    t.skill_names.push_back(name);
    t.leaf_of.push_back(leaf_id);
    t.nodes[static_cast<std::size_t>(leaf_id)].skill = sid;
  }
  if (t.skill_names.empty())
    fail_user(path.string() + ": taxonomy has no leaves");
  if (!t.alive(t.root) || t.node(t.root).parent != kNoNode)
    fail_user(path.string() + ": root id does not name a parentless node");

  try {
    t.validate();
  } catch (const StepsError& e) {
    fail_user(path.string() + ": " + e.what());
  }
  if (t.node(t.root).boundary != 0.0)
    fail_user(path.string() + ": root boundary must be 0");
  double tol_vol = 1e-6 * std::max(1.0, std::abs(t.graph_volume));
  if (std::abs(t.node(t.root).volume - t.graph_volume) > tol_vol)
    fail_user(path.string() + ": root volume disagrees with graph_volume");
  for (const auto& nd : t.nodes) {
    if (nd.id == kNoNode || nd.id == t.root) continue;
    double expect = entropy_term(nd.boundary, nd.volume,
                                 t.node(nd.parent).volume, t.graph_volume);
    if (std::abs(expect - nd.entropy_term) > 1e-9)
      fail_user(path.string() + ": stored entropy_term inconsistent at node " +
                std::to_string(nd.id));
  }
  return t;
}

}  // namespace steps
