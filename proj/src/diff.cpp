#include "patchguard/diff.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "patchguard/error.hpp"

namespace patchguard {
namespace {

constexpr int kMinHeight = 2;
constexpr double kMinDice = 0.5;
constexpr int kMaxOptimalSize = 100;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

// Per-node structural summaries. Node ids are pre-order, so the subtree of n
// is the id range [n, n + size[n]).
struct TreeInfo {
  const NormalizedAst& ast;
  std::vector<std::uint64_t> hash;
  std::vector<std::uint64_t> leaf_hash;
  std::vector<int> height;
  std::vector<int> size;
  std::vector<int> depth;

  explicit TreeInfo(const NormalizedAst& a) : ast(a) {
    std::size_t n = a.size();
    hash.assign(n, 0);
    leaf_hash.assign(n, 0);
    height.assign(n, 1);
    size.assign(n, 1);
    depth.assign(n, 0);
    for (NodeId id : a.preorder()) {
      NodeId p = a.parent(id);
      if (p != kNoNode) depth[id] = depth[p] + 1;
    }
    for (NodeId id : a.postorder()) {
      std::uint64_t h = mix(fnv1a(kind_name(a.kind(id))), fnv1a(a.label(id)));
      leaf_hash[id] = h;
      for (NodeId c : a.children(id)) {
        h = mix(h, hash[c]);
        height[id] = std::max(height[id], height[c] + 1);
        size[id] += size[c];
      }
      hash[id] = mix(h, a.children(id).size());
    }
  }
  bool in_subtree(NodeId root, NodeId n) const { return n >= root && n < root + size[root]; }
  bool is_leaf(NodeId n) const { return ast.children(n).empty(); }
};

class Mappings {
 public:
  Mappings(std::size_t n1, std::size_t n2) : s2d_(n1, kNoNode), d2s_(n2, kNoNode) {}
  bool has_src(NodeId s) const { return s2d_[s] != kNoNode; }
  bool has_dst(NodeId d) const { return d2s_[d] != kNoNode; }
  NodeId dst_of(NodeId s) const { return s2d_[s]; }
  NodeId src_of(NodeId d) const { return d2s_[d]; }
  void add(NodeId s, NodeId d) {
    s2d_[s] = d;
    d2s_[d] = s;
  }
  NodeMapping pairs() const {
    NodeMapping out;
    for (std::size_t s = 0; s < s2d_.size(); ++s) {
      if (s2d_[s] != kNoNode) out.emplace_back(static_cast<NodeId>(s), s2d_[s]);
    }
    return out;
  }

 private:
  std::vector<NodeId> s2d_;
  std::vector<NodeId> d2s_;
};

class Matcher {
 public:
  Matcher(const NormalizedAst& a, const NormalizedAst& b) : t1_(a), t2_(b), m_(a.size(), b.size()) {}

  NodeMapping run() {
    if (t1_.ast.root() == kNoNode || t2_.ast.root() == kNoNode) return {};
    top_down();
    bottom_up();
    collapse_moves();
    return m_.pairs();
  }

 private:
  bool iso(NodeId a, NodeId b) const {
    return t1_.hash[a] == t2_.hash[b] && t1_.size[a] == t2_.size[b] && isomorphic(t1_.ast, a, t2_.ast, b);
  }

  void map_recursively(NodeId a, NodeId b) {
    for (int k = 0; k < t1_.size[a]; ++k) m_.add(a + k, b + k);
  }

  double dice(NodeId a, NodeId b) const {
    int d1 = t1_.size[a] - 1;
    int d2 = t2_.size[b] - 1;
    if (d1 + d2 == 0) return 0.0;
    int common = 0;
    for (NodeId k = a + 1; k < a + t1_.size[a]; ++k) {
      if (m_.has_src(k) && t2_.in_subtree(b, m_.dst_of(k)) && m_.dst_of(k) != b) ++common;
    }
    return 2.0 * common / (d1 + d2);
  }

  // Number of levels, walking up from a and b, whose sibling index and
  // parent kind agree.
  int ancestry_agreement(NodeId a, NodeId b) const {
    int n = 0;
    while (true) {
      NodeId pa = t1_.ast.parent(a);
      NodeId pb = t2_.ast.parent(b);
      if (pa == kNoNode || pb == kNoNode) return (pa == pb) ? n + 1 : n;
      if (t1_.ast.index_in_parent(a) != t2_.ast.index_in_parent(b)) return n;
      if (t1_.ast.kind(pa) != t2_.ast.kind(pb) || t1_.ast.label(pa) != t2_.ast.label(pb)) return n;
      ++n;
      a = pa;
      b = pb;
    }
  }

  static int peek_max(const std::vector<NodeId>& list, const TreeInfo& t) {
    int h = -1;
    for (NodeId n : list) h = std::max(h, t.height[n]);
    return h;
  }
  static std::vector<NodeId> pop(std::vector<NodeId>& list, const TreeInfo& t, int h) {
    std::vector<NodeId> out;
    std::vector<NodeId> rest;
    for (NodeId n : list) (t.height[n] == h ? out : rest).push_back(n);
    list = std::move(rest);
    std::sort(out.begin(), out.end());
    return out;
  }
  static void open(std::vector<NodeId>& list, const TreeInfo& t, NodeId n) {
    for (NodeId c : t.ast.children(n)) list.push_back(c);
  }

  void top_down() {
    std::vector<NodeId> l1{t1_.ast.root()};
    std::vector<NodeId> l2{t2_.ast.root()};
    std::vector<std::pair<NodeId, NodeId>> ambiguous;
    while (true) {
      int h1 = peek_max(l1, t1_);
      int h2 = peek_max(l2, t2_);
      if (std::min(h1, h2) < kMinHeight) break;
      if (h1 != h2) {
        if (h1 > h2) {
          for (NodeId n : pop(l1, t1_, h1)) open(l1, t1_, n);
        } else {
          for (NodeId n : pop(l2, t2_, h2)) open(l2, t2_, n);
        }
        continue;
      }
      auto hs1 = pop(l1, t1_, h1);
      auto hs2 = pop(l2, t2_, h2);
      std::vector<int> count1(hs1.size(), 0);
      std::vector<int> count2(hs2.size(), 0);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t i = 0; i < hs1.size(); ++i) {
        for (std::size_t j = 0; j < hs2.size(); ++j) {
          if (iso(hs1[i], hs2[j])) {
            pairs.emplace_back(i, j);
            ++count1[i];
            ++count2[j];
          }
        }
      }
      for (auto [i, j] : pairs) {
        if (count1[i] == 1 && count2[j] == 1) {
          map_recursively(hs1[i], hs2[j]);
        } else {
          ambiguous.emplace_back(hs1[i], hs2[j]);
        }
      }
      for (std::size_t i = 0; i < hs1.size(); ++i) {
        if (count1[i] == 0) open(l1, t1_, hs1[i]);
      }
      for (std::size_t j = 0; j < hs2.size(); ++j) {
        if (count2[j] == 0) open(l2, t2_, hs2[j]);
      }
    }
    // Ambiguous anchors: prefer the longest agreeing ancestry, then similar
    // parents, then equal depth, then equal position among siblings, then
    // source order.
    struct Keyed {
      int ancestry;
      double parent_dice;
      int depth_gap;
      long position_gap;
      NodeId a;
      NodeId b;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(ambiguous.size());
    for (auto [a, b] : ambiguous) {
      NodeId pa = t1_.ast.parent(a);
      NodeId pb = t2_.ast.parent(b);
      double pd = (pa != kNoNode && pb != kNoNode) ? dice(pa, pb) : 0.0;
      long gap = std::labs(static_cast<long>(t1_.ast.index_in_parent(a)) -
                           static_cast<long>(t2_.ast.index_in_parent(b)));
      keyed.push_back({ancestry_agreement(a, b), pd, std::abs(t1_.depth[a] - t2_.depth[b]), gap, a, b});
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
      if (x.ancestry != y.ancestry) return x.ancestry > y.ancestry;
      if (x.parent_dice != y.parent_dice) return x.parent_dice > y.parent_dice;
      return std::tie(x.depth_gap, x.position_gap, x.a, x.b) < std::tie(y.depth_gap, y.position_gap, y.a, y.b);
    });
    for (const Keyed& k : keyed) {
      if (!m_.has_src(k.a) && !m_.has_dst(k.b)) map_recursively(k.a, k.b);
    }
  }

  void bottom_up() {
    NodeId root1 = t1_.ast.root();
    NodeId root2 = t2_.ast.root();
    std::vector<char> seen(t2_.ast.size(), 0);
    for (NodeId a : t1_.ast.postorder()) {
      if (a == root1) {
        if (!m_.has_src(a) && !m_.has_dst(root2) && t1_.ast.kind(a) == t2_.ast.kind(root2)) m_.add(a, root2);
        if (m_.dst_of(a) == root2) last_chance(a, root2);
        continue;
      }
      if (m_.has_src(a) || t1_.is_leaf(a)) continue;
      std::vector<NodeId> candidates;
      for (NodeId k = a + 1; k < a + t1_.size[a]; ++k) {
        if (!m_.has_src(k)) continue;
        for (NodeId p = t2_.ast.parent(m_.dst_of(k)); p != kNoNode && p != root2; p = t2_.ast.parent(p)) {
          if (seen[p]) continue;
          seen[p] = 1;
          if (!m_.has_dst(p) && t2_.ast.kind(p) == t1_.ast.kind(a)) candidates.push_back(p);
        }
      }
      for (NodeId c : candidates) seen[c] = 0;
      // reset the remaining marks along the walked paths
      std::fill(seen.begin(), seen.end(), 0);
      NodeId best = kNoNode;
      double best_dice = -1.0;
      int best_gap = 0;
      std::sort(candidates.begin(), candidates.end());
      for (NodeId c : candidates) {
        double d = dice(a, c);
        int gap = std::abs(t1_.depth[a] - t2_.depth[c]);
        if (d > best_dice || (d == best_dice && gap < best_gap)) {
          best = c;
          best_dice = d;
          best_gap = gap;
        }
      }
      if (best != kNoNode && best_dice >= kMinDice) {
        m_.add(a, best);
        last_chance(a, best);
      }
    }
  }

  std::vector<std::uint64_t> leaf_bag(const TreeInfo& t, NodeId n) const {
    std::vector<std::uint64_t> bag;
    for (NodeId k = n; k < n + t.size[n]; ++k) {
      if (t.is_leaf(k)) bag.push_back(t.leaf_hash[k]);
    }
    std::sort(bag.begin(), bag.end());
    return bag;
  }

  double bag_similarity(NodeId a, NodeId b) const {
    auto x = leaf_bag(t1_, a);
    auto y = leaf_bag(t2_, b);
    if (x.empty() && y.empty()) return 1.0;
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t common = 0;
    while (i < x.size() && j < y.size()) {
      if (x[i] == y[j]) {
        ++common;
        ++i;
        ++j;
      } else if (x[i] < y[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return 2.0 * static_cast<double>(common) / static_cast<double>(x.size() + y.size());
  }

  // Matches the still-unmatched children of a matched pair: isomorphic
  // subtrees first, then same-kind children ranked by label equality, leaf
  // similarity and sibling position.
  void recover(NodeId a, NodeId b) {
    auto ch1 = t1_.ast.children(a);
    auto ch2 = t2_.ast.children(b);
    for (NodeId c1 : ch1) {
      if (m_.has_src(c1)) continue;
      for (NodeId c2 : ch2) {
        if (!m_.has_dst(c2) && iso(c1, c2)) {
          map_recursively(c1, c2);
          break;
        }
      }
    }
    std::vector<std::pair<NodeId, NodeId>> fresh;
    for (std::size_t i = 0; i < ch1.size(); ++i) {
      NodeId c1 = ch1[i];
      if (m_.has_src(c1)) continue;
      NodeId best = kNoNode;
      std::tuple<int, double, long> best_key{-1, -1.0, 0};
      for (std::size_t j = 0; j < ch2.size(); ++j) {
        NodeId c2 = ch2[j];
        if (m_.has_dst(c2) || t1_.ast.kind(c1) != t2_.ast.kind(c2)) continue;
        int same_label = t1_.ast.label(c1) == t2_.ast.label(c2) ? 1 : 0;
        double sim = bag_similarity(c1, c2);
        long gap = -std::labs(static_cast<long>(i) - static_cast<long>(j));
        std::tuple<int, double, long> key{same_label, sim, gap};
        if (best == kNoNode || key > best_key) {
          best = c2;
          best_key = key;
        }
      }
      if (best != kNoNode) {
        m_.add(c1, best);
        fresh.emplace_back(c1, best);
      }
    }
    for (auto [c1, c2] : fresh) last_chance(c1, c2);
  }

  void last_chance(NodeId a, NodeId b) {
    if (t1_.size[a] < kMaxOptimalSize && t2_.size[b] < kMaxOptimalSize) {
      optimal(a, b);
    } else {
      recover(a, b);
    }
  }

  // Zhang-Shasha alignment of two small subtrees; aligned same-kind pairs
  // that are still free become mappings.
  void optimal(NodeId a, NodeId b) {
    struct Side {
      std::vector<NodeId> post;       // 1-based
      std::vector<std::size_t> lmd;   // 1-based
      std::vector<std::size_t> keyroots;
    };
    auto prepare = [](const TreeInfo& t, NodeId root) {
      Side side;
      side.post.push_back(kNoNode);
      side.lmd.push_back(0);
      std::vector<std::size_t> index(static_cast<std::size_t>(t.size[root]), 0);
      std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
      while (!stack.empty()) {
        auto& [n, next] = stack.back();
        auto ch = t.ast.children(n);
        if (next < ch.size()) {
          NodeId c = ch[next++];
          stack.emplace_back(c, 0);
          continue;
        }
        side.post.push_back(n);
        std::size_t i = side.post.size() - 1;
        index[static_cast<std::size_t>(n - root)] = i;
        side.lmd.push_back(ch.empty() ? i : side.lmd[index[static_cast<std::size_t>(ch.front() - root)]]);
        stack.pop_back();
      }
      std::vector<char> seen(side.post.size(), 0);
      for (std::size_t i = side.post.size() - 1; i >= 1; --i) {
        if (!seen[side.lmd[i]]) {
          side.keyroots.push_back(i);
          seen[side.lmd[i]] = 1;
        }
      }
      std::sort(side.keyroots.begin(), side.keyroots.end());
      return side;
    };
    Side s1 = prepare(t1_, a);
    Side s2 = prepare(t2_, b);
    std::size_t n1 = s1.post.size() - 1;
    std::size_t n2 = s2.post.size() - 1;
    std::vector<std::vector<double>> td(n1 + 1, std::vector<double>(n2 + 1, 0.0));
    std::vector<std::vector<double>> fd(n1 + 1, std::vector<double>(n2 + 1, 0.0));
    auto update_cost = [&](std::size_t i, std::size_t j) {
      NodeId x = s1.post[i];
      NodeId y = s2.post[j];
      if (t1_.ast.kind(x) != t2_.ast.kind(y)) return 3.0;
      return t1_.ast.label(x) == t2_.ast.label(y) ? 0.0 : 1.0;
    };
    auto forest = [&](std::size_t i, std::size_t j) {
      std::size_t li = s1.lmd[i];
      std::size_t lj = s2.lmd[j];
      fd[li - 1][lj - 1] = 0;
      for (std::size_t di = li; di <= i; ++di) {
        fd[di][lj - 1] = fd[di - 1][lj - 1] + 1;
        for (std::size_t dj = lj; dj <= j; ++dj) {
          fd[li - 1][dj] = fd[li - 1][dj - 1] + 1;
          if (s1.lmd[di] == li && s2.lmd[dj] == lj) {
            fd[di][dj] = std::min({fd[di - 1][dj] + 1, fd[di][dj - 1] + 1, fd[di - 1][dj - 1] + update_cost(di, dj)});
            td[di][dj] = fd[di][dj];
          } else {
            fd[di][dj] = std::min({fd[di - 1][dj] + 1, fd[di][dj - 1] + 1,
                                   fd[s1.lmd[di] - 1][s2.lmd[dj] - 1] + td[di][dj]});
          }
        }
      }
    };
    for (std::size_t i : s1.keyroots) {
      for (std::size_t j : s2.keyroots) forest(i, j);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs{{n1, n2}};
    bool root_pair = true;
    while (!pairs.empty()) {
      auto [last_row, last_col] = pairs.back();
      pairs.pop_back();
      if (!root_pair) forest(last_row, last_col);
      root_pair = false;
      std::size_t first_row = s1.lmd[last_row] - 1;
      std::size_t first_col = s2.lmd[last_col] - 1;
      std::size_t row = last_row;
      std::size_t col = last_col;
      while (row > first_row || col > first_col) {
        if (row > first_row && fd[row - 1][col] + 1 == fd[row][col]) {
          --row;
        } else if (col > first_col && fd[row][col - 1] + 1 == fd[row][col]) {
          --col;
        } else if (s1.lmd[row] - 1 == s1.lmd[last_row] - 1 && s2.lmd[col] - 1 == s2.lmd[last_col] - 1) {
          NodeId x = s1.post[row];
          NodeId y = s2.post[col];
          if (t1_.ast.kind(x) == t2_.ast.kind(y) && !m_.has_src(x) && !m_.has_dst(y)) m_.add(x, y);
          --row;
          --col;
        } else {
          pairs.emplace_back(row, col);
          row = s1.lmd[row] - 1;
          col = s2.lmd[col] - 1;
        }
      }
    }
  }

  bool fully_unmapped_src(NodeId n) const {
    for (NodeId k = n; k < n + t1_.size[n]; ++k) {
      if (m_.has_src(k)) return false;
    }
    return true;
  }
  bool fully_unmapped_dst(NodeId n) const {
    for (NodeId k = n; k < n + t2_.size[n]; ++k) {
      if (m_.has_dst(k)) return false;
    }
    return true;
  }

  // An unmatched buggy subtree with an unmatched isomorphic twin in the
  // patched tree becomes a move instead of a DEL+ADD pair.
  void collapse_moves() {
    std::unordered_map<std::uint64_t, std::vector<NodeId>> by_hash;
    for (NodeId d = 0; d < static_cast<NodeId>(t2_.ast.size()); ++d) {
      if (!m_.has_dst(d)) by_hash[t2_.hash[d]].push_back(d);
    }
    auto trivial = [&](NodeId n) {
      NodeKind k = t1_.ast.kind(n);
      return t1_.size[n] == 1 &&
             (k == NodeKind::kOperator || k == NodeKind::kModifier || t1_.ast.label(n).empty());
    };
    NodeId n = 0;
    const NodeId end = static_cast<NodeId>(t1_.ast.size());
    while (n < end) {
      if (m_.has_src(n) || !fully_unmapped_src(n) || trivial(n)) {
        ++n;
        continue;
      }
      NodeId best = kNoNode;
      int best_gap = 0;
      auto it = by_hash.find(t1_.hash[n]);
      if (it != by_hash.end()) {
        for (NodeId d : it->second) {
          if (!fully_unmapped_dst(d) || !iso(n, d)) continue;
          int gap = std::abs(t1_.depth[n] - t2_.depth[d]);
          if (best == kNoNode || gap < best_gap) {
            best = d;
            best_gap = gap;
          }
        }
      }
      if (best != kNoNode) {
        map_recursively(n, best);
        n += t1_.size[n];
      } else {
        ++n;
      }
    }
  }

  TreeInfo t1_;
  TreeInfo t2_;
  Mappings m_;
};

// Mutable tree shared by script generation and replay so both follow the
// same insertion and move semantics.
class WorkingTree {
 public:
  struct Node {
    NodeKind kind = NodeKind::kOther;
    std::string label;
    int parent = -1;
    std::vector<int> children;
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    bool alive = true;
  };

  explicit WorkingTree(const NormalizedAst& ast) {
    nodes_.reserve(ast.size() + 1);
    for (const AstNode& n : ast.nodes()) {
      Node w;
      w.kind = n.kind;
      w.label = n.label;
      w.parent = n.parent;
      w.children.assign(n.children.begin(), n.children.end());
      w.src = n.id;
      nodes_.push_back(std::move(w));
    }
    vroot_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    if (ast.root() != kNoNode) {
      nodes_[ast.root()].parent = vroot_;
      nodes_[vroot_].children.push_back(ast.root());
    }
  }

  int vroot() const { return vroot_; }
  std::size_t size() const { return nodes_.size(); }
  Node& at(int i) { return nodes_.at(static_cast<std::size_t>(i)); }
  const Node& at(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  std::size_t position(int n) const {
    const auto& ch = at(at(n).parent).children;
    return static_cast<std::size_t>(std::find(ch.begin(), ch.end(), n) - ch.begin());
  }

  int add(NodeKind kind, std::string label, int parent, std::size_t k) {
    auto& ch = at(parent).children;
    if (k > ch.size()) throw InvalidScript("insert position " + std::to_string(k) + " out of range");
    Node w;
    w.kind = kind;
    w.label = std::move(label);
    w.parent = parent;
    nodes_.push_back(std::move(w));
    int id = static_cast<int>(nodes_.size() - 1);
    at(parent).children.insert(at(parent).children.begin() + static_cast<std::ptrdiff_t>(k), id);
    return id;
  }

  void move(int n, int new_parent, std::size_t k) {
    int old_parent = at(n).parent;
    if (old_parent == new_parent) {
      auto& ch = at(new_parent).children;
      std::size_t oldk = position(n);
      if (k > ch.size()) throw InvalidScript("move position " + std::to_string(k) + " out of range");
      ch.insert(ch.begin() + static_cast<std::ptrdiff_t>(k), n);
      if (k < oldk) ++oldk;
      ch.erase(ch.begin() + static_cast<std::ptrdiff_t>(oldk));
      return;
    }
    for (int p = new_parent; p != -1; p = at(p).parent) {
      if (p == n) throw InvalidScript("move would create a cycle");
    }
    auto& old_ch = at(old_parent).children;
    old_ch.erase(old_ch.begin() + static_cast<std::ptrdiff_t>(position(n)));
    auto& ch = at(new_parent).children;
    if (k > ch.size()) throw InvalidScript("move position " + std::to_string(k) + " out of range");
    ch.insert(ch.begin() + static_cast<std::ptrdiff_t>(k), n);
    at(n).parent = new_parent;
  }

  void remove(int n) {
    if (!at(n).children.empty()) throw InvalidScript("delete of a node that still has children");
    auto& ch = at(at(n).parent).children;
    ch.erase(ch.begin() + static_cast<std::ptrdiff_t>(position(n)));
    at(n).alive = false;
    at(n).parent = -1;
  }

  std::vector<int> postorder() const {
    std::vector<int> out;
    std::vector<std::pair<int, std::size_t>> stack{{vroot_, 0}};
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      const auto& ch = at(n).children;
      if (next < ch.size()) {
        int c = ch[next++];
        stack.emplace_back(c, 0);
      } else {
        out.push_back(n);
        stack.pop_back();
      }
    }
    return out;
  }

  NormalizedAst to_ast(const std::string& grammar_id, const std::string& path) const {
    const auto& top = at(vroot_).children;
    if (top.size() > 1) throw InvalidScript("script leaves more than one root");
    std::vector<AstNode> out;
    if (top.empty()) return NormalizedAst(std::move(out), kNoNode, grammar_id, path, {0});
    std::vector<std::pair<int, NodeId>> stack{{top.front(), kNoNode}};
    while (!stack.empty()) {
      auto [w, parent] = stack.back();
      stack.pop_back();
      AstNode n;
      n.id = static_cast<NodeId>(out.size());
      n.kind = at(w).kind;
      n.label = at(w).label;
      n.parent = parent;
      if (parent != kNoNode) out[static_cast<std::size_t>(parent)].children.push_back(n.id);
      out.push_back(std::move(n));
      const auto& ch = at(w).children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.emplace_back(*it, static_cast<NodeId>(out.size() - 1));
    }
    return NormalizedAst(std::move(out), 0, grammar_id, path, {0});
  }

 private:
  std::vector<Node> nodes_;
  int vroot_ = 0;
};

class ScriptGenerator {
 public:
  ScriptGenerator(const NormalizedAst& src, const NormalizedAst& dst, const NodeMapping& mapping)
      : src_(src), dst_(dst), w_(src), dst_to_w_(dst.size(), -1), in_order_(dst.size(), 0) {
    for (auto [s, d] : mapping) {
      if (src.kind(s) != dst.kind(d)) throw Error("mapping pairs nodes of different kinds");
      w_.at(s).dst = d;
      dst_to_w_[d] = s;
    }
  }

  EditScript run() {
    EditScript script;
    script.grammar_id = src_.grammar_id();
    if (dst_.root() != kNoNode) {
      std::deque<NodeId> queue{dst_.root()};
      while (!queue.empty()) {
        NodeId x = queue.front();
        queue.pop_front();
        for (NodeId c : dst_.children(x)) queue.push_back(c);
        visit(x, script);
      }
    }
    for (int w : w_.postorder()) {
      if (w == w_.vroot() || w_.at(w).dst != kNoNode) continue;
      EditAction a;
      a.op = EditOp::kDelete;
      a.src = w_.at(w).src;
      a.kind = w_.at(w).kind;
      script.actions.push_back(std::move(a));
      w_.remove(w);
    }
    std::vector<char> updated(src_.size(), 0);
    for (const auto& a : script.actions) {
      if (a.op == EditOp::kUpdate) updated[a.src] = 1;
    }
    for (int s = 0; s < static_cast<int>(src_.size()); ++s) {
      NodeId d = w_.at(s).dst;
      if (d != kNoNode && !updated[s]) script.mapping.emplace_back(s, d);
    }
    return script;
  }

 private:
  int w_parent_slot(NodeId x) const {
    NodeId y = dst_.parent(x);
    return y == kNoNode ? w_.vroot() : dst_to_w_[y];
  }

  void visit(NodeId x, EditScript& script) {
    NodeId y = dst_.parent(x);
    int z = w_parent_slot(x);
    int w = dst_to_w_[x];
    if (w == -1) {
      std::size_t k = find_pos(x);
      EditAction a;
      a.op = EditOp::kAdd;
      a.dst = x;
      a.dst_parent = y;
      a.position = k;
      a.kind = dst_.kind(x);
      a.label = dst_.label(x);
      script.actions.push_back(a);
      w = w_.add(dst_.kind(x), dst_.label(x), z, k);
      w_.at(w).dst = x;
      dst_to_w_[x] = w;
    } else {
      if (w_.at(w).label != dst_.label(x)) {
        EditAction a;
        a.op = EditOp::kUpdate;
        a.src = w_.at(w).src;
        a.dst = x;
        a.kind = dst_.kind(x);
        a.label = dst_.label(x);
        script.actions.push_back(a);
        w_.at(w).label = dst_.label(x);
      }
      if (w_.at(w).parent != z) {
        std::size_t k = find_pos(x);
        EditAction a;
        a.op = EditOp::kMove;
        a.src = w_.at(w).src;
        a.dst = x;
        a.dst_parent = y;
        a.position = k;
        a.kind = dst_.kind(x);
        script.actions.push_back(a);
        w_.move(w, z, k);
      }
    }
    in_order_[x] = 1;
    align_children(w, x, script);
  }

  std::size_t find_pos(NodeId x) const {
    NodeId y = dst_.parent(x);
    if (y == kNoNode) return 0;
    auto siblings = dst_.children(y);
    for (NodeId c : siblings) {
      if (in_order_[c]) {
        if (c == x) return 0;
        break;
      }
    }
    NodeId v = kNoNode;
    for (NodeId c : siblings) {
      if (c == x) break;
      if (in_order_[c]) v = c;
    }
    if (v == kNoNode) return 0;
    int u = dst_to_w_[v];
    return w_.position(u) + 1;
  }

  void align_children(int w, NodeId x, EditScript& script) {
    for (NodeId c : dst_.children(x)) in_order_[c] = 0;
    std::vector<int> s1;
    for (int c : w_.at(w).children) {
      NodeId d = w_.at(c).dst;
      if (d != kNoNode && dst_.parent(d) == x) s1.push_back(c);
    }
    std::vector<NodeId> s2;
    for (NodeId c : dst_.children(x)) {
      int p = dst_to_w_[c];
      if (p != -1 && w_.at(p).parent == w) s2.push_back(c);
    }
    if (s1.empty() || s2.empty()) return;
    // LCS over partner equality
    std::size_t n = s1.size();
    std::size_t m = s2.size();
    std::vector<std::vector<int>> len(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = m; j-- > 0;) {
        len[i][j] = w_.at(s1[i]).dst == s2[j] ? len[i + 1][j + 1] + 1 : std::max(len[i + 1][j], len[i][j + 1]);
      }
    }
    std::vector<char> in_lcs(n, 0);
    for (std::size_t i = 0, j = 0; i < n && j < m;) {
      if (w_.at(s1[i]).dst == s2[j]) {
        in_lcs[i] = 1;
        in_order_[s2[j]] = 1;
        ++i;
        ++j;
      } else if (len[i + 1][j] >= len[i][j + 1]) {
        ++i;
      } else {
        ++j;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (in_lcs[i]) continue;
      int a = s1[i];
      NodeId b = w_.at(a).dst;
      std::size_t k = find_pos(b);
      EditAction act;
      act.op = EditOp::kMove;
      act.src = w_.at(a).src;
      act.dst = b;
      act.dst_parent = x;
      act.position = k;
      act.kind = dst_.kind(b);
      script.actions.push_back(act);
      w_.move(a, w, k);
      in_order_[b] = 1;
    }
  }

  const NormalizedAst& src_;
  const NormalizedAst& dst_;
  WorkingTree w_;
  std::vector<int> dst_to_w_;
  std::vector<char> in_order_;
};

}  // namespace

std::string_view op_name(EditOp op) {
  switch (op) {
    case EditOp::kUpdate:
      return "UPD";
    case EditOp::kAdd:
      return "ADD";
    case EditOp::kDelete:
      return "DEL";
    case EditOp::kMove:
      return "MOV";
  }
  return "?";
}

NodeMapping match(const NormalizedAst& buggy, const NormalizedAst& patched) {
  return Matcher(buggy, patched).run();
}

EditScript generate_script(const NormalizedAst& buggy, const NormalizedAst& patched, const NodeMapping& mapping) {
  return ScriptGenerator(buggy, patched, mapping).run();
}

EditScript diff(const NormalizedAst& buggy, const NormalizedAst& patched) {
  if (buggy.grammar_id() != patched.grammar_id()) {
    throw GrammarMismatch("cannot diff '" + buggy.grammar_id() + "' against '" + patched.grammar_id() + "'");
  }
  return generate_script(buggy, patched, match(buggy, patched));
}

NormalizedAst apply(const NormalizedAst& buggy, const EditScript& script) {
  WorkingTree w(buggy);
  std::unordered_map<NodeId, int> dst_to_w;
  auto check_src = [&](NodeId s) -> int {
    if (s < 0 || static_cast<std::size_t>(s) >= buggy.size()) {
      throw InvalidScript("action references missing buggy node " + std::to_string(s));
    }
    if (!w.at(s).alive) throw InvalidScript("action references deleted node " + std::to_string(s));
    return s;
  };
  for (auto [s, d] : script.mapping) {
    if (s < 0 || static_cast<std::size_t>(s) >= buggy.size()) {
      throw InvalidScript("mapping references missing buggy node " + std::to_string(s));
    }
    dst_to_w[d] = s;
  }
  for (const auto& a : script.actions) {
    if (a.op == EditOp::kUpdate || a.op == EditOp::kMove) {
      if (a.src < 0 || static_cast<std::size_t>(a.src) >= buggy.size()) {
        throw InvalidScript("action references missing buggy node " + std::to_string(a.src));
      }
      dst_to_w[a.dst] = a.src;
    }
  }
  auto parent_slot = [&](NodeId dst_parent) -> int {
    if (dst_parent == kNoNode) return w.vroot();
    auto it = dst_to_w.find(dst_parent);
    if (it == dst_to_w.end() || !w.at(it->second).alive) {
      throw InvalidScript("action references unknown patched parent " + std::to_string(dst_parent));
    }
    return it->second;
  };
  for (const auto& a : script.actions) {
    switch (a.op) {
      case EditOp::kAdd: {
        int id = w.add(a.kind, a.label, parent_slot(a.dst_parent), a.position);
        w.at(id).dst = a.dst;
        dst_to_w[a.dst] = id;
        break;
      }
      case EditOp::kUpdate:
        w.at(check_src(a.src)).label = a.label;
        break;
      case EditOp::kMove:
        w.move(check_src(a.src), parent_slot(a.dst_parent), a.position);
        break;
      case EditOp::kDelete:
        w.remove(check_src(a.src));
        break;
    }
  }
  return w.to_ast(buggy.grammar_id(), buggy.source_path());
}

ChangedStatements changed_statements(const EditScript& script, const NormalizedAst& buggy,
                                     const NormalizedAst& patched) {
  auto outermost = [](const NormalizedAst& ast, std::vector<NodeId> anchors) {
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    std::vector<NodeId> out;
    for (NodeId a : anchors) {
      bool nested = std::any_of(anchors.begin(), anchors.end(),
                                [&](NodeId other) { return other != a && ast.is_ancestor(other, a); });
      if (!nested) out.push_back(a);
    }
    return out;
  };
  std::vector<NodeId> src;
  std::vector<NodeId> dst;
  for (const auto& a : script.actions) {
    if (a.src != kNoNode && buggy.contains(a.src)) {
      NodeId s = buggy.nearest_statement(a.src);
      if (s != kNoNode) src.push_back(s);
    }
    if (a.dst != kNoNode && patched.contains(a.dst)) {
      NodeId s = patched.nearest_statement(a.dst);
      if (s != kNoNode) dst.push_back(s);
    }
  }
  return {outermost(buggy, std::move(src)), outermost(patched, std::move(dst))};
}

std::string node_path(const NormalizedAst& ast, NodeId id) {
  std::vector<std::size_t> idx;
  for (NodeId n = id; ast.parent(n) != kNoNode; n = ast.parent(n)) idx.push_back(ast.index_in_parent(n));
  if (idx.empty()) return "/";
  std::string out;
  for (auto it = idx.rbegin(); it != idx.rend(); ++it) out += "/" + std::to_string(*it);
  return out;
}

std::string to_text(const EditScript& script, const NormalizedAst& buggy, const NormalizedAst& patched) {
  std::ostringstream out;
  for (const auto& a : script.actions) {
    out << op_name(a.op) << ' ';
    out << (a.src != kNoNode ? node_path(buggy, a.src) : "-") << ' ';
    out << (a.dst != kNoNode ? node_path(patched, a.dst) : "-") << ' ';
    if (a.op == EditOp::kAdd || a.op == EditOp::kMove) {
      out << a.position;
    } else {
      out << '-';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace patchguard
