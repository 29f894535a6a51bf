#pragma once

#include <numeric>
#include <queue>
#include <vector>

namespace treembed {

// Edmonds' blossom algorithm on an explicit adjacency list. Starts from a
// given matching and only ever augments, so vertices matched on entry stay
// matched.
class GeneralMatcher {
 public:
  explicit GeneralMatcher(std::vector<std::vector<int>> adj)
      : adj_(std::move(adj)), mate_(adj_.size(), -1) {}

  void set_mate(int u, int v) {
    mate_[u] = v;
    mate_[v] = u;
  }
  int mate(int v) const { return mate_[v]; }
  const std::vector<int>& mates() const { return mate_; }

  // Tries to augment from every free vertex in `roots` (in order).
  int augment_from(const std::vector<int>& roots) {
    int gained = 0;
    for (int r : roots)
      if (mate_[r] == -1 && find_path(r)) ++gained;
    return gained;
  }

  int maximize() {
    std::vector<int> all(adj_.size());
    std::iota(all.begin(), all.end(), 0);
    return augment_from(all);
  }

 private:
  int lca(int a, int b) {
    std::vector<char> used(adj_.size(), 0);
    for (;;) {
      a = base_[a];
      used[a] = 1;
      if (mate_[a] == -1) break;
      a = parent_[mate_[a]];
    }
    for (;;) {
      b = base_[b];
      if (used[b]) return b;
      b = parent_[mate_[b]];
    }
  }

  void mark_path(int v, int b, int child) {
    while (base_[v] != b) {
      blossom_[base_[v]] = blossom_[base_[mate_[v]]] = 1;
      parent_[v] = child;
      child = mate_[v];
      v = parent_[mate_[v]];
    }
  }

  bool find_path(int root) {
    const std::size_t n = adj_.size();
    used_.assign(n, 0);
    parent_.assign(n, -1);
    base_.resize(n);
    std::iota(base_.begin(), base_.end(), 0);
    used_[root] = 1;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int to : adj_[v]) {
        if (base_[v] == base_[to] || mate_[v] == to) continue;
        if (to == root || (mate_[to] != -1 && parent_[mate_[to]] != -1)) {
          const int cur = lca(v, to);
          blossom_.assign(n, 0);
          mark_path(v, cur, to);
          mark_path(to, cur, v);
          for (std::size_t i = 0; i < n; ++i) {
            if (!blossom_[base_[i]]) continue;
            base_[i] = cur;
            if (!used_[i]) {
              used_[i] = 1;
              q.push(static_cast<int>(i));
            }
          }
        } else if (parent_[to] == -1) {
          parent_[to] = v;
          if (mate_[to] == -1) {
            for (int u = to; u != -1;) {
              const int pv = parent_[u];
              const int ppv = mate_[pv];
              mate_[u] = pv;
              mate_[pv] = u;
              u = ppv;
            }
            return true;
          }
          used_[mate_[to]] = 1;
          q.push(mate_[to]);
        }
      }
    }
    return false;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<int> mate_;
  std::vector<int> parent_, base_;
  std::vector<char> used_, blossom_;
};

}  // namespace treembed
