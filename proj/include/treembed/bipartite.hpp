#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

namespace treembed {

// Hopcroft-Karp on left vertices 0..L-1 and right vertices 0..R-1.
class BipartiteMatcher {
 public:
  BipartiteMatcher(int left, int right)
      : adj_(static_cast<std::size_t>(left)),
        match_left_(static_cast<std::size_t>(left), -1),
        match_right_(static_cast<std::size_t>(right), -1) {}

  void add_edge(int l, int r) { adj_[l].push_back(r); }
  const std::vector<int>& neighbours(int l) const { return adj_[l]; }
  int left_count() const { return static_cast<int>(adj_.size()); }
  int right_count() const { return static_cast<int>(match_right_.size()); }

  // Seeds the matching; ignored if either side is already taken.
  void force(int l, int r) {
    if (match_left_[l] != -1 || match_right_[r] != -1) return;
    match_left_[l] = r;
    match_right_[r] = l;
  }

  int solve() {
    int size = 0;
    for (int m : match_left_) size += m != -1 ? 1 : 0;
    while (bfs()) {
      for (int l = 0; l < left_count(); ++l)
        if (match_left_[l] == -1 && dfs(l)) ++size;
    }
    return size;
  }

  int left_match(int l) const { return match_left_[l]; }
  int right_match(int r) const { return match_right_[r]; }

  // After solve(): left vertices reachable from unmatched left vertices by
  // alternating paths, and the right vertices they see. The reached left set
  // K has |N(K)| = |K| - (unmatched left count), a Hall violator whenever
  // some left vertex is unmatched.
  std::pair<std::vector<int>, std::vector<int>> hall_violator() const {
    std::vector<char> seen_left(adj_.size(), 0);
    std::vector<char> seen_right(match_right_.size(), 0);
    std::vector<int> stack;
    for (int l = 0; l < left_count(); ++l)
      if (match_left_[l] == -1) {
        seen_left[l] = 1;
        stack.push_back(l);
      }
    while (!stack.empty()) {
      const int l = stack.back();
      stack.pop_back();
      for (int r : adj_[l]) {
        if (seen_right[r]) continue;
        seen_right[r] = 1;
        const int next = match_right_[r];
        if (next != -1 && !seen_left[next]) {
          seen_left[next] = 1;
          stack.push_back(next);
        }
      }
    }
    std::pair<std::vector<int>, std::vector<int>> out;
    for (int l = 0; l < left_count(); ++l)
      if (seen_left[l]) out.first.push_back(l);
    for (int r = 0; r < right_count(); ++r)
      if (seen_right[r]) out.second.push_back(r);
    return out;
  }

 private:
  bool bfs() {
    dist_.assign(adj_.size(), kInf);
    std::queue<int> q;
    for (int l = 0; l < left_count(); ++l)
      if (match_left_[l] == -1) {
        dist_[l] = 0;
        q.push(l);
      }
    bool found = false;
    while (!q.empty()) {
      const int l = q.front();
      q.pop();
      for (int r : adj_[l]) {
        const int next = match_right_[r];
        if (next == -1) {
          found = true;
        } else if (dist_[next] == kInf) {
          dist_[next] = dist_[l] + 1;
          q.push(next);
        }
      }
    }
    return found;
  }

  bool dfs(int l) {
    for (int r : adj_[l]) {
      const int next = match_right_[r];
      if (next == -1 || (dist_[next] == dist_[l] + 1 && dfs(next))) {
        match_left_[l] = r;
        match_right_[r] = l;
        return true;
      }
    }
    dist_[l] = kInf;
    return false;
  }

  static constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<std::vector<int>> adj_;
  std::vector<int> match_left_;
  std::vector<int> match_right_;
  std::vector<int> dist_;
};

}  // namespace treembed
