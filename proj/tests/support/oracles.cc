#include "oracles.h"

#include <algorithm>
#include <functional>

namespace oracle {

namespace {

int type_number(const std::string& production) {
  if (production == "TInt") return 0;
  if (production == "TFloat") return 1;
  if (production == "TChar") return 2;
  if (production == "TBool") return 3;
  return -1;
}

struct Walker {
  std::vector<std::set<std::pair<int, int>>> scopes{{}};
  std::vector<Step> steps;

  std::set<std::pair<int, int>> visible() const {
    std::set<std::pair<int, int>> out;
    for (const auto& s : scopes) out.insert(s.begin(), s.end());
    return out;
  }

  int type_of(int var) const {
    std::set<int> ts;
    for (const auto& [v, t] : visible()) {
      if (v == var) ts.insert(t);
    }
    return ts.size() == 1 ? *ts.begin() : -1;
  }

  void record(const nam::AstTree& t, const std::vector<int>& path, bool use, int expected) {
    steps.push_back({t.production, path, visible(), use, expected});
  }

  void node(const nam::AstTree& t, std::vector<int> path, bool use, int expected) {
    record(t, path, use, expected);
    auto child = [&](std::size_t i, bool u, int e) {
      auto p = path;
      p.push_back(static_cast<int>(i));
      node(t.children[i], p, u, e);
    };
    const std::string& p = t.production;
    if (p == "Decl") {
      child(0, false, -1);
      child(1, false, -1);
      int v = var_number(t.children[1].production);
      int ty = type_number(t.children[0].production);
      if (v >= 0 && ty >= 0) scopes.back().insert({v, ty});
    } else if (p == "Proc") {
      scopes.emplace_back();
      child(0, false, -1);
      child(1, false, -1);
      scopes.pop_back();
    } else if (p == "Assign" || p == "Less" || p == "Equal") {
      child(0, true, -1);
      child(1, false, type_of(var_number(t.children[0].production)));
    } else if (p == "Incr") {
      child(0, true, -1);
    } else if (p == "Add" || p == "Sub" || p == "Mul") {
      child(0, false, expected);
      child(1, false, expected);
    } else if (p == "Use") {
      child(0, true, expected);
    } else {
      for (std::size_t i = 0; i < t.children.size(); ++i) child(i, false, -1);
    }
  }
};

}  // namespace

int var_number(const std::string& production) {
  if (production.size() < 4 || production.compare(0, 3, "Var") != 0) return -1;
  return std::stoi(production.substr(3));
}

std::vector<Step> walk_minic(const nam::AstTree& tree) {
  Walker w;
  w.node(tree, {}, false, -1);
  return std::move(w.steps);
}

std::vector<std::vector<int>> minic_violations(const nam::AstTree& tree, nam::ConstraintId c) {
  std::vector<std::vector<int>> out;
  for (const auto& s : walk_minic(tree)) {
    int v = var_number(s.production);
    if (v < 0 || !s.use) continue;
    bool bad;
    if (c == nam::ConstraintId::DeclaredVariable) {
      bad = std::none_of(s.visible.begin(), s.visible.end(),
                         [v](const auto& b) { return b.first == v; });
    } else {
      bad = s.expected >= 0 && !s.visible.count({v, s.expected});
    }
    if (bad) out.push_back(s.path);
  }
  return out;
}

std::vector<const nam::AstTree*> leaves(const nam::AstTree& tree) {
  std::vector<const nam::AstTree*> out;
  std::function<void(const nam::AstTree&)> go = [&](const nam::AstTree& t) {
    if (t.production == "Zero" || t.production == "One") out.push_back(&t);
    for (const auto& c : t.children) go(c);
  };
  go(tree);
  return out;
}

}  // namespace oracle
