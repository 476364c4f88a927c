#include "pattern_fixtures.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "bronchograph/label_taxonomy.hpp"

namespace fixtures {

using namespace bronchograph;

namespace {

std::string lobe_for(const std::string& segment) {
  const auto c = parse_class_name(segment);
  return std::string(lobe_names()[c->lobe]);
}

// Root -> lobe bronchus; groups of size > 1 share an extra lobe-labeled trunk.
Nodes grouped_lobe(const std::string& lobe, const std::vector<std::vector<std::string>>& groups) {
  Nodes n{{-1, ""}, {0, lobe}};
  for (const auto& g : groups) {
    int parent = 1;
    if (g.size() > 1) {
      n.push_back({1, lobe});
      parent = static_cast<int>(n.size()) - 1;
    }
    for (const auto& s : g) n.push_back({parent, s});
  }
  return n;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  return out;
}

}  // namespace

std::vector<LobeRow> lobe_rows() {
  auto row = [](int lobe, std::vector<std::vector<std::string>> groups, std::string expected, std::string furc) {
    return LobeRow{lobe, grouped_lobe(std::string(lobe_names()[lobe]), groups), std::move(expected), std::move(furc)};
  };
  return {
      row(LUB, {{"LB1+2", "LB3"}, {"LB4", "LB5"}}, "B1+2+3,B4+5", "Bi"),
      row(LUB, {{"LB1+2", "LB3"}, {"LB4"}, {"LB5"}}, "B1+2+3,B4,B5", "Tri"),
      row(LUB, {{"LB1+2"}, {"LB3"}, {"LB4", "LB5"}}, "B1+2,B3,B4+5", "Tri"),
      row(LLB, {{"LB6"}, {"LB8", "LB9"}, {"LB10"}}, "B6,B8+9,B10", "Tri"),
      row(LLB, {{"LB6"}, {"LB8"}, {"LB9", "LB10"}}, "B6,B8,B9+10", "Tri"),
      row(LLB, {{"LB6"}, {"LB8"}, {"LB9"}, {"LB10"}}, "B6,B8,B9,B10", "Quadri"),
      row(RUB, {{"RB1", "RB2"}, {"RB3"}}, "B1+2,B3", "Bi"),
      row(RUB, {{"RB1", "RB3"}, {"RB2"}}, "B1+3,B2", "Bi"),
      row(RUB, {{"RB1"}, {"RB2", "RB3"}}, "B1,B2+3", "Bi"),
      row(RUB, {{"RB1"}, {"RB2"}, {"RB3"}}, "B1,B2,B3", "Tri"),
      row(RMB, {{"RB4"}, {"RB5"}}, "B4,B5", "Bi"),
      row(RLB, {{"RB6"}, {"RB8", "RB9"}, {"RB7", "RB10"}}, "B6,B8+9,B7+10", "Tri"),
      row(RLB, {{"RB6"}, {"RB7"}, {"RB8", "RB9"}, {"RB10"}}, "B6,B7,B8+9,B10", "Quadri"),
      row(RLB, {{"RB6"}, {"RB7"}, {"RB8"}, {"RB9", "RB10"}}, "B6,B7,B8,B9+10", "Quadri"),
      row(RLB, {{"RB6"}, {"RB7"}, {"RB8"}, {"RB9"}, {"RB10"}}, "B6,B7,B8,B9,B10", "Quint"),
  };
}

Nodes three_subsegments(const std::string& seg, bool one_stem, const std::string& co) {
  Nodes n{{-1, ""}, {0, lobe_for(seg)}};
  int base = 1;
  if (one_stem) {
    n.push_back({1, seg + "-stem"});
    base = 2;
  }
  auto add = [&](int parent, const std::string& label) {
    n.push_back({parent, label});
    return static_cast<int>(n.size()) - 1;
  };
  if (co == "tri") {
    for (const char* c : {"a", "b", "c"}) add(base, seg + c);
    return n;
  }
  const std::string pair{co[0], '+', co[1]};
  const char lone = co == "ab" ? 'c' : (co == "bc" ? 'a' : 'b');
  const int ct = add(base, seg + pair);
  add(ct, seg + co[0]);
  add(ct, seg + co[1]);
  add(base, seg + lone);
  return n;
}

Nodes two_subsegments(const std::string& seg, bool one_stem) {
  Nodes n{{-1, ""}, {0, lobe_for(seg)}};
  int base = 1;
  if (one_stem) {
    n.push_back({1, seg + "-stem"});
    base = 2;
  }
  n.push_back({base, seg + "a"});
  n.push_back({base, seg + "b"});
  return n;
}

Nodes lb12(bool one_stem, const std::string& co) { return three_subsegments("LB1+2", one_stem, co); }

Nodes lingula_b4a() {
  return {{-1, ""}, {0, "LUB"}, {1, "LB4a"}, {1, "LUB"}, {3, "LB4b"}, {3, "LB5-stem"}, {5, "LB5a"}, {5, "LB5b"}};
}

std::vector<SubRow> subsegment_rows() {
  std::vector<SubRow> rows;
  auto three = [&](const std::string& seg, const std::string& b, bool one, const std::string& co, const std::string& expected) {
    (void)b;
    rows.push_back({seg, one ? 1 : 2, three_subsegments(seg, one, co), expected, co == "tri" ? "Tri" : "Bi"});
  };
  auto two = [&](const std::string& seg, bool one, const std::string& expected) {
    rows.push_back({seg, one ? 1 : 2, two_subsegments(seg, one), expected, one ? "Mono" : "Bi"});
  };
  // Three-subsegment segments: every printed 1-stem and 2-stem row.
  for (const auto& [seg, b] : std::vector<std::pair<std::string, std::string>>{
           {"LB1+2", "B1+2"}, {"LB3", "B3"}, {"LB6", "B6"}, {"LB10", "B10"}, {"RB6", "B6"}, {"RB10", "B10"}}) {
    three(seg, b, true, "ab", b + "a+b," + b + "c");
    three(seg, b, true, "bc", b + "a," + b + "b+c");
    three(seg, b, true, "ac", b + "a+c," + b + "b");
    three(seg, b, true, "tri", b + "a," + b + "b," + b + "c");
  }
  three("LB1+2", "", false, "ab", "B1+2a+b,B1+2c");
  three("LB1+2", "", false, "bc", "B1+2a,B1+2b+c");
  three("LB3", "", false, "ab", "B3a+b,B3c");
  three("LB3", "", false, "bc", "B3a,B3b+c");
  three("LB6", "", false, "ac", "B6b,B6a+c");
  three("LB10", "", false, "bc", "B10a,B10b+c");
  three("LB10", "", false, "ac", "B10b,B10a+c");
  three("RB6", "", false, "bc", "B6a,B6b+c");
  three("RB6", "", false, "ac", "B6b,B6a+c");
  three("RB10", "", false, "bc", "B10a,B10b+c");
  three("RB10", "", false, "ac", "B10b,B10a+c");
  // Two-subsegment segments.
  for (const auto& [seg, b] : std::vector<std::pair<std::string, std::string>>{
           {"LB4", "B4"}, {"LB5", "B5"}, {"LB8", "B8"}, {"LB9", "B9"}, {"RB1", "B1"}, {"RB2", "B2"}, {"RB3", "B3"},
           {"RB4", "B4"}, {"RB5", "B5"}, {"RB7", "B7"}, {"RB8", "B8"}, {"RB9", "B9"}}) {
    two(seg, true, b + "a+b");
    two(seg, false, b + "a," + b + "b");
  }
  return rows;
}

Nodes random_block_tree(std::mt19937_64& rng) {
  static const std::vector<std::vector<std::string>> blocks = {
      {"RB1", "RB2", "RB3"}, {"LB1+2", "LB3"}, {"RB4", "RB5"}, {"LB4", "LB5"}, {"RB6", "RB7", "RB8"}};
  const auto& segs = blocks[std::uniform_int_distribution<std::size_t>(0, blocks.size() - 1)(rng)];
  const std::string lobe = lobe_for(segs.front());

  struct Group {
    std::string label;
    std::vector<int> kids;
    std::string segment;  // set while the group stays inside one segment
    std::string codes;    // sorted basic codes covered, e.g. "ab"
  };
  std::vector<Group> groups;
  std::vector<int> open;
  for (const auto& s : segs) {
    const int n = subsegment_count(parse_class_name(s)->segment);
    for (int k = 0; k < n; ++k) {
      const std::string c(1, static_cast<char>('a' + k));
      groups.push_back({s + c, {}, s, c});
      open.push_back(static_cast<int>(groups.size()) - 1);
    }
  }
  std::uniform_real_distribution<double> u(0, 1);
  while (open.size() > 1 && u(rng) < 0.75) {
    std::shuffle(open.begin(), open.end(), rng);
    const int a = open.back();
    open.pop_back();
    const int b = open.back();
    open.pop_back();
    Group g;
    g.kids = {a, b};
    g.label = lobe;
    if (!groups[a].segment.empty() && groups[a].segment == groups[b].segment) {
      g.segment = groups[a].segment;
      g.codes = groups[a].codes + groups[b].codes;
      std::sort(g.codes.begin(), g.codes.end());
      const int n = subsegment_count(parse_class_name(g.segment)->segment);
      if (static_cast<int>(g.codes.size()) == n) {
        g.label = g.segment + "-stem";
      } else if (g.codes.size() == 2 && u(rng) < 0.8) {
        g.label = g.segment + g.codes[0] + "+" + g.codes[1];
      }
    }
    groups.push_back(g);
    open.push_back(static_cast<int>(groups.size()) - 1);
  }
  Nodes out{{-1, ""}, {0, lobe}};
  std::vector<std::pair<int, int>> stack;
  for (int g : open) stack.push_back({g, 1});
  while (!stack.empty()) {
    const auto [g, parent] = stack.back();
    stack.pop_back();
    out.push_back({parent, groups[g].label});
    const int id = static_cast<int>(out.size()) - 1;
    for (int k : groups[g].kids) stack.push_back({k, id});
  }
  return out;
}

Nodes shuffled(const Nodes& nodes, std::mt19937_64& rng) {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> new_id(n, -1);
  std::vector<int> order;
  std::vector<int> ready{0};
  while (!ready.empty()) {
    const auto pick = std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng);
    const int v = ready[pick];
    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));
    new_id[v] = static_cast<int>(order.size());
    order.push_back(v);
    for (int c = 0; c < n; ++c)
      if (nodes[c].first == v) ready.push_back(c);
  }
  Nodes out;
  for (int v : order) out.push_back({nodes[v].first < 0 ? -1 : new_id[nodes[v].first], nodes[v].second});
  return out;
}

bool same_partition(const std::string& a, const std::string& b) {
  auto x = split(a, ','), y = split(b, ',');
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x == y;
}

}  // namespace fixtures
