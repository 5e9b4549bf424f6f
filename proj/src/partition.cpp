#include "netdec/partition.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "netdec/errors.hpp"

namespace netdec {

namespace {

std::vector<int> bfs_dist(const std::vector<std::vector<int>>& adj, const std::vector<int>& src) {
  std::vector<int> dist(adj.size(), std::numeric_limits<int>::max());
  std::queue<int> q;
  for (int s : src) {
    dist[s] = 0;
    q.push(s);
  }
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (dist[v] > dist[u] + 1) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  return dist;
}

// farthest bus from the sources; unreachable buses count as farthest, ties to lowest id
int farthest(const NetworkCase& c, const std::vector<int>& dist, const std::vector<int>& taken) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(dist.size()); ++i) {
    if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
    if (best < 0 || dist[i] > dist[best] ||
        (dist[i] == dist[best] && c.buses[i].id < c.buses[best].id))
      best = i;
  }
  return best;
}

}  // namespace

int Partition::cut_index(int branch) const {
  auto it = std::lower_bound(cuts.begin(), cuts.end(), branch,
                             [](const CutLine& cl, int b) { return cl.branch < b; });
  return it != cuts.end() && it->branch == branch ? static_cast<int>(it - cuts.begin()) : -1;
}

Partition compute_cuts(const NetworkCase& c, const std::vector<int>& assignment) {
  const int n = static_cast<int>(c.buses.size());
  if (static_cast<int>(assignment.size()) != n)
    throw DimensionMismatch("assignment covers " + std::to_string(assignment.size()) + " of " +
                            std::to_string(n) + " buses");
  Partition p;
  p.num_parts = n == 0 ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
  for (int a : assignment)
    if (a < 0) throw InvalidK("negative part index in assignment");
  p.part_of = assignment;
  p.part_buses.assign(p.num_parts, {});
  p.part_lines.assign(p.num_parts, {});
  p.part_cuts.assign(p.num_parts, {});
  for (int i = 0; i < n; ++i) p.part_buses[assignment[i]].push_back(i);
  for (int k = 0; k < p.num_parts; ++k)
    if (p.part_buses[k].empty())
      throw InvalidK("part " + std::to_string(k + 1) + " has no buses");

  for (int l = 0; l < static_cast<int>(c.branches.size()); ++l) {
    const Branch& br = c.branches[l];
    if (!br.in_service) continue;
    int f = c.bus_index(br.from_bus), t = c.bus_index(br.to_bus);
    int pf = assignment[f], pt = assignment[t];
    p.part_lines[pf].push_back(l);
    if (pt != pf) {
      p.part_lines[pt].push_back(l);
      p.part_cuts[pf].push_back(static_cast<int>(p.cuts.size()));
      p.part_cuts[pt].push_back(static_cast<int>(p.cuts.size()));
      p.cuts.push_back({l, pf, pt});
    }
  }
  return p;
}

Partition partition_greedy(const NetworkCase& c, int K, int seed) {
  const int n = static_cast<int>(c.buses.size());
  if (K < 1 || K > n)
    throw InvalidK("number of parts must be in [1, " + std::to_string(n) + "], got " +
                   std::to_string(K));
  auto adj = bus_adjacency(c);
  for (auto& a : adj)
    std::sort(a.begin(), a.end(), [&](int x, int y) { return c.buses[x].id < c.buses[y].id; });

  int start = static_cast<int>(((seed % n) + n) % n);
  std::vector<int> roots;
  roots.push_back(farthest(c, bfs_dist(adj, {start}), roots));
  while (static_cast<int>(roots.size()) < K) roots.push_back(farthest(c, bfs_dist(adj, roots), roots));

  std::vector<int> assign(n, -1), size(K, 1);
  for (int k = 0; k < K; ++k) assign[roots[k]] = k;
  int unassigned = n - K;
  std::vector<std::string> diag;
  while (unassigned > 0) {
    std::vector<int> order(K);
    for (int k = 0; k < K; ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return size[a] != size[b] ? size[a] < size[b] : a < b; });
    bool grew = false;
    for (int k : order) {
      int pick = -1;
      for (int u = 0; u < n; ++u) {
        if (assign[u] != k) continue;
        for (int v : adj[u])
          if (assign[v] < 0 && (pick < 0 || c.buses[v].id < c.buses[pick].id)) pick = v;
      }
      if (pick >= 0) {
        assign[pick] = k;
        ++size[k];
        --unassigned;
        grew = true;
        break;
      }
    }
    if (!grew) {
      // leftover buses unreachable from every part
      int k = order.front();
      for (int u = 0; u < n; ++u)
        if (assign[u] < 0) {
          assign[u] = k;
          ++size[k];
        }
      unassigned = 0;
      diag.push_back("part " + std::to_string(k + 1) + " absorbed buses unreachable from any root");
    }
  }

  Partition p = compute_cuts(c, assign);
  p.diagnostics = std::move(diag);
  int lo = n / K, hi = (n + K - 1) / K;
  auto [mn, mx] = std::minmax_element(size.begin(), size.end());
  if (*mx - *mn > hi - lo + 1)
    p.diagnostics.push_back("part sizes range from " + std::to_string(*mn) + " to " +
                            std::to_string(*mx));
  return p;
}

Partition load_partition(const std::string& document, const NetworkCase& c) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("partition document is not valid JSON: ") + e.what());
  }
  std::map<int, int> parts;  // bus id -> 1-based part
  auto put = [&](int bus, int part) {
    if (c.bus_index(bus) < 0) throw UnknownBus(bus);
    if (part < 1) throw InvalidK("part indices start at 1, got " + std::to_string(part));
    if (!parts.emplace(bus, part).second)
      throw ConfigError("bus " + std::to_string(bus) + " assigned twice");
  };
  int declared = -1;
  try {
    if (j.is_object() && j.contains("assignment")) {
      for (const auto& rec : j.at("assignment")) put(rec.at("bus").get<int>(), rec.at("part").get<int>());
      if (j.contains("num_parts")) declared = j.at("num_parts").get<int>();
    } else if (j.is_object()) {
      for (const auto& [key, val] : j.items()) {
        std::size_t used = 0;
        int bus = 0;
        try {
          bus = std::stoi(key, &used);
        } catch (const std::exception&) {
        }
        if (used == 0 || used != key.size()) throw ConfigError("partition key '" + key + "' is not a bus id");
        put(bus, val.get<int>());
      }
    } else {
      throw ConfigError("partition document must be a JSON object");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed partition document: ") + e.what());
  }
  std::vector<int> assign(c.buses.size());
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    auto it = parts.find(c.buses[i].id);
    if (it == parts.end()) throw MissingBus(c.buses[i].id);
    assign[i] = it->second - 1;
  }
  Partition p = compute_cuts(c, assign);
  if (declared >= 0 && declared != p.num_parts)
    throw InvalidK("document declares " + std::to_string(declared) + " parts but uses " +
                   std::to_string(p.num_parts));
  return p;
}

Partition load_partition_file(const std::string& path, const NetworkCase& c) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open partition file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_partition(ss.str(), c);
}

std::string partition_to_json(const Partition& p, const NetworkCase& c) {
  nlohmann::ordered_json j;
  j["num_parts"] = p.num_parts;
  j["assignment"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.buses.size(); ++i)
    j["assignment"].push_back({{"bus", c.buses[i].id}, {"part", p.part_of[i] + 1}});
  return j.dump(2) + "\n";
}

PartitionStats partition_stats(const Partition& p) {
  PartitionStats s;
  for (const auto& b : p.part_buses) s.sizes.push_back(static_cast<int>(b.size()));
  s.cut_count = static_cast<int>(p.cuts.size());
  s.coupling_dimension = 4 * s.cut_count;
  return s;
}

int default_num_parts(const NetworkCase& c) {
  return std::max<int>(1, (static_cast<int>(c.buses.size()) + 9) / 10);
}

}  // namespace netdec
