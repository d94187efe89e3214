#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "limescope/datakit.hpp"
#include "limescope/error.hpp"
#include "limescope/rng.hpp"

namespace limescope {

namespace {

constexpr double kEps = 1e-9;

std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - kEps)); }
std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + kEps)); }

void check_ratios(const std::array<double, 3>& r) {
  for (double v : r) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::BadParameter, "split ratios must be positive");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > kEps) fail(ErrorKind::BadParameter, "split ratios must sum to 1");
}

// Dense max-flow (Edmonds-Karp); graphs here have a few dozen nodes.
class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t n) : n_(n), cap_(n * n, 0) {}

  void add(std::size_t u, std::size_t v, long c) { cap_[u * n_ + v] += c; }

  long max_flow(std::size_t s, std::size_t t) {
    long flow = 0;
    std::vector<std::size_t> parent(n_);
    for (;;) {
      std::fill(parent.begin(), parent.end(), n_);
      parent[s] = s;
      std::queue<std::size_t> q;
      q.push(s);
      while (!q.empty() && parent[t] == n_) {
        const auto u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n_; ++v) {
          if (parent[v] == n_ && cap_[u * n_ + v] > 0) {
            parent[v] = u;
            q.push(v);
          }
        }
      }
      if (parent[t] == n_) return flow;
      long push = std::numeric_limits<long>::max();
      for (auto v = t; v != s; v = parent[v]) push = std::min(push, cap_[parent[v] * n_ + v]);
      for (auto v = t; v != s; v = parent[v]) {
        cap_[parent[v] * n_ + v] -= push;
        cap_[v * n_ + parent[v]] += push;
      }
      flow += push;
    }
  }

 private:
  std::size_t n_;
  std::vector<long> cap_;
};

enum Cell : std::uint8_t { kOpen, kUp, kDown };

// Can the open cells complete the row and column deficits?
bool feasible(const std::vector<long>& row_need, const std::array<long, 3>& col_need,
              const std::vector<Cell>& cells) {
  const std::size_t classes = row_need.size();
  long rows = 0;
  for (long r : row_need) {
    if (r < 0) return false;
    rows += r;
  }
  long cols = 0;
  for (long c : col_need) {
    if (c < 0) return false;
    cols += c;
  }
  if (rows != cols) return false;
  const std::size_t source = classes + 3;
  const std::size_t sink = classes + 4;
  FlowNetwork net(classes + 5);
  for (std::size_t c = 0; c < classes; ++c) {
    net.add(source, c, row_need[c]);
    for (std::size_t k = 0; k < 3; ++k) {
      if (cells[c * 3 + k] == kOpen) net.add(c, classes + k, 1);
    }
  }
  for (std::size_t k = 0; k < 3; ++k) net.add(classes + k, sink, col_need[k]);
  return net.max_flow(source, sink) == rows;
}

// Per-class largest remainder with train > val > test priority on ties.
std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double x = static_cast<double>(n) * ratios[k];
    counts[k] = floor_count(x);
    frac[k] = x - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return frac[a] > frac[b] + kEps; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 3]];
  return counts;
}

DatasetManifest empty_like(const DatasetManifest& m) {
  DatasetManifest out;
  out.classes = m.classes;
  out.root = m.root;
  return out;
}

}  // namespace

std::array<std::size_t, 3> split_totals(std::size_t n, const std::array<double, 3>& ratios) {
  check_ratios(ratios);
  const double held_share = ratios[1] + ratios[2];
  const std::size_t held = std::min(n, ceil_count(static_cast<double>(n) * held_share));
  const std::size_t test = std::min(held, ceil_count(static_cast<double>(held) * ratios[2] / held_share));
  return {n - held, held - test, test};
}

std::vector<std::array<std::size_t, 3>> stratified_counts(const std::vector<std::size_t>& class_sizes,
                                                          const std::array<double, 3>& ratios) {
  const std::size_t classes = class_sizes.size();
  const std::size_t n = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
  const auto totals = split_totals(n, ratios);

  std::vector<std::array<std::size_t, 3>> counts(classes);
  std::vector<double> frac(classes * 3, 0.0);
  std::vector<Cell> cells(classes * 3, kDown);
  std::vector<long> row_need(classes, 0);
  std::array<long, 3> col_need{};
  for (std::size_t k = 0; k < 3; ++k) col_need[k] = static_cast<long>(totals[k]);
  for (std::size_t c = 0; c < classes; ++c) {
    row_need[c] = static_cast<long>(class_sizes[c]);
    for (std::size_t k = 0; k < 3; ++k) {
      const double x = static_cast<double>(class_sizes[c]) * ratios[k];
      counts[c][k] = floor_count(x);
      frac[c * 3 + k] = x - static_cast<double>(counts[c][k]);
      if (frac[c * 3 + k] > kEps) cells[c * 3 + k] = kOpen;
      row_need[c] -= static_cast<long>(counts[c][k]);
      col_need[k] -= static_cast<long>(counts[c][k]);
    }
  }

  if (!feasible(row_need, col_need, cells)) {
    for (std::size_t c = 0; c < classes; ++c) counts[c] = largest_remainder(class_sizes[c], ratios);
    return counts;
  }

  // Fix cells one at a time in preference order, keeping the remainder completable.
  std::vector<std::size_t> order(classes * 3);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(frac[a] - frac[b]) > kEps) return frac[a] > frac[b];
    return a / 3 < b / 3;
  });
  for (std::size_t idx : order) {
    if (cells[idx] != kOpen) continue;
    const std::size_t c = idx / 3;
    const std::size_t k = idx % 3;
    cells[idx] = kUp;
    --row_need[c];
    --col_need[k];
    if (!feasible(row_need, col_need, cells)) {
      cells[idx] = kDown;
      ++row_need[c];
      ++col_need[k];
    }
  }
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (cells[c * 3 + k] == kUp) ++counts[c][k];
    }
  }
  return counts;
}

SplitResult split(const DatasetManifest& m, const SplitConfig& cfg) {
  check_ratios(cfg.ratios);
  if (m.items.size() < 3) fail(ErrorKind::EmptyManifest, "split needs at least 3 items");

  SplitResult result{empty_like(m), empty_like(m), empty_like(m), {}};
  std::array<DatasetManifest*, 3> buckets{&result.train, &result.val, &result.test};

  if (cfg.strategy == SplitStrategy::Random) {
    std::vector<std::size_t> order(m.items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed);
    rng.shuffle(order);
    const auto totals = split_totals(order.size(), cfg.ratios);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < totals[k]; ++i) buckets[k]->items.push_back(m.items[order[pos++]]);
    }
    return result;
  }

  std::vector<std::vector<std::size_t>> members(m.classes.size());
  for (std::size_t i = 0; i < m.items.size(); ++i) {
    const int c = m.class_index(m.items[i].label);
    if (c < 0) fail(ErrorKind::BadParameter, "item '" + m.items[i].path + "' has undeclared label");
    members[static_cast<std::size_t>(c)].push_back(i);
  }

  std::vector<std::size_t> eligible;
  std::vector<std::size_t> sizes;
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].empty()) continue;
    if (members[c].size() < 3) {
      result.warnings.push_back("class '" + m.classes[c] + "' has " + std::to_string(members[c].size()) +
                                " item(s); all assigned to train");
      continue;
    }
    eligible.push_back(c);
    sizes.push_back(members[c].size());
  }
  const auto counts = stratified_counts(sizes, cfg.ratios);

  std::size_t e = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto idx = members[c];
    if (idx.empty()) continue;
    if (e >= eligible.size() || eligible[e] != c) {
      for (std::size_t i : idx) result.train.items.push_back(m.items[i]);
      continue;
    }
    Rng rng(derive_seed(cfg.seed, c));
    rng.shuffle(idx);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < counts[e][k]; ++i) buckets[k]->items.push_back(m.items[idx[pos++]]);
    }
    ++e;
  }
  return result;
}

}  // namespace limescope
