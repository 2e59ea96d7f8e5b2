#include "topseg/homology.hpp"

#include "topseg/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace topseg {

std::vector<PersistencePair> PersistenceDiagram::in_dim(int dim) const {
  std::vector<PersistencePair> out;
  for (const auto& p : pairs) {
    if (p.dim == dim) out.push_back(p);
  }
  return out;
}

void PersistenceDiagram::sort() {
  std::sort(pairs.begin(), pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  });
}

void write_diagram(std::ostream& out, const PersistenceDiagram& diagram) {
  const auto old = out.precision(17);
  for (const auto& p : diagram.pairs) out << p.dim << ' ' << p.birth << ' ' << p.death << '\n';
  out.precision(old);
}

PersistenceDiagram read_diagram(std::istream& in) {
  PersistenceDiagram d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    PersistencePair p;
    if (!(ls >> p.dim >> p.birth >> p.death) || (p.dim != 0 && p.dim != 1)) {
      throw FormatError("bad diagram line: " + line);
    }
    d.pairs.push_back(p);
    d.clip_radius = std::max(d.clip_radius, p.death);
  }
  return d;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

BandedDistances::BandedDistances(const PointCloudView& cloud, std::size_t width)
    : n_(cloud.n), width_(width) {
  const std::size_t stride = 2 * width_ + 1;
  values_.assign(n_ * stride, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n_; ++i) {
    const auto pi = cloud.point(i);
    const std::size_t last = std::min(n_ - 1, i + width_);
    values_[i * stride + width_] = 0.0;
    for (std::size_t j = i + 1; j <= last; ++j) {
      const double d = euclidean_distance(pi, cloud.point(j));
      values_[i * stride + width_ + (j - i)] = d;
      values_[j * stride + width_ - (j - i)] = d;
    }
  }
  order_.resize(n_ * 2 * width_);
  order_count_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i > width_ ? i - width_ : 0;
    const std::size_t hi = std::min(n_ - 1, i + width_);
    const double* r = row(i) + width_ - i;
    std::uint32_t* out = order_.data() + i * 2 * width_;
    std::size_t m = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) out[m++] = static_cast<std::uint32_t>(j);
    }
    std::sort(out, out + m, [r](std::uint32_t a, std::uint32_t b) { return r[a] < r[b] || (r[a] == r[b] && a < b); });
    order_count_[i] = static_cast<std::uint32_t>(m);
  }
}

std::size_t default_knn_k(std::size_t n) {
  if (n < 2) return 0;
  auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (k * k < n) ++k;
  while (k > 1 && (k - 1) * (k - 1) >= n) --k;
  return std::min(k, n - 1);
}

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw DegenerateWindowError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

namespace {

// Stable LSD radix sort on the bit pattern of the (non-negative) length.
// Edges arrive in (i, j) order, so the result is ordered by (length, i, j).
void sort_edges(std::vector<Edge>& edges) {
  constexpr int kBits = 11;
  constexpr std::size_t kBuckets = std::size_t{1} << kBits;
  std::vector<Edge> tmp(edges.size());
  std::vector<std::uint64_t> keys(edges.size());
  std::vector<std::uint64_t> tmp_keys(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) keys[e] = std::bit_cast<std::uint64_t>(edges[e].length + 0.0);
  std::vector<std::size_t> count(kBuckets);
  for (int shift = 0; shift < 64; shift += kBits) {
    std::fill(count.begin(), count.end(), 0);
    for (const std::uint64_t key : keys) ++count[(key >> shift) & (kBuckets - 1)];
    if (count[(keys.empty() ? 0 : keys[0] >> shift) & (kBuckets - 1)] == keys.size()) continue;
    std::size_t sum = 0;
    for (auto& c : count) {
      const std::size_t here = c;
      c = sum;
      sum += here;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::size_t slot = count[(keys[e] >> shift) & (kBuckets - 1)]++;
      tmp[slot] = edges[e];
      tmp_keys[slot] = keys[e];
    }
    edges.swap(tmp);
    keys.swap(tmp_keys);
  }
}

// quantile_linear over edge lengths already in ascending order.
double quantile_of_sorted(const std::vector<Edge>& edges, double q) {
  const double h = static_cast<double>(edges.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= edges.size()) return edges.back().length;
  return edges[lo].length + (h - static_cast<double>(lo)) * (edges[lo + 1].length - edges[lo].length);
}

}  // namespace

SparseGraph build_sparse_edges(const BandedDistances& distances, std::size_t first, std::size_t n,
                               const SparsifyOptions& options) {
  if (n < 2) throw DegenerateWindowError("sparse Rips graph needs at least two points");
  if (first + n > distances.size() || (n > 1 && distances.width() < n - 1)) {
    throw ConfigError("window exceeds the distance band");
  }
  if (!(options.quantile > 0.0 && options.quantile <= 1.0)) {
    throw ConfigError("clip quantile must lie in (0, 1]");
  }
  const std::size_t k = std::min(options.knn_k.value_or(default_knn_k(n)), n - 1);
  if (k == 0) throw ConfigError("knn_k must be positive");

  // Directed k-NN lists come from each point's precomputed neighbour order,
  // skipping points outside the window. The (distance, index) order makes
  // them unique under ties. The union is marked in an upper-triangular bitset.
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> marked(n * words, 0);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t taken = 0;
    for (const std::uint32_t abs : distances.nearest(first + p)) {
      if (abs < first || abs >= first + n) continue;
      const std::size_t q = abs - first;
      const std::size_t a = std::min(p, q);
      const std::size_t b = std::max(p, q);
      marked[a * words + b / 64] |= std::uint64_t{1} << (b % 64);
      if (++taken == k) break;
    }
  }

  SparseGraph g;
  g.n = n;
  g.knn_k = k;
  g.edges.reserve(n * k);
  for (std::size_t a = 0; a < n; ++a) {
    const double* row = distances.row(first + a) + distances.width() - a;
    for (std::size_t w = 0; w < words; ++w) {
      for (std::uint64_t bits = marked[a * words + w]; bits != 0; bits &= bits - 1) {
        const std::size_t b = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        g.edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), row[b]});
      }
    }
  }
  sort_edges(g.edges);
  g.clip_radius = quantile_of_sorted(g.edges, options.quantile);
  while (!g.edges.empty() && g.edges.back().length > g.clip_radius) g.edges.pop_back();
  return g;
}

SparseGraph build_sparse_edges(const PointCloudView& cloud, const SparsifyOptions& options) {
  if (cloud.n < 2) throw DegenerateWindowError("sparse Rips graph needs at least two points");
  const BandedDistances d(cloud, cloud.n - 1);
  return build_sparse_edges(d, 0, cloud.n, options);
}

namespace {

class ElderUnionFind {
 public:
  explicit ElderUnionFind(std::size_t n) : parent_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::uint32_t>(i);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // All components are born at 0, so the elder rule reduces to the index
  // tie-break: the higher root is absorbed.
  void absorb(std::uint32_t survivor, std::uint32_t dying) { parent_[dying] = survivor; }

 private:
  std::vector<std::uint32_t> parent_;
};

// Runs the H0 sweep, appending pairs and flagging merge edges.
void sweep_h0(std::span<const Edge> edges, std::size_t n, double clip_radius,
              std::vector<PersistencePair>& out, std::vector<char>* merge_edge) {
  ElderUnionFind uf(n);
  std::size_t components = n;
  if (merge_edge) merge_edge->assign(edges.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::uint32_t ra = uf.find(edges[e].i);
    const std::uint32_t rb = uf.find(edges[e].j);
    if (ra == rb) continue;
    uf.absorb(std::min(ra, rb), std::max(ra, rb));
    --components;
    if (merge_edge) (*merge_edge)[e] = 1;
    if (edges[e].length > 0.0) out.push_back({0.0, edges[e].length, 0});
  }
  if (clip_radius > 0.0) {
    for (std::size_t c = 0; c < components; ++c) out.push_back({0.0, clip_radius, 0});
  }
}

// Coboundary reduction for degree 1. Triangles are keyed by
// (index of their longest edge) * n + (vertex opposite that edge), which is a
// total order compatible with the filtration.
class CoboundaryReducer {
 public:
  CoboundaryReducer(std::span<const Edge> edges, std::size_t n)
      : edges_(edges), n_(n), offset_(n + 1, 0), incidences_(2 * edges.size()) {
    for (const Edge& e : edges) {
      ++offset_[e.i + 1];
      ++offset_[e.j + 1];
    }
    for (std::size_t v = 0; v < n; ++v) offset_[v + 1] += offset_[v];
    std::vector<std::uint32_t> fill(offset_.begin(), offset_.end() - 1);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      incidences_[fill[edges[e].i]++] = {edges[e].j, static_cast<std::uint32_t>(e)};
      incidences_[fill[edges[e].j]++] = {edges[e].i, static_cast<std::uint32_t>(e)};
    }
    for (std::size_t v = 0; v < n; ++v) {
      std::sort(incidences_.begin() + offset_[v], incidences_.begin() + offset_[v + 1],
                [](const Incidence& a, const Incidence& b) { return a.vertex < b.vertex; });
    }
  }

  double value(std::uint64_t key) const { return edges_[key / n_].length; }

  // Sorted triangle keys of the coboundary of edge e.
  void coboundary(std::uint32_t e, std::vector<std::uint64_t>& out) const {
    out.clear();
    const Edge& edge = edges_[e];
    const std::span<const Incidence> la = neighbors(edge.i);
    const std::span<const Incidence> lb = neighbors(edge.j);
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < la.size() && b < lb.size()) {
      if (la[a].vertex < lb[b].vertex) {
        ++a;
      } else if (lb[b].vertex < la[a].vertex) {
        ++b;
      } else {
        const std::uint32_t c = la[a].vertex;
        const std::uint32_t ea = la[a].edge;
        const std::uint32_t eb = lb[b].edge;
        std::uint64_t key;
        if (e > ea && e > eb) {
          key = static_cast<std::uint64_t>(e) * n_ + c;
        } else if (ea > eb) {
          key = static_cast<std::uint64_t>(ea) * n_ + edge.j;  // ea = (i, c)
        } else {
          key = static_cast<std::uint64_t>(eb) * n_ + edge.i;  // eb = (j, c)
        }
        out.push_back(key);
        ++a;
        ++b;
      }
    }
    std::sort(out.begin(), out.end());
  }

 private:
  struct Incidence {
    std::uint32_t vertex;
    std::uint32_t edge;
  };
  std::span<const Edge> edges_;
  std::size_t n_;
  std::span<const Incidence> neighbors(std::uint32_t v) const {
    return {incidences_.data() + offset_[v], offset_[v + 1] - offset_[v]};
  }

  std::vector<std::uint32_t> offset_;
  std::vector<Incidence> incidences_;
};

void symmetric_difference_into(const std::vector<std::uint64_t>& a,
                               const std::vector<std::uint64_t>& b,
                               std::vector<std::uint64_t>& out) {
  out.clear();
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
}

// For each edge e, the smallest triangle key with e as the longest edge, or
// kNoKey. Such a key is the minimum of e's coboundary, and no column of a
// later edge can contain it, so e pairs with it without reduction.
constexpr std::uint64_t kNoKey = std::numeric_limits<std::uint64_t>::max();

std::vector<std::uint64_t> emergent_pivots(std::span<const Edge> edges, std::size_t n) {
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> earlier(n * words, 0);  // neighbours via shorter edges
  std::vector<std::uint64_t> out(edges.size(), kNoKey);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::uint64_t* a = earlier.data() + edges[e].i * words;
    const std::uint64_t* b = earlier.data() + edges[e].j * words;
    for (std::size_t w = 0; w < words; ++w) {
      if (const std::uint64_t common = a[w] & b[w]; common != 0) {
        out[e] = static_cast<std::uint64_t>(e) * n + w * 64 + static_cast<std::size_t>(std::countr_zero(common));
        break;
      }
    }
    earlier[edges[e].i * words + edges[e].j / 64] |= std::uint64_t{1} << (edges[e].j % 64);
    earlier[edges[e].j * words + edges[e].i / 64] |= std::uint64_t{1} << (edges[e].i % 64);
  }
  return out;
}

// Open-addressing map from pivot triangle key to column slot.
class PivotTable {
 public:
  explicit PivotTable(std::size_t expected) {
    std::size_t cap = 16;
    while (cap < 2 * expected) cap *= 2;
    slots_.assign(cap, {kNoKey, 0});
    mask_ = cap - 1;
  }

  void insert(std::uint64_t key, std::uint32_t value) {
    std::size_t h = hash(key);
    while (slots_[h].key != kNoKey) h = (h + 1) & mask_;
    slots_[h] = {key, value};
  }

  const std::uint32_t* find(std::uint64_t key) const {
    for (std::size_t h = hash(key);; h = (h + 1) & mask_) {
      if (slots_[h].key == key) return &slots_[h].value;
      if (slots_[h].key == kNoKey) return nullptr;
    }
  }

 private:
  struct Slot {
    std::uint64_t key;
    std::uint32_t value;
  };
  std::size_t hash(std::uint64_t key) const {
    return static_cast<std::size_t>((key * 0x9e3779b97f4a7c15ULL) >> 17) & mask_;
  }
  std::vector<Slot> slots_;
  std::size_t mask_{0};
};

void reduce_h1(std::span<const Edge> edges, std::size_t n, double clip_radius,
               const std::vector<char>& merge_edge, std::vector<PersistencePair>& out) {
  if (edges.size() < 3) {
    // No triangles; every non-merge edge closes an essential cycle.
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!merge_edge[e] && clip_radius > edges[e].length) {
        out.push_back({edges[e].length, clip_radius, 1});
      }
    }
    return;
  }
  const CoboundaryReducer reducer(edges, n);

  const std::vector<std::uint64_t> emergent = emergent_pivots(edges, n);

  // Pivot triangle -> column slot. Emergent columns are recomputed from the
  // coboundary on demand; reduced columns are kept.
  constexpr std::uint32_t kEmergent = 0x80000000u;
  PivotTable pivots(edges.size());
  std::vector<std::vector<std::uint64_t>> stored;
  std::vector<std::uint64_t> column;
  std::vector<std::uint64_t> other;
  std::vector<std::uint64_t> scratch;

  for (std::size_t idx = edges.size(); idx-- > 0;) {
    if (merge_edge[idx]) continue;  // cleared: paired in degree 0
    const auto e = static_cast<std::uint32_t>(idx);
    if (emergent[idx] != kNoKey) {
      pivots.insert(emergent[idx], kEmergent | e);  // zero persistence
      continue;
    }
    reducer.coboundary(e, column);
    while (!column.empty()) {
      const std::uint32_t* hit = pivots.find(column.front());
      if (!hit) break;
      if (*hit & kEmergent) {
        reducer.coboundary(*hit & ~kEmergent, other);
        symmetric_difference_into(column, other, scratch);
      } else {
        symmetric_difference_into(column, stored[*hit], scratch);
      }
      column.swap(scratch);
    }
    const double birth = edges[idx].length;
    if (column.empty()) {
      if (clip_radius > birth) out.push_back({birth, clip_radius, 1});
      continue;
    }
    const std::uint64_t pivot = column.front();
    pivots.insert(pivot, static_cast<std::uint32_t>(stored.size()));
    stored.push_back(column);
    const double death = reducer.value(pivot);
    if (death > birth) out.push_back({birth, death, 1});
  }
}

}  // namespace

PersistenceDiagram persistence_h0(std::span<const Edge> edges, std::size_t n, double clip_radius) {
  PersistenceDiagram d;
  d.clip_radius = clip_radius;
  sweep_h0(edges, n, clip_radius, d.pairs, nullptr);
  return d;
}

PersistenceDiagram persistence_h1(std::span<const Edge> edges, std::size_t n, double clip_radius) {
  PersistenceDiagram d;
  d.clip_radius = clip_radius;
  std::vector<PersistencePair> h0;
  std::vector<char> merge_edge;
  sweep_h0(edges, n, clip_radius, h0, &merge_edge);
  reduce_h1(edges, n, clip_radius, merge_edge, d.pairs);
  return d;
}

PersistenceDiagram compute_persistence(const SparseGraph& graph) {
  PersistenceDiagram d;
  d.clip_radius = graph.clip_radius;
  std::vector<char> merge_edge;
  sweep_h0(graph.edges, graph.n, graph.clip_radius, d.pairs, &merge_edge);
  reduce_h1(graph.edges, graph.n, graph.clip_radius, merge_edge, d.pairs);
  return d;
}

}  // namespace topseg
