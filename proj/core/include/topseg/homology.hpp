#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace topseg {

// Undirected edge of the sparsified Rips graph, i < j (window-local indices).
struct Edge {
  std::uint32_t i{0};
  std::uint32_t j{0};
  double length{0.0};
};

struct PersistencePair {
  double birth{0.0};
  double death{0.0};
  int dim{0};

  double persistence() const { return death - birth; }
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

// Birth-death pairs in degrees 0 and 1. Infinite bars are truncated at
// clip_radius and zero-persistence pairs are never stored.
struct PersistenceDiagram {
  std::vector<PersistencePair> pairs;
  double clip_radius{0.0};

  std::vector<PersistencePair> in_dim(int dim) const;
  // Canonical (dim, birth, death) order.
  void sort();
};

// Text dump: one `dim birth death` line per pair, full precision.
void write_diagram(std::ostream& out, const PersistenceDiagram& diagram);
PersistenceDiagram read_diagram(std::istream& in);

// Row-major n x dim coordinates.
struct PointCloudView {
  std::span<const double> coords;
  std::size_t n{0};
  std::size_t dim{0};

  std::span<const double> point(std::size_t i) const { return coords.subspan(i * dim, dim); }
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Pairwise distances between points whose indices differ by at most
// `width`. A sliding window of w points over a trajectory needs width w - 1;
// a single cloud of n points uses width n - 1.
class BandedDistances {
 public:
  BandedDistances() = default;
  BandedDistances(const PointCloudView& cloud, std::size_t width);

  double operator()(std::size_t i, std::size_t j) const { return row(i)[j + width_ - i]; }
  // row(i)[j + width - i] is the distance from i to j for |i - j| <= width.
  const double* row(std::size_t i) const { return values_.data() + i * (2 * width_ + 1); }
  // Indices within the band of i, ascending by (distance, index).
  std::span<const std::uint32_t> nearest(std::size_t i) const {
    return {order_.data() + i * 2 * width_, order_count_[i]};
  }
  std::size_t size() const { return n_; }
  std::size_t width() const { return width_; }

 private:
  std::vector<double> values_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> order_count_;
  std::size_t n_{0};
  std::size_t width_{0};
};

struct SparsifyOptions {
  double quantile{0.95};
  // Neighbors per point; defaults to ceil(sqrt(n)), capped at n - 1.
  std::optional<std::size_t> knn_k;
};

struct SparseGraph {
  std::vector<Edge> edges;  // ascending by (length, i, j), all <= clip_radius
  double clip_radius{0.0};
  std::size_t n{0};
  std::size_t knn_k{0};
};

std::size_t default_knn_k(std::size_t n);

// Linear interpolation between order statistics (q in [0, 1]).
double quantile_linear(std::vector<double> values, double q);

// Symmetric k-NN graph of the window [first, first + n) with edges clipped
// at the q-quantile of the k-NN edge lengths.
SparseGraph build_sparse_edges(const BandedDistances& distances, std::size_t first, std::size_t n,
                               const SparsifyOptions& options);
SparseGraph build_sparse_edges(const PointCloudView& cloud, const SparsifyOptions& options);

// Degree-0 pairs by a union-find sweep (elder rule; on ties the component
// with the higher root index dies). Edges must be sorted ascending.
PersistenceDiagram persistence_h0(std::span<const Edge> edges, std::size_t n, double clip_radius);

// Degree-1 pairs of the clique complex of the edge set, by coboundary
// reduction with clearing of the degree-0 death edges.
PersistenceDiagram persistence_h1(std::span<const Edge> edges, std::size_t n, double clip_radius);

// H0 and H1 of a sparsified graph in one call.
PersistenceDiagram compute_persistence(const SparseGraph& graph);

// Full Vietoris-Rips persistence in degrees 0 and 1 by plain boundary-matrix
// reduction. Test oracle; refuses more than 16 points.
PersistenceDiagram oracle_vr_persistence(const PointCloudView& cloud, double clip_radius);

}  // namespace topseg
