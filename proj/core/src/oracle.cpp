#include "topseg/error.hpp"
#include "topseg/homology.hpp"

#include <algorithm>
#include <map>

namespace topseg {

namespace {

struct Simplex {
  std::vector<int> vertices;
  double value;
};

}  // namespace

PersistenceDiagram oracle_vr_persistence(const PointCloudView& cloud, double clip_radius) {
  constexpr std::size_t kMaxPoints = 16;
  if (cloud.n > kMaxPoints) {
    throw OracleSizeError("oracle_vr_persistence: at most 16 points, got " + std::to_string(cloud.n));
  }
  const int n = static_cast<int>(cloud.n);
  std::vector<std::vector<double>> dist(cloud.n, std::vector<double>(cloud.n, 0.0));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b) dist[a][b] = euclidean_distance(cloud.point(a), cloud.point(b));
    }
  }

  std::vector<Simplex> simplices;
  for (int a = 0; a < n; ++a) simplices.push_back({{a}, 0.0});
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (dist[a][b] <= clip_radius) simplices.push_back({{a, b}, dist[a][b]});
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        const double v = std::max({dist[a][b], dist[a][c], dist[b][c]});
        if (v <= clip_radius) simplices.push_back({{a, b, c}, v});
      }
    }
  }
  std::sort(simplices.begin(), simplices.end(), [](const Simplex& x, const Simplex& y) {
    if (x.value != y.value) return x.value < y.value;
    if (x.vertices.size() != y.vertices.size()) return x.vertices.size() < y.vertices.size();
    return x.vertices < y.vertices;
  });

  std::map<std::vector<int>, int> position;
  for (int s = 0; s < static_cast<int>(simplices.size()); ++s) position[simplices[s].vertices] = s;

  // Boundary columns as sorted row lists over Z/2.
  const int m = static_cast<int>(simplices.size());
  std::vector<std::vector<int>> columns(simplices.size());
  for (int s = 0; s < m; ++s) {
    const auto& v = simplices[s].vertices;
    if (v.size() < 2) continue;
    for (std::size_t drop = 0; drop < v.size(); ++drop) {
      std::vector<int> face;
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (k != drop) face.push_back(v[k]);
      }
      columns[s].push_back(position.at(face));
    }
    std::sort(columns[s].begin(), columns[s].end());
  }

  // Textbook left-to-right reduction.
  std::vector<int> low_owner(simplices.size(), -1);
  std::vector<char> is_low(simplices.size(), 0);
  PersistenceDiagram diagram;
  diagram.clip_radius = clip_radius;
  for (int j = 0; j < m; ++j) {
    auto& col = columns[j];
    while (!col.empty() && low_owner[col.back()] >= 0) {
      const auto& other = columns[low_owner[col.back()]];
      std::vector<int> sum;
      std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                    std::back_inserter(sum));
      col = std::move(sum);
    }
    if (col.empty()) continue;
    const int low = col.back();
    low_owner[low] = j;
    is_low[low] = 1;
    const int dim = static_cast<int>(simplices[low].vertices.size()) - 1;
    const double birth = simplices[low].value;
    const double death = simplices[j].value;
    if (death > birth) diagram.pairs.push_back({birth, death, dim});
  }
  for (int s = 0; s < m; ++s) {
    const int dim = static_cast<int>(simplices[s].vertices.size()) - 1;
    if (dim > 1 || !columns[s].empty() || is_low[s]) continue;
    if (clip_radius > simplices[s].value) {
      diagram.pairs.push_back({simplices[s].value, clip_radius, dim});
    }
  }
  diagram.sort();
  return diagram;
}

}  // namespace topseg
