#include "topseg/landscape.hpp"

#include "topseg/error.hpp"

#include <algorithm>
#include <cmath>

namespace topseg {

double tent(double birth, double death, double eps) {
  if (birth > death) throw InvalidPairError("tent: birth exceeds death");
  return std::max(0.0, std::min(eps - birth, death - eps));
}

LandscapeVector diagram_to_landscape(const PersistenceDiagram& diagram, int dim, std::size_t layers,
                                     std::size_t grid_size, double grid_min, double grid_max) {
  if (layers < 1 || grid_size < 2 || !(grid_min < grid_max)) {
    throw ConfigError("landscape: need K >= 1, G >= 2 and grid_min < grid_max");
  }
  LandscapeVector lv;
  lv.layers = layers;
  lv.grid_size = grid_size;
  lv.grid_min = grid_min;
  lv.grid_max = grid_max;
  lv.homology_dim = dim;
  lv.values.assign(layers * grid_size, 0.0);

  const double step = (grid_max - grid_min) / static_cast<double>(grid_size - 1);
  const auto last = static_cast<double>(grid_size - 1);
  for (const PersistencePair& p : diagram.pairs) {
    if (p.dim != dim) continue;
    if (p.birth > p.death) throw InvalidPairError("landscape: birth exceeds death");
    if (!(p.death > p.birth)) continue;
    // Grid points strictly inside (birth, death) carry a positive tent.
    const double lo = std::max(0.0, std::floor((p.birth - grid_min) / step));
    const double hi = std::min(last, std::ceil((p.death - grid_min) / step));
    if (lo > hi) continue;
    for (auto g = static_cast<std::size_t>(lo); g <= static_cast<std::size_t>(hi); ++g) {
      const double v = tent(p.birth, p.death, lv.grid_point(g));
      if (v <= 0.0) continue;
      // Insert into the descending top-K column at g.
      if (v <= lv.values[(layers - 1) * grid_size + g]) continue;
      std::size_t k = layers - 1;
      while (k > 0 && lv.values[(k - 1) * grid_size + g] < v) {
        lv.values[k * grid_size + g] = lv.values[(k - 1) * grid_size + g];
        --k;
      }
      lv.values[k * grid_size + g] = v;
    }
  }
  return lv;
}

LandscapeVector mean_landscapes(std::span<const LandscapeVector> inputs) {
  if (inputs.empty()) throw AggregationError("mean_landscapes: no inputs");
  const LandscapeVector& ref = inputs.front();
  LandscapeVector out = ref;
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    const LandscapeVector& v = inputs[i];
    if (v.layers != ref.layers || v.grid_size != ref.grid_size || v.grid_min != ref.grid_min ||
        v.grid_max != ref.grid_max || v.homology_dim != ref.homology_dim) {
      throw AggregationError("mean_landscapes: shape, grid or degree mismatch");
    }
    for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += v.values[j];
  }
  const double inv = 1.0 / static_cast<double>(inputs.size());
  for (double& x : out.values) x *= inv;
  return out;
}

std::vector<double> flatten(const LandscapeVector& h0, const LandscapeVector& h1) {
  if (h0.layers != h1.layers || h0.grid_size != h1.grid_size) {
    throw AggregationError("flatten: H0/H1 landscape shapes differ");
  }
  std::vector<double> out;
  out.reserve(h0.values.size() + h1.values.size());
  out.insert(out.end(), h0.values.begin(), h0.values.end());
  out.insert(out.end(), h1.values.begin(), h1.values.end());
  return out;
}

std::pair<LandscapeVector, LandscapeVector> unflatten(std::span<const double> flat, std::size_t layers,
                                                      std::size_t grid_size, double grid_min,
                                                      double grid_max) {
  const std::size_t block = layers * grid_size;
  if (flat.size() != 2 * block) throw AggregationError("unflatten: length is not 2 * K * G");
  auto make = [&](int dim, std::size_t offset) {
    LandscapeVector lv;
    lv.layers = layers;
    lv.grid_size = grid_size;
    lv.grid_min = grid_min;
    lv.grid_max = grid_max;
    lv.homology_dim = dim;
    lv.values.assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                     flat.begin() + static_cast<std::ptrdiff_t>(offset + block));
    return lv;
  };
  return {make(0, 0), make(1, block)};
}

}  // namespace topseg
