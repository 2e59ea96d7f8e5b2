#pragma once

#include "topseg/homology.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace topseg {

// K x G samples of the first K landscape layers on a uniform grid that
// includes both endpoints. values[k * G + g] is layer k at grid point g.
struct LandscapeVector {
  std::vector<double> values;
  std::size_t layers{0};
  std::size_t grid_size{0};
  double grid_min{0.0};
  double grid_max{1.0};
  int homology_dim{0};

  double at(std::size_t k, std::size_t g) const { return values[k * grid_size + g]; }
  double grid_point(std::size_t g) const {
    return grid_min + (grid_max - grid_min) * static_cast<double>(g) / static_cast<double>(grid_size - 1);
  }
};

// max(0, min(eps - b, d - eps)); throws InvalidPairError when b > d.
double tent(double birth, double death, double eps);

LandscapeVector diagram_to_landscape(const PersistenceDiagram& diagram, int dim, std::size_t layers,
                                     std::size_t grid_size, double grid_min, double grid_max);

// Element-wise mean; all inputs must share shape, grid and homology degree.
LandscapeVector mean_landscapes(std::span<const LandscapeVector> inputs);

// [H0 row-major | H1 row-major], length 2 * K * G.
std::vector<double> flatten(const LandscapeVector& h0, const LandscapeVector& h1);
std::pair<LandscapeVector, LandscapeVector> unflatten(std::span<const double> flat, std::size_t layers,
                                                      std::size_t grid_size, double grid_min,
                                                      double grid_max);

}  // namespace topseg
