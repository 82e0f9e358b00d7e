#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ptrack {

struct TerrainParams {
  double max_height = 0.0;   // m, peak-to-zero amplitude bound
  double scale = 12.0;       // m, base noise wavelength
  double octaves = 1.0;      // fractal octave count (rounded when generating)
  double persistence = 0.5;  // amplitude decay per octave, (0, 1]
  double lacunarity = 2.0;   // frequency growth per octave, >= 1
  uint64_t seed = 0;
};

struct Terrain {
  std::vector<double> heights;  // uniform grid over x
  double x0 = 0.0;              // world x of heights[0]
  double grid_dx = 0.01;        // m
  double friction = 1.0;        // mu
  TerrainParams params;

  bool flat() const { return heights.empty(); }
  double x_min() const { return x0; }
  double x_max() const { return x0 + grid_dx * (heights.empty() ? 0 : heights.size() - 1); }
};

// Classic 1-D gradient noise: zero at integer lattice points, quintic fade,
// per-seed gradient hashing. Output is bounded to [-1, 1].
double perlin1(double x, uint64_t seed);

// Fractal sum of perlin1 octaves, normalized so |h| <= max_height.
Terrain fractal_terrain(const TerrainParams& params, uint64_t seed,
                        double x_min = -12.0, double x_max = 12.0,
                        double grid_dx = 0.01);

Terrain flat_terrain(double friction = 1.0);

// Linear interpolation between grid samples; x clamped to the grid extent.
double terrain_height(const Terrain& terrain, double x);

// CSV dump (x,z rows) for plotting.
void terrain_to_csv(const Terrain& terrain, const std::string& path);

}  // namespace ptrack
