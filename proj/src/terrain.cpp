#include "ptrack/terrain.hpp"

#include <cmath>
#include <fstream>

#include "ptrack/errors.hpp"

namespace ptrack {

namespace {

// splitmix64; gradient hashing must be stable across platforms.
inline uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double lattice_gradient(int64_t cell, uint64_t seed) {
  const uint64_t h = mix(static_cast<uint64_t>(cell) ^ mix(seed));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
}

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

}  // namespace

double perlin1(double x, uint64_t seed) {
  const double fl = std::floor(x);
  const int64_t cell = static_cast<int64_t>(fl);
  const double f = x - fl;
  const double g0 = lattice_gradient(cell, seed);
  const double g1 = lattice_gradient(cell + 1, seed);
  const double u = fade(f);
  return (1.0 - u) * (g0 * f) + u * (g1 * (f - 1.0));
}

Terrain fractal_terrain(const TerrainParams& params, uint64_t seed, double x_min,
                        double x_max, double grid_dx) {
  if (!std::isfinite(params.max_height) || !std::isfinite(params.scale) ||
      !std::isfinite(params.octaves) || !std::isfinite(params.persistence) ||
      !std::isfinite(params.lacunarity))
    throw ConfigError("fractal_terrain: non-finite parameter");
  const int octaves = static_cast<int>(std::lround(params.octaves));
  if (octaves < 1) throw ConfigError("fractal_terrain: octaves must be >= 1");
  if (params.persistence <= 0.0 || params.persistence > 1.0)
    throw ConfigError("fractal_terrain: persistence must be in (0, 1]");
  if (params.lacunarity < 1.0)
    throw ConfigError("fractal_terrain: lacunarity must be >= 1");
  if (params.scale <= 0.0) throw ConfigError("fractal_terrain: scale must be positive");

  Terrain t;
  t.params = params;
  t.params.seed = seed;
  t.x0 = x_min;
  t.grid_dx = grid_dx;
  const int n = static_cast<int>(std::floor((x_max - x_min) / grid_dx)) + 1;
  t.heights.resize(n);

  double norm = 0.0;
  for (int o = 0; o < octaves; ++o) norm += std::pow(params.persistence, o);
  for (int i = 0; i < n; ++i) {
    const double x = x_min + i * grid_dx;
    double h = 0.0;
    double amp = 1.0;
    double freq = 1.0;
    for (int o = 0; o < octaves; ++o) {
      h += amp * perlin1(freq * x / params.scale, seed + 0x51ULL * o);
      amp *= params.persistence;
      freq *= params.lacunarity;
    }
    t.heights[i] = params.max_height * h / norm;
  }
  return t;
}

Terrain flat_terrain(double friction) {
  Terrain t;
  t.friction = friction;
  return t;
}

double terrain_height(const Terrain& terrain, double x) {
  if (terrain.flat()) return 0.0;
  const int n = static_cast<int>(terrain.heights.size());
  double u = (x - terrain.x0) / terrain.grid_dx;
  if (u <= 0.0) return terrain.heights.front();
  if (u >= n - 1) return terrain.heights.back();
  const int i = static_cast<int>(u);
  const double f = u - i;
  return terrain.heights[i] * (1.0 - f) + terrain.heights[i + 1] * f;
}

void terrain_to_csv(const Terrain& terrain, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("terrain_to_csv: cannot open " + path);
  out << "x,z\n";
  if (terrain.flat()) {
    out << "0,0\n";
    return;
  }
  for (size_t i = 0; i < terrain.heights.size(); ++i)
    out << terrain.x0 + i * terrain.grid_dx << "," << terrain.heights[i] << "\n";
}

}  // namespace ptrack
