#pragma once

#include <limits>
#include <span>
#include <vector>

#include "wikimrc/errors.hpp"
#include "wikimrc/random.hpp"

namespace wikimrc {

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;  // cluster of each point
  std::size_t iterations = 0;
};

// Lloyd's algorithm. Initial centroids are k distinct points drawn with the
// seeded Rng; an emptied cluster keeps its previous centroid. Ties in the
// nearest-centroid search go to the lower cluster index.
inline KMeansResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 50) {
  KMeansResult r;
  if (points.empty() || k == 0) return r;
  k = std::min(k, points.size());
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw InputError("k-means: vectors have different dimensions");
  }
  Rng rng(seed);
  for (std::size_t i : rng.sample_indices(points.size(), k)) r.centroids.push_back(points[i]);
  r.assignment.assign(points.size(), 0);

  auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  };

  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double d = dist2(points[i], r.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (r.assignment[i] != best) changed = true;
      r.assignment[i] = best;
    }
    r.iterations = it + 1;
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[r.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[r.assignment[i]][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) r.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
  return r;
}

}  // namespace wikimrc
