#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "reconv/model.hpp"

namespace reconv {

// Independent weights and biases of the network:
//   k*k*C*M + h*h*M^2*L' + M*(L'+1) + (H/p)*(W/p)*M*K + K
// with L' = L for untied models and L' = 1 for tied ones. With the default
// extents this is 192M + 9M^2 L' + M(L'+1) + 640M + 10.
std::size_t param_count(const ArchConfig& config);

// Convenience overload for an otherwise default architecture.
std::size_t param_count(std::size_t feature_maps, std::size_t layers, bool tied);

struct ModelPair {
  std::size_t layers = 0;
  std::size_t m_untied = 0;
  std::size_t m_tied = 0;
  std::size_t p_untied = 0;
  std::size_t p_tied = 0;
  double rel_diff = 0.0;  // |p_untied - p_tied| / max(p_untied, p_tied)

  friend bool operator==(const ModelPair&, const ModelPair&) = default;
};

double relative_difference(std::size_t a, std::size_t b) noexcept;

// Every (untied M, tied M) pair with both M in [m_min, m_max] whose counts
// lie within `tolerance`, ordered by rel_diff and then by m_untied. An empty
// range (m_min > m_max) yields no pairs. `base` supplies the non-M/L
// extents.
std::vector<ModelPair> match_pairs(std::size_t layers, std::size_t m_min, std::size_t m_max, double tolerance,
                                   const ArchConfig& base = {});

// CSV with header L,m_untied,m_tied,p_untied,p_tied,rel_diff.
void write_pairs_csv(std::ostream& os, const std::vector<ModelPair>& pairs);

}  // namespace reconv
