#include "reconv/param_count.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "reconv/error.hpp"

namespace reconv {

std::size_t param_count(const ArchConfig& config) {
  config.validate();
  const std::size_t m = config.feature_maps;
  const std::size_t sets = config.weight_sets();
  const std::size_t first = config.first_kernel * config.first_kernel * config.input_channels * m;
  const std::size_t higher = config.higher_kernel * config.higher_kernel * m * m * sets;
  const std::size_t biases = m * (sets + 1);
  const std::size_t classifier = config.pooled_height() * config.pooled_width() * m * config.classes + config.classes;
  return first + higher + biases + classifier;
}

std::size_t param_count(std::size_t feature_maps, std::size_t layers, bool tied) {
  ArchConfig config;
  config.feature_maps = feature_maps;
  config.layers = layers;
  config.tied = tied;
  return param_count(config);
}

double relative_difference(std::size_t a, std::size_t b) noexcept {
  const std::size_t hi = std::max(a, b);
  if (hi == 0) return 0.0;
  const std::size_t diff = a > b ? a - b : b - a;
  return static_cast<double>(diff) / static_cast<double>(hi);
}

std::vector<ModelPair> match_pairs(std::size_t layers, std::size_t m_min, std::size_t m_max, double tolerance,
                                   const ArchConfig& base) {
  if (!(tolerance >= 0.0)) throw ConfigError("match_pairs: tolerance must be non-negative");
  std::vector<ModelPair> pairs;
  if (m_min > m_max) return pairs;
  if (m_min == 0) throw ConfigError("match_pairs: feature maps must be positive");

  ArchConfig untied = base;
  untied.layers = layers;
  untied.tied = false;
  ArchConfig tied = untied;
  tied.tied = true;

  std::vector<std::size_t> tied_counts;
  for (std::size_t m = m_min; m <= m_max; ++m) {
    tied.feature_maps = m;
    tied_counts.push_back(param_count(tied));
  }
  for (std::size_t mu = m_min; mu <= m_max; ++mu) {
    untied.feature_maps = mu;
    const std::size_t pu = param_count(untied);
    for (std::size_t mt = m_min; mt <= m_max; ++mt) {
      const std::size_t pt = tied_counts[mt - m_min];
      const double rel = relative_difference(pu, pt);
      if (rel <= tolerance) pairs.push_back({layers, mu, mt, pu, pt, rel});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const ModelPair& a, const ModelPair& b) {
    if (a.rel_diff != b.rel_diff) return a.rel_diff < b.rel_diff;
    if (a.m_untied != b.m_untied) return a.m_untied < b.m_untied;
    return a.m_tied < b.m_tied;
  });
  return pairs;
}

void write_pairs_csv(std::ostream& os, const std::vector<ModelPair>& pairs) {
  os << "L,m_untied,m_tied,p_untied,p_tied,rel_diff\n";
  char rel[32];
  for (const auto& p : pairs) {
    std::snprintf(rel, sizeof rel, "%.10g", p.rel_diff);
    os << p.layers << ',' << p.m_untied << ',' << p.m_tied << ',' << p.p_untied << ',' << p.p_tied << ',' << rel
       << '\n';
  }
}

}  // namespace reconv
