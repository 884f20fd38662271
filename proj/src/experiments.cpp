#include "reconv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "reconv/error.hpp"
#include "reconv/param_count.hpp"

namespace reconv {
namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

ArchConfig cell_arch(const ArchConfig& base, const ExperimentCell& cell) {
  ArchConfig arch = base;
  arch.feature_maps = cell.feature_maps;
  arch.layers = cell.layers;
  arch.tied = cell.tied;
  return arch;
}

auto canonical_key(const ExperimentRecord& r) {
  return std::make_tuple(static_cast<int>(r.kind), r.cell.feature_maps, r.cell.layers, r.cell.tied, r.seed);
}

ExperimentRecord run_job(const ExperimentSpec& spec, const ExperimentCell& cell, std::uint64_t seed,
                         const Dataset& train_data, const Dataset& test_data) {
  ExperimentRecord record;
  record.kind = spec.kind;
  record.cell = cell;
  record.seed = seed;
  record.epochs = spec.train.epochs;
  const ArchConfig arch = cell_arch(spec.base, cell);
  record.param_count = param_count(arch);

  const auto start = std::chrono::steady_clock::now();
  try {
    TrainConfig cfg = spec.train;
    cfg.shuffle_seed = seed;
    cfg.eval_every = 0;
    auto result = train(arch, train_data, test_data, cfg, seed);
    if (!result.epochs.empty()) {
      record.train_error = result.epochs.back().train_error;
      record.test_error = result.epochs.back().test_error;
    } else {
      record.train_error = error_rate(arch, result.params, train_data);
      if (!test_data.empty()) record.test_error = error_rate(arch, result.params, test_data);
    }
  } catch (const std::exception& e) {
    record.failure = e.what();
    record.train_error.reset();
    record.test_error.reset();
  }
  if (spec.train.record_time) {
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return record;
}

std::string csv_field(std::string text) {
  for (auto& ch : text) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
  }
  return text;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::overview_grid: return "overview-grid";
    case ExperimentKind::layers_tied: return "layers-tied";
    case ExperimentKind::params_layers_untied: return "params-layers-untied";
    case ExperimentKind::pair_tied_vs_untied: return "pair-tied-vs-untied";
    case ExperimentKind::pair_matched_features: return "pair-matched-features";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto kind : {ExperimentKind::overview_grid, ExperimentKind::layers_tied, ExperimentKind::params_layers_untied,
                    ExperimentKind::pair_tied_vs_untied, ExperimentKind::pair_matched_features}) {
    if (text == to_string(kind)) return kind;
  }
  throw ConfigError("unknown experiment kind '" + std::string(text) +
                    "' (expected overview-grid, layers-tied, params-layers-untied, pair-tied-vs-untied or "
                    "pair-matched-features)");
}

void ExperimentSpec::validate() const {
  if (l_list.empty()) throw ConfigError("experiment: layer list is empty");
  if (kind != ExperimentKind::pair_matched_features && m_list.empty()) {
    throw ConfigError("experiment: feature-map list is empty");
  }
  if (seeds.empty()) throw ConfigError("experiment: seed list is empty");
  if (kind == ExperimentKind::pair_matched_features && !(tolerance >= 0.0)) {
    throw ConfigError("experiment: tolerance must be non-negative");
  }
  train.validate();
  ArchConfig probe = base;
  probe.feature_maps = 1;
  probe.layers = 1;
  probe.validate();
}

std::vector<ExperimentCell> experiment_cells(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<ExperimentCell> cells;
  auto grid = [&](bool tied) {
    for (auto m : spec.m_list) {
      for (auto l : spec.l_list) cells.push_back({tied, m, l});
    }
  };
  switch (spec.kind) {
    case ExperimentKind::layers_tied:
      grid(true);
      break;
    case ExperimentKind::params_layers_untied:
      grid(false);
      break;
    case ExperimentKind::overview_grid:
    case ExperimentKind::pair_tied_vs_untied:
      grid(false);
      grid(true);
      break;
    case ExperimentKind::pair_matched_features:
      for (auto l : spec.l_list) {
        auto pairs = match_pairs(l, spec.m_min, spec.m_max, spec.tolerance, spec.base);
        if (spec.max_pairs > 0 && pairs.size() > spec.max_pairs) pairs.resize(spec.max_pairs);
        for (const auto& p : pairs) {
          cells.push_back({false, p.m_untied, l});
          cells.push_back({true, p.m_tied, l});
        }
      }
      break;
  }
  auto key = [](const ExperimentCell& c) { return std::make_tuple(c.feature_maps, c.layers, c.tied); };
  std::sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& train_data, const Dataset& test_data,
                                std::size_t threads, const RecordCallback& on_record) {
  const auto cells = experiment_cells(spec);
  struct Job {
    ExperimentCell cell;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& cell : cells) {
    for (auto seed : spec.seeds) jobs.push_back({cell, seed});
  }

  ExperimentResult result;
  result.records.resize(jobs.size());
  if (threads <= 1 || jobs.size() <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      result.records[j] = run_job(spec, jobs[j].cell, jobs[j].seed, train_data, test_data);
      if (on_record) on_record(result.records[j]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < std::min(threads, jobs.size()); ++t) {
      workers.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          result.records[j] = run_job(spec, jobs[j].cell, jobs[j].seed, train_data, test_data);
        }
      });
    }
    workers.clear();
    if (on_record) {
      for (const auto& r : result.records) on_record(r);
    }
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const auto& a, const auto& b) { return canonical_key(a) < canonical_key(b); });
  return result;
}

void ExperimentResult::write_csv(std::ostream& os) const {
  os << "kind,tied,M,L,param_count,train_error,test_error,seed,epochs,seconds,status\n";
  for (const auto& r : records) {
    os << to_string(r.kind) << ',' << (r.cell.tied ? "true" : "false") << ',' << r.cell.feature_maps << ','
       << r.cell.layers << ',' << r.param_count << ',' << (r.train_error ? format_number(*r.train_error) : "") << ','
       << (r.test_error ? format_number(*r.test_error) : "") << ',' << r.seed << ',' << r.epochs << ','
       << format_number(r.seconds) << ',' << (r.failed() ? "failed: " + csv_field(r.failure) : std::string("ok"))
       << '\n';
  }
}

ContourTable emit_contours(const std::vector<std::size_t>& m_list, const std::vector<std::size_t>& l_list, bool tied,
                           const ArchConfig& base) {
  if (m_list.empty() || l_list.empty()) throw ConfigError("emit_contours: M and L lists must be nonempty");
  ArchConfig arch = base;
  arch.tied = tied;
  auto count = [&](std::size_t m, std::size_t l) {
    arch.feature_maps = m;
    arch.layers = l;
    return param_count(arch);
  };

  const auto [m_lo, m_hi] = std::minmax_element(m_list.begin(), m_list.end());
  const auto [l_lo, l_hi] = std::minmax_element(l_list.begin(), l_list.end());
  std::set<std::size_t> corner_counts{count(*m_lo, *l_lo), count(*m_lo, *l_hi), count(*m_hi, *l_lo),
                                      count(*m_hi, *l_hi)};

  ContourTable table;
  table.levels.assign(corner_counts.begin(), corner_counts.end());
  auto level_of = [&](double p) {
    const auto it = std::find(table.levels.begin(), table.levels.end(), p);
    return it == table.levels.end() ? -1 : static_cast<int>(it - table.levels.begin());
  };

  for (auto m : m_list) {
    for (auto l : l_list) {
      const auto p = static_cast<double>(count(m, l));
      table.rows.push_back({static_cast<double>(m), l, p, level_of(p), true});
    }
  }

  // P(M) = a M^2 + b M + K with a = h^2 L', b = k^2 C + (L' + 1) + (H/p)(W/p) K.
  for (std::size_t level = 0; level < table.levels.size(); ++level) {
    for (auto l : l_list) {
      const double sets = tied ? 1.0 : static_cast<double>(l);
      const double hk = static_cast<double>(base.higher_kernel);
      const double fk = static_cast<double>(base.first_kernel);
      const double a = hk * hk * sets;
      const double b = fk * fk * static_cast<double>(base.input_channels) + sets + 1.0 +
                       static_cast<double>(base.pooled_height() * base.pooled_width() * base.classes);
      const double c = static_cast<double>(base.classes) - table.levels[level];
      const double m = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
      table.rows.push_back({m, l, table.levels[level], static_cast<int>(level), false});
    }
  }
  return table;
}

void ContourTable::write_csv(std::ostream& os) const {
  os << "M,L,param_count,level_id\n";
  for (const auto& r : rows) {
    os << format_number(r.feature_maps) << ',' << r.layers << ',' << format_number(r.param_count) << ',' << r.level_id
       << '\n';
  }
}

}  // namespace reconv
