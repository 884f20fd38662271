#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reconv/data.hpp"
#include "reconv/model.hpp"
#include "reconv/train.hpp"

namespace reconv {

enum class ExperimentKind {
  overview_grid,         // tied and untied over the full (M, L) grid
  layers_tied,           // tied models: vary L at fixed M and P
  params_layers_untied,  // untied models grouped by P and L
  pair_tied_vs_untied,   // tied/untied pairs sharing (M, L)
  pair_matched_features, // tied/untied pairs with matched P and L
};

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(std::string_view text);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::layers_tied;
  std::vector<std::size_t> m_list{8, 16, 32};
  std::vector<std::size_t> l_list{1, 2, 4};
  // Matched-pair search (pair_matched_features only).
  std::size_t m_min = 16;
  std::size_t m_max = 256;
  double tolerance = 0.01;
  std::size_t max_pairs = 0;  // 0 keeps every matched pair
  ArchConfig base;            // extents, classes and sigma_v shared by all cells
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1};

  void validate() const;
};

struct ExperimentCell {
  bool tied = false;
  std::size_t feature_maps = 0;
  std::size_t layers = 0;

  friend bool operator==(const ExperimentCell&, const ExperimentCell&) = default;
};

struct ExperimentRecord {
  ExperimentKind kind = ExperimentKind::layers_tied;
  ExperimentCell cell;
  std::size_t param_count = 0;
  std::optional<double> train_error;
  std::optional<double> test_error;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double seconds = 0.0;
  std::string failure;  // empty when the cell trained successfully

  bool failed() const noexcept { return !failure.empty(); }
  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;

  // CSV with header
  // kind,tied,M,L,param_count,train_error,test_error,seed,epochs,seconds,status
  void write_csv(std::ostream& os) const;
};

// Architectures a spec trains, without duplicates, in canonical order.
std::vector<ExperimentCell> experiment_cells(const ExperimentSpec& spec);

using RecordCallback = std::function<void(const ExperimentRecord&)>;

// Trains every (cell, seed) job; a failing job is recorded and the run
// continues. Records come back sorted by (kind, M, L, tied, seed) whatever
// order the jobs ran in. `threads` > 1 runs jobs concurrently.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& train_data, const Dataset& test_data,
                                std::size_t threads = 1, const RecordCallback& on_record = {});

struct ContourRow {
  double feature_maps = 0.0;  // integral for grid cells
  std::size_t layers = 0;
  double param_count = 0.0;
  int level_id = -1;  // -1 for grid cells not on a level
  bool grid_cell = false;
};

struct ContourTable {
  std::vector<double> levels;
  std::vector<ContourRow> rows;

  // CSV with header M,L,param_count,level_id.
  void write_csv(std::ostream& os) const;
};

// Parameter counts over the (M, L) grid followed by iso-parameter polylines
// through the counts of the grid's corner cells. Each polyline vertex gives
// the real-valued M at which a model with L layers has exactly the level's
// count.
ContourTable emit_contours(const std::vector<std::size_t>& m_list, const std::vector<std::size_t>& l_list, bool tied,
                           const ArchConfig& base = {});

}  // namespace reconv
