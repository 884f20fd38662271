#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "reconv/model.hpp"

namespace reconv {

// Central differences (f(t + eps e_i) - f(t - eps e_i)) / (2 eps) for every
// coordinate of theta. Throws NumericError if f returns a non-finite value.
Tensor finite_diff(const std::function<double(const Tensor&)>& f, const Tensor& theta, double eps = 1e-5);

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b) noexcept;

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose perturbation crossed a kink
};

struct GradReport {
  std::string arch;
  std::vector<GradCheckEntry> entries;

  bool pass() const noexcept;
  const GradCheckEntry* find(const std::string& name) const;
  void write_text(std::ostream& os) const;
  // CSV with header tensor,max_rel_err,pass.
  void write_csv(std::ostream& os) const;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tied_tolerance = 1e-10;
  // Applied to the analytic gradients before comparison; lets tests inject
  // a faulty adjoint.
  std::function<void(Grads&)> corrupt;
};

// The parameter point and example a gradient check runs at.
struct GradCheckPoint {
  Params params;
  Tensor image;
  std::size_t label = 0;
};

// init_params(arch, seed) moved off the ReLU kinks: b0 and b are shifted by
// +0.1, W gets a small random perturbation around the identity and C is
// drawn at random so that every tensor receives a non-zero gradient.
GradCheckPoint gradcheck_point(const ArchConfig& arch, std::uint64_t seed);

// Compares every parameter tensor's analytic gradient against central
// differences. Tied architectures also get "W:sum" / "b:sum" entries that
// compare the tied gradient with the summed per-layer gradients of the
// equivalent untied model, and a "tape:untied" entry for forward equality.
GradReport check_model_grads(const ArchConfig& arch, std::uint64_t seed, double tol,
                             const GradCheckOptions& options = {});

}  // namespace reconv
