#include "reconv/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "reconv/error.hpp"
#include "reconv/random.hpp"

namespace reconv {
namespace {

// Signs of every ReLU input plus the pooling winners. Two points with the
// same pattern lie on the same linear piece of the network.
struct ActivationPattern {
  std::vector<bool> active;
  std::vector<std::uint32_t> argmax;

  friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
};

ActivationPattern pattern_of(const Tape& tape) {
  ActivationPattern p;
  for (double v : tape.pre_pool.values()) p.active.push_back(v > 0.0);
  for (std::size_t l = 1; l < tape.hidden.size(); ++l) {
    for (double v : tape.hidden[l].values()) p.active.push_back(v > 0.0);
  }
  p.argmax = tape.pool_index.argmax;
  return p;
}

std::vector<Tensor*> tensor_list(ParamTensors& p) {
  std::vector<Tensor*> out;
  p.for_each([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<std::string> tensor_names(const ParamTensors& p) {
  std::vector<std::string> out;
  p.for_each([&](const std::string& name, const Tensor&) { out.push_back(name); });
  return out;
}

double max_relative_error(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i]));
  return worst;
}

}  // namespace

double relative_error(double a, double b) noexcept {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

Tensor finite_diff(const std::function<double(const Tensor&)>& f, const Tensor& theta, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_diff: step must be positive");
  Tensor grad(theta.shape());
  Tensor probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + eps;
    const double up = f(probe);
    probe[i] = theta[i] - eps;
    const double down = f(probe);
    probe[i] = theta[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff: non-finite function value at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

GradCheckPoint gradcheck_point(const ArchConfig& arch, std::uint64_t seed) {
  GradCheckPoint point{init_params(arch, seed), Tensor(arch.image_shape()), seed % arch.classes};
  auto rng = make_rng(seed, Stream::gradcheck);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (auto& v : point.params.b0.values()) v += 0.1;
  for (auto& b : point.params.b) {
    for (auto& v : b.values()) v += 0.1;
  }
  for (auto& w : point.params.w) {
    for (auto& v : w.values()) v += 0.05 * gauss(rng);
  }
  for (auto& v : point.params.c.values()) v = 0.5 * gauss(rng);
  for (auto& v : point.params.c_bias.values()) v = 0.1 * gauss(rng);
  for (auto& v : point.image.values()) v = unit(rng);
  return point;
}

GradReport check_model_grads(const ArchConfig& arch, std::uint64_t seed, double tol, const GradCheckOptions& options) {
  arch.validate();
  GradCheckPoint point = gradcheck_point(arch, seed);
  auto analytic = loss_and_grads(arch, point.params, point.image, point.label);
  if (options.corrupt) options.corrupt(analytic.grads);

  const ActivationPattern base = pattern_of(forward(arch, point.params, point.image));
  Params probe = point.params;
  const auto probe_tensors = tensor_list(probe);
  const auto grad_tensors = tensor_list(analytic.grads);
  const auto names = tensor_names(probe);

  GradReport report;
  report.arch = arch.describe();
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    Tensor& theta = *probe_tensors[t];
    const Tensor& grad = *grad_tensors[t];
    GradCheckEntry entry{names[t], 0.0, tol, false, 0, 0};
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double original = theta[i];
      theta[i] = original + options.eps;
      const Tape up = forward(arch, probe, point.image);
      theta[i] = original - options.eps;
      const Tape down = forward(arch, probe, point.image);
      theta[i] = original;
      if (!(pattern_of(up) == base) || !(pattern_of(down) == base)) {
        ++entry.skipped;
        continue;
      }
      const double f_up = nll(up, point.label), f_down = nll(down, point.label);
      if (!std::isfinite(f_up) || !std::isfinite(f_down)) {
        throw NumericError("check_model_grads: non-finite loss perturbing " + names[t] + "[" + std::to_string(i) + "]");
      }
      const double numeric = (f_up - f_down) / (2.0 * options.eps);
      entry.max_rel_err = std::max(entry.max_rel_err, relative_error(grad[i], numeric));
      ++entry.checked;
    }
    entry.pass = entry.checked > 0 && entry.max_rel_err < tol;
    report.entries.push_back(entry);
  }

  if (arch.tied) {
    ArchConfig untied_arch = arch;
    untied_arch.tied = false;
    const Params untied = untie(arch, point.params);
    auto oracle = loss_and_grads(untied_arch, untied, point.image, point.label);

    Tensor w_sum = oracle.grads.w.front();
    Tensor b_sum = oracle.grads.b.front();
    for (std::size_t l = 1; l < arch.layers; ++l) {
      w_sum += oracle.grads.w[l];
      b_sum += oracle.grads.b[l];
    }
    const double w_err = max_relative_error(analytic.grads.w.front(), w_sum);
    const double b_err = max_relative_error(analytic.grads.b.front(), b_sum);
    report.entries.push_back({"W:sum", w_err, options.tied_tolerance, w_err <= options.tied_tolerance, w_sum.size(), 0});
    report.entries.push_back({"b:sum", b_err, options.tied_tolerance, b_err <= options.tied_tolerance, b_sum.size(), 0});

    const Tape tied_tape = forward(arch, point.params, point.image);
    const Tape untied_tape = forward(untied_arch, untied, point.image);
    const bool same = tied_tape.hidden == untied_tape.hidden && tied_tape.logits == untied_tape.logits &&
                      tied_tape.probs == untied_tape.probs;
    report.entries.push_back({"tape:untied", same ? 0.0 : 1.0, 0.0, same, tied_tape.hidden.size(), 0});
  }
  return report;
}

bool GradReport::pass() const noexcept {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

const GradCheckEntry* GradReport::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void GradReport::write_text(std::ostream& os) const {
  os << "gradient check: " << arch << '\n';
  char line[160];
  for (const auto& e : entries) {
    std::snprintf(line, sizeof line, "  %-12s max_rel_err=%.3e tol=%.1e checked=%zu skipped=%zu %s\n", e.name.c_str(),
                  e.max_rel_err, e.tolerance, e.checked, e.skipped, e.pass ? "PASS" : "FAIL");
    os << line;
  }
  os << (pass() ? "PASS" : "FAIL") << '\n';
}

void GradReport::write_csv(std::ostream& os) const {
  os << "tensor,max_rel_err,pass\n";
  char err[32];
  for (const auto& e : entries) {
    std::snprintf(err, sizeof err, "%.6e", e.max_rel_err);
    os << e.name << ',' << err << ',' << (e.pass ? "true" : "false") << '\n';
  }
}

}  // namespace reconv
