#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qmcgp/gp.hpp"

namespace qmcgp {

// Fixed-level-count multilevel problem: difference integrands Y_l on the
// unit cube (level l uses the first dl[l] coordinates of a d-dimensional
// point) with per-level costs normalized so the top level costs 1.
struct MultilevelProblem {
  std::string name;
  size_t levels = 0;
  size_t d = 0;
  std::vector<size_t> dl;
  std::vector<double> cost;
  std::function<double(size_t level, const double* x)> difference;  // Y_l

  void validate() const;
};

struct MLRunResult {
  double estimate = 0.0;
  double stderr_est = 0.0;
  std::vector<uint64_t> samples;  // per level, per replicate where applicable
  double spent = 0.0;
  struct TraceRow {
    size_t level;
    uint64_t n_new;
    double utility;
  };
  std::vector<TraceRow> trace;
};

// Budgeted MLMC with IID points: double the feasible level maximizing
// sigma_l^2 / (n_l C_l).
MLRunResult mlmc_run(const MultilevelProblem& prob, double budget,
                     const std::vector<uint64_t>& n_init, uint64_t seed);

// Budgeted MLQMC with R replicated randomized sequences per level; utility
// sigma~_l^2 / (R n_l C_l).
MLRunResult mlqmc_run(const MultilevelProblem& prob, double budget, size_t R,
                      const std::vector<uint64_t>& n_init, uint64_t seed,
                      SeqKind sequence = SeqKind::dnet);

// Level selection for fast Bayesian MLQMC: cost-ordered pairwise tournament
// on the projected decrease in posterior cubature variance at equal cost.
size_t bqmc_level_select(const std::vector<size_t>& feasible, const std::vector<double>& cost,
                         const std::vector<uint64_t>& n,
                         const std::function<double(size_t, uint64_t)>& projected_variance);

struct BqmcOptions {
  enum class KernelChoice { net_adaptive_dsi, lattice_si1 } kernel =
      KernelChoice::net_adaptive_dsi;
  int fit_iterations = 20;  // hyperparameter refit budget per update
  bool cauchy_schwarz_aggregation = false;
  double nugget = 1e-8;
};

// Fast Bayesian MLQMC without replications: one randomized sequence and one
// fast GP per level, posterior cubature means/variances, projected-variance
// level selection.
MLRunResult bqmc_run(const MultilevelProblem& prob, double budget,
                     const std::vector<uint64_t>& n_init, uint64_t seed,
                     const BqmcOptions& opt = {});

}  // namespace qmcgp
