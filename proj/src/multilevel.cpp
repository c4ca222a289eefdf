#include "qmcgp/multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qmcgp {

void MultilevelProblem::validate() const {
  if (levels == 0 || !difference) throw std::invalid_argument("ml: empty problem");
  if (dl.size() != levels || cost.size() != levels)
    throw std::invalid_argument("ml: per-level arrays must match the level count");
  for (double c : cost)
    if (c <= 0.0) throw std::invalid_argument("ml: costs must be positive");
  for (size_t l = 0; l < levels; ++l)
    if (dl[l] > d) throw std::invalid_argument("ml: level dimension exceeds d");
}

namespace {

struct Accounting {
  double spent = 0.0;
  double budget = 0.0;

  bool feasible(double extra) const { return spent + extra <= budget; }
};

size_t lowest_argmax(const std::vector<size_t>& levels, const std::vector<double>& util) {
  size_t best = levels[0];
  for (size_t l : levels)
    if (util[l] > util[best]) best = l;  // ties keep the lowest level index
  return best;
}

}  // namespace

MLRunResult mlmc_run(const MultilevelProblem& prob, double budget,
                     const std::vector<uint64_t>& n_init, uint64_t seed) {
  prob.validate();
  size_t L = prob.levels;
  if (n_init.size() != L) throw std::invalid_argument("mlmc: initial sizes must match levels");
  double init_cost = 0.0;
  for (size_t l = 0; l < L; ++l) init_cost += double(n_init[l]) * prob.cost[l];
  if (init_cost > budget) throw std::invalid_argument("mlmc: initial allocation exceeds budget");

  Accounting acct{0.0, budget};
  std::vector<uint64_t> n(L, 0), n_next(n_init);
  std::vector<double> sum(L, 0.0), sumsq(L, 0.0);
  std::vector<Rng> rngs;
  for (size_t l = 0; l < L; ++l) rngs.push_back(rng_stream(seed, 0x317c, l));
  std::vector<size_t> update(L);
  for (size_t l = 0; l < L; ++l) update[l] = l;

  MLRunResult res;
  std::vector<double> x(prob.d);
  while (true) {
    for (size_t l : update) {
      for (uint64_t i = n[l]; i < n_next[l]; ++i) {
        for (size_t j = 0; j < prob.dl[l]; ++j) x[j] = rngs[l].next_double();
        double v = prob.difference(l, x.data());
        sum[l] += v;
        sumsq[l] += v * v;
      }
      acct.spent += double(n_next[l] - n[l]) * prob.cost[l];
      n[l] = n_next[l];
    }
    std::vector<double> util(L, 0.0);
    std::vector<size_t> feas;
    for (size_t l = 0; l < L; ++l) {
      double mean = sum[l] / double(n[l]);
      double var = n[l] > 1 ? (sumsq[l] - double(n[l]) * mean * mean) / double(n[l] - 1) : 0.0;
      util[l] = std::max(var, 0.0) / (double(n[l]) * prob.cost[l]);
      if (acct.feasible(double(n[l]) * prob.cost[l])) feas.push_back(l);
    }
    if (feas.empty()) break;
    size_t pick = lowest_argmax(feas, util);
    res.trace.push_back({pick, n[pick], util[pick]});
    update.assign(1, pick);
    n_next[pick] = 2 * n[pick];
  }

  double est = 0.0, var = 0.0;
  for (size_t l = 0; l < L; ++l) {
    double mean = sum[l] / double(n[l]);
    double v = n[l] > 1 ? (sumsq[l] - double(n[l]) * mean * mean) / double(n[l] - 1) : 0.0;
    est += mean;
    var += std::max(v, 0.0) / double(n[l]);
  }
  res.estimate = est;
  res.stderr_est = std::sqrt(var);
  res.samples = n;
  res.spent = acct.spent;
  return res;
}

MLRunResult mlqmc_run(const MultilevelProblem& prob, double budget, size_t R,
                      const std::vector<uint64_t>& n_init, uint64_t seed, SeqKind sequence) {
  prob.validate();
  size_t L = prob.levels;
  if (R < 2) throw std::invalid_argument("mlqmc: need at least R = 2 replications");
  if (n_init.size() != L) throw std::invalid_argument("mlqmc: initial sizes must match levels");
  for (uint64_t nl : n_init)
    if (!is_pow2(nl)) throw std::invalid_argument("mlqmc: initial sizes must be powers of two");
  double init_cost = 0.0;
  for (size_t l = 0; l < L; ++l) init_cost += double(R) * double(n_init[l]) * prob.cost[l];
  if (init_cost > budget) throw std::invalid_argument("mlqmc: initial allocation exceeds budget");

  // R independently randomized sequences per level
  std::vector<std::function<PointSet(uint64_t, uint64_t)>> gen(L * R);
  for (size_t l = 0; l < L; ++l)
    for (size_t r = 0; r < R; ++r) {
      uint64_t s = hash_mix(seed, 0xa10c ^ (l * 131 + r));
      if (sequence == SeqKind::lattice) {
        LatticeConfig cfg = LatticeConfig::make_random_shift(prob.dl[l], s);
        gen[l * R + r] = [cfg](uint64_t a, uint64_t b) { return lattice_points(cfg, a, b); };
      } else {
        DigitalNetConfig cfg = DigitalNetConfig::make_default(prob.dl[l], NetRand::lms_plus_shift, s);
        gen[l * R + r] = [cfg](uint64_t a, uint64_t b) { return digital_net_points(cfg, a, b); };
      }
    }

  Accounting acct{0.0, budget};
  std::vector<uint64_t> n(L, 0), n_next(n_init);
  std::vector<double> sum(L * R, 0.0);
  std::vector<size_t> update(L);
  for (size_t l = 0; l < L; ++l) update[l] = l;

  MLRunResult res;
  while (true) {
    for (size_t l : update) {
      for (size_t r = 0; r < R; ++r) {
        PointSet pts = gen[l * R + r](n[l], n_next[l]);
        for (size_t i = 0; i < pts.n; ++i) sum[l * R + r] += prob.difference(l, pts.row(i));
      }
      acct.spent += double(R) * double(n_next[l] - n[l]) * prob.cost[l];
      n[l] = n_next[l];
    }
    std::vector<double> util(L, 0.0);
    std::vector<size_t> feas;
    for (size_t l = 0; l < L; ++l) {
      double mu = 0.0;
      for (size_t r = 0; r < R; ++r) mu += sum[l * R + r] / double(n[l]);
      mu /= double(R);
      double var = 0.0;
      for (size_t r = 0; r < R; ++r) {
        double m = sum[l * R + r] / double(n[l]);
        var += (m - mu) * (m - mu);
      }
      var /= double(R - 1);
      util[l] = var / (double(R) * double(n[l]) * prob.cost[l]);
      if (acct.feasible(double(R) * double(n[l]) * prob.cost[l])) feas.push_back(l);
    }
    if (feas.empty()) break;
    size_t pick = lowest_argmax(feas, util);
    res.trace.push_back({pick, n[pick], util[pick]});
    update.assign(1, pick);
    n_next[pick] = 2 * n[pick];
  }

  double est = 0.0, var = 0.0;
  for (size_t l = 0; l < L; ++l) {
    double mu = 0.0;
    for (size_t r = 0; r < R; ++r) mu += sum[l * R + r] / double(n[l]);
    mu /= double(R);
    est += mu;
    double v = 0.0;
    for (size_t r = 0; r < R; ++r) {
      double m = sum[l * R + r] / double(n[l]);
      v += (m - mu) * (m - mu);
    }
    var += v / double(R - 1) / double(R);
  }
  res.estimate = est;
  res.stderr_est = std::sqrt(var);
  res.samples.resize(L);
  for (size_t l = 0; l < L; ++l) res.samples[l] = n[l] * R;
  res.spent = acct.spent;
  return res;
}

size_t bqmc_level_select(const std::vector<size_t>& feasible, const std::vector<double>& cost,
                         const std::vector<uint64_t>& n,
                         const std::function<double(size_t, uint64_t)>& projected_variance) {
  if (feasible.empty()) throw std::invalid_argument("bqmc_level_select: empty feasible set");
  // order by non-increasing cost of doubling, ties by level index
  std::vector<size_t> order = feasible;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return double(n[a]) * cost[a] > double(n[b]) * cost[b];
  });
  size_t champ = order[0];
  for (size_t k = 1; k < order.size(); ++k) {
    size_t lp = order[k];
    double drop_champ =
        projected_variance(champ, n[champ]) - projected_variance(champ, 2 * n[champ]);
    double nhat = double(n[champ]) * cost[champ] / cost[lp] + double(n[lp]);
    double drop_lp = projected_variance(lp, n[lp]) - projected_variance(lp, uint64_t(nhat));
    if (drop_lp >= drop_champ) champ = lp;
  }
  return champ;
}

MLRunResult bqmc_run(const MultilevelProblem& prob, double budget,
                     const std::vector<uint64_t>& n_init, uint64_t seed, const BqmcOptions& opt) {
  prob.validate();
  size_t L = prob.levels;
  if (n_init.size() != L) throw std::invalid_argument("bqmc: initial sizes must match levels");
  for (uint64_t nl : n_init)
    if (!is_pow2(nl) || nl < 2)
      throw std::invalid_argument("bqmc: initial sizes must be powers of two >= 2");
  double init_cost = 0.0;
  for (size_t l = 0; l < L; ++l) init_cost += double(n_init[l]) * prob.cost[l];
  if (init_cost > budget) throw std::invalid_argument("bqmc: initial allocation exceeds budget");

  // one independently randomized sequence and fast GP per level
  std::vector<FastGP> gps;
  gps.reserve(L);
  for (size_t l = 0; l < L; ++l) {
    uint64_t s = hash_mix(seed, 0xb90c ^ l);
    if (opt.kernel == BqmcOptions::KernelChoice::lattice_si1) {
      SequenceHandle seq = SequenceHandle::make_lattice(
          LatticeConfig::make_random_shift(prob.dl[l], s));
      gps.emplace_back(std::move(seq), KernelSpec::si(prob.dl[l], 1), opt.nugget);
    } else {
      SequenceHandle seq = SequenceHandle::make_dnet(
          DigitalNetConfig::make_default(prob.dl[l], NetRand::digital_shift, s));
      gps.emplace_back(std::move(seq), KernelSpec::dsi_adaptive(prob.dl[l]), opt.nugget);
    }
  }

  Accounting acct{0.0, budget};
  std::vector<uint64_t> n(L, 0), n_next(n_init);
  std::vector<size_t> update(L);
  for (size_t l = 0; l < L; ++l) update[l] = l;

  MLRunResult res;
  std::vector<double> mu_hat(L, 0.0), v_hat(L, 0.0);
  while (true) {
    for (size_t l : update) {
      PointSet block = gps[l].sequence().points(n[l], n_next[l]);
      std::vector<double> ynew(block.n);
      for (size_t i = 0; i < block.n; ++i) ynew[i] = prob.difference(l, block.row(i));
      gps[l].extend_data(ynew);
      acct.spent += double(n_next[l] - n[l]) * prob.cost[l];
      n[l] = n_next[l];
      gps[l].fit(GPLoss::nmll, opt.fit_iterations);
      gps[l].set_tau(gps[l].optimal_tau(GPLoss::nmll));
      auto cub = gps[l].bayes_cubature();
      mu_hat[l] = cub.mean;
      v_hat[l] = std::max(cub.variance, 0.0);
    }
    std::vector<size_t> feas;
    for (size_t l = 0; l < L; ++l)
      if (acct.feasible(double(n[l]) * prob.cost[l]) &&
          2 * n[l] <= gps[l].sequence().max_points())
        feas.push_back(l);
    if (feas.empty()) break;
    size_t pick = bqmc_level_select(
        feas, prob.cost, n, [&](size_t l, uint64_t nh) { return gps[l].projected_variance(nh); });
    res.trace.push_back({pick, n[pick], v_hat[pick]});
    update.assign(1, pick);
    n_next[pick] = 2 * n[pick];
  }

  double est = 0.0;
  for (size_t l = 0; l < L; ++l) est += mu_hat[l];
  double se;
  if (opt.cauchy_schwarz_aggregation) {
    double s = 0.0;
    for (size_t l = 0; l < L; ++l) s += std::sqrt(v_hat[l]);
    se = s;
  } else {
    double s = 0.0;
    for (size_t l = 0; l < L; ++l) s += v_hat[l];
    se = std::sqrt(s);
  }
  res.estimate = est;
  res.stderr_est = se;
  res.samples = n;
  res.spent = acct.spent;
  return res;
}

}  // namespace qmcgp
