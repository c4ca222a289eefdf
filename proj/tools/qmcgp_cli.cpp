// Command-line front end: point generation, fast transforms, kernel and
// integration debugging, adaptive integration, and multilevel runs, with
// CSV/JSON output suitable for plotting.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qmcgp/cubature.hpp"
#include "qmcgp/fastxform.hpp"
#include "qmcgp/gp.hpp"
#include "qmcgp/multilevel.hpp"
#include "qmcgp/problems.hpp"
#include "qmcgp/stats.hpp"

using json = nlohmann::json;
using namespace qmcgp;

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_manifest(const std::string& out_path, const std::string& subcommand,
                    const json& flags) {
  json m;
  m["subcommand"] = subcommand;
  m["flags"] = flags;
  m["version"] = "qmcgp 0.1";
  m["output"] = out_path;
  std::ofstream f(out_path + ".manifest.json");
  f << m.dump(2) << "\n";
}

std::string data_dir() {
  const char* env = std::getenv("QMCGP_DATA_DIR");
  return env ? env : "";
}

struct GenArgs {
  std::string seq = "dnet", rand = "none", order = "natural", out = "points.csv";
  std::string vector_file, matrix_file;
  uint64_t n = 16, seed = 0;
  size_t d = 2;
  int alpha = 1;
};

PointSet generate_points(const GenArgs& a) {
  auto resolve = [&](const std::string& f) {
    if (f.empty() || f[0] == '/' || data_dir().empty()) return f;
    return data_dir() + "/" + f;
  };
  if (a.seq == "iid") return iid_uniform(a.seed, a.n, a.d);
  if (a.seq == "lattice") {
    LatticeConfig cfg;
    if (!a.vector_file.empty()) {
      auto g = load_lattice_file(resolve(a.vector_file));
      if (g.size() < a.d) throw std::runtime_error("vector file has too few dimensions");
      cfg.g.assign(g.begin(), g.begin() + a.d);
    } else {
      cfg = LatticeConfig::make_default(a.d);
    }
    cfg.order = a.order == "linear" ? PointOrder::linear : PointOrder::radical_inverse;
    if (a.rand == "shift") {
      Rng rng = rng_stream(a.seed, 0x5a5a);
      cfg.shift.resize(a.d);
      for (auto& s : cfg.shift) s = rng.next_double();
    } else if (a.rand != "none") {
      throw std::runtime_error("lattice randomization must be none or shift");
    }
    return lattice_points(cfg, a.n);
  }
  if (a.seq == "dnet") {
    GeneratingMatrices base = a.matrix_file.empty()
                                  ? default_sobol_matrices(a.d * size_t(a.alpha))
                                  : load_dnet_file(resolve(a.matrix_file));
    if (base.d < a.d * size_t(a.alpha))
      throw std::runtime_error("matrix file has too few dimensions");
    base.d = a.d * size_t(a.alpha);
    base.cols.resize(base.d * size_t(base.m_max));
    NetRand r = NetRand::none;
    if (a.rand == "ds") r = NetRand::digital_shift;
    else if (a.rand == "lms-ds") r = NetRand::lms_plus_shift;
    else if (a.rand == "nus") r = NetRand::nus;
    else if (a.rand == "permute") r = NetRand::permute;
    else if (a.rand != "none") throw std::runtime_error("unknown net randomization");
    PointOrder order = a.order == "gray" ? PointOrder::gray_code : PointOrder::radical_inverse;
    auto cfg = DigitalNetConfig::make(std::move(base), r, a.seed, a.alpha, order);
    return digital_net_points(cfg, 0, a.n);
  }
  if (a.seq == "halton") {
    HaltonRand r = HaltonRand::none;
    if (a.rand == "ds" || a.rand == "shift") r = HaltonRand::digital_shift;
    else if (a.rand == "lms-ds") r = HaltonRand::lms_permutation;
    else if (a.rand == "nus") r = HaltonRand::nus;
    else if (a.rand != "none") throw std::runtime_error("unknown halton randomization");
    return halton_points(HaltonConfig::make(a.d, r, a.seed), a.n);
  }
  throw std::runtime_error("unknown sequence kind: " + a.seq);
}

int cmd_gen(const GenArgs& a) {
  PointSet ps = generate_points(a);
  std::ofstream f(a.out);
  for (size_t j = 0; j < ps.d; ++j) f << "x" << j << (j + 1 == ps.d ? "\n" : ",");
  for (size_t i = 0; i < ps.n; ++i)
    for (size_t j = 0; j < ps.d; ++j) f << fmt17(ps.at(i, j)) << (j + 1 == ps.d ? "\n" : ",");
  json flags = {{"seq", a.seq},     {"n", a.n},         {"d", a.d},
                {"rand", a.rand},   {"alpha", a.alpha}, {"order", a.order},
                {"seed", a.seed},   {"vector-file", a.vector_file},
                {"matrix-file", a.matrix_file}};
  write_manifest(a.out, "gen", flags);
  return 0;
}

int cmd_xform(const std::string& kind, const std::string& in, size_t col,
              const std::string& out) {
  std::ifstream f(in);
  if (!f) throw std::runtime_error(in + ": cannot open");
  std::string line;
  std::getline(f, line);  // header
  std::vector<double> y;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    for (size_t c = 0; std::getline(ss, cell, ','); ++c)
      if (c == col) y.push_back(std::stod(cell));
  }
  std::ofstream g(out);
  g << kind << "\n";
  if (kind == "fwht") {
    fwht(y);
    for (double v : y) g << fmt17(v) << "\n";
  } else {
    std::vector<cdouble> z(y.begin(), y.end());
    if (kind == "fftbr")
      fftbr(z);
    else if (kind == "ifftbr")
      ifftbr(z);
    else
      throw std::runtime_error("unknown transform: " + kind);
    for (auto v : z) g << fmt17(v.real()) << "," << fmt17(v.imag()) << "\n";
  }
  return 0;
}

int cmd_kernel(const std::string& family, double alpha, double x, double y) {
  double v;
  if (family == "si")
    v = si_univariate(int(alpha), 0, 0, x, y);
  else if (family == "dsi-omega")
    v = dsi_omega(int(alpha), x, y);
  else if (family == "dsi-k3dot")
    v = dsi_kdddot(alpha, x, y);
  else if (family == "dsi-order1")
    v = dsi_order1(x, y);
  else
    throw std::runtime_error("unknown kernel family: " + family);
  std::cout << fmt17(v) << "\n";
  return 0;
}

struct IntegrateArgs {
  std::string problem = "keister", algo = "student-t";
  size_t d = 0, R = 8;
  double abs_tol = 1e-3, rel_tol = 0.0, alpha = 0.05, inflation = 1.2;
  uint64_t seed = 7, n_max = uint64_t(1) << 20;
  std::string save_model, trace;
};

int cmd_integrate(const IntegrateArgs& a) {
  TestProblem prob = get_problem(a.problem, a.d);
  ErrorMetric tol{ErrorMetric::Mode::abs_or_rel, a.abs_tol, a.rel_tol};
  if (!tol.satisfiable()) throw std::runtime_error("abs-tol and rel-tol cannot both be zero");

  if (a.algo == "clt" || a.algo == "student-t") {
    auto f = prob.f;
    ArrayQoiProblem qoi = ArrayQoiProblem::identity(
        prob.d, 1,
        [f](const double* x, const uint8_t* active, double* out) {
          if (active[0]) out[0] = f(x);
        },
        tol, a.alpha);
    ArrayQoiOptions opt;
    opt.method = a.algo == "clt" ? BoundMethod::clt_iid : BoundMethod::student_t_replicated;
    opt.replications = a.R;
    opt.inflation = a.inflation;
    opt.seed = a.seed;
    opt.n_max = a.n_max;
    auto res = adaptive_array_qoi(qoi, opt);
    if (!a.trace.empty()) {
      std::ofstream tf(a.trace);
      tf << "n,s_lo,s_hi,stopped\n";
      for (const auto& row : res.trace)
        tf << row.n << "," << fmt17(row.s_bounds[0].lo) << "," << fmt17(row.s_bounds[0].hi)
           << "," << int(row.s_flags[0]) << "\n";
    }
    std::cout << "estimate " << fmt17(res.s_hat[0]) << "\n";
    std::cout << "bounds [" << fmt17(res.s_bounds[0].lo) << ", " << fmt17(res.s_bounds[0].hi)
              << "]\n";
    std::cout << "n " << res.n << "\n";
    return res.converged ? 0 : 2;
  }
  if (a.algo == "bayes") {
    SequenceHandle seq = SequenceHandle::make_dnet(
        DigitalNetConfig::make_default(prob.d, NetRand::digital_shift, a.seed));
    FastGP gp(seq, KernelSpec::dsi_adaptive(prob.d));
    double q = norm_ppf(1.0 - a.alpha / 2.0);
    uint64_t n = 256;
    PointSet pts = seq.points(0, n);
    std::vector<double> y(n);
    for (uint64_t i = 0; i < n; ++i) y[i] = prob.f(pts.row(i));
    gp.set_data(y);
    bool first_fit = true;
    while (true) {
      // full optimization once, light refreshes after each doubling
      gp.fit(GPLoss::nmll, first_fit ? 30 : 10);
      first_fit = false;
      gp.set_tau(gp.optimal_tau(GPLoss::nmll));
      auto cub = gp.bayes_cubature();
      double hw = q * std::sqrt(std::max(cub.variance, 0.0));
      auto est = optimal_estimate_and_stop(cub.mean - hw, cub.mean + hw,
                                           [&](double s) { return tol(s); });
      bool budget_hit = 2 * gp.n() > a.n_max;
      if (est.second || budget_hit) {
        std::cout << "estimate " << fmt17(est.first) << "\n";
        std::cout << "bounds [" << fmt17(cub.mean - hw) << ", " << fmt17(cub.mean + hw) << "]\n";
        std::cout << "n " << gp.n() << "\n";
        if (est.second && !a.save_model.empty()) {
          std::ofstream mf(a.save_model);
          gp.save(mf);
        }
        return est.second ? 0 : 2;
      }
      PointSet more = seq.points(gp.n(), 2 * gp.n());
      std::vector<double> y2(more.n);
      for (size_t i = 0; i < more.n; ++i) y2[i] = prob.f(more.row(i));
      gp.extend_data(y2);
    }
  }
  throw std::runtime_error("unknown algorithm: " + a.algo);
}

struct ConvergenceArgs {
  std::string algo = "rqmc", problem = "sumxex", out = "convergence.csv";
  size_t d = 0, seeds = 10, R = 8;
  std::string budgets = "256,512,1024,2048,4096";
  uint64_t seed0 = 1;
  bool baker = false;
};

int cmd_convergence(const ConvergenceArgs& a) {
  TestProblem prob = get_problem(a.problem, a.d);
  std::vector<uint64_t> budgets;
  {
    std::istringstream ss(a.budgets);
    std::string tok;
    while (std::getline(ss, tok, ',')) budgets.push_back(std::stoull(tok));
  }
  std::ofstream f(a.out);
  f << "budget,seed,true_error,stderr\n";
  std::vector<double> med_err;
  for (uint64_t budget : budgets) {
    std::vector<double> errs;
    for (size_t s = 0; s < a.seeds; ++s) {
      uint64_t seed = hash_mix(a.seed0, s);
      double est = 0.0, se = 0.0;
      if (a.algo == "mc") {
        PointSet pts = iid_uniform(seed, budget, prob.d);
        double sum = 0.0, sumsq = 0.0;
        for (size_t i = 0; i < pts.n; ++i) {
          double v = prob.f(pts.row(i));
          sum += v;
          sumsq += v * v;
        }
        est = sum / double(budget);
        double var = (sumsq - double(budget) * est * est) / double(budget - 1);
        se = std::sqrt(std::max(var, 0.0) / double(budget));
      } else if (a.algo == "rqmc") {
        uint64_t n = std::max<uint64_t>(budget / a.R, 2);
        std::vector<double> means(a.R);
        for (size_t r = 0; r < a.R; ++r) {
          auto cfg = DigitalNetConfig::make_default(prob.d, NetRand::lms_plus_shift,
                                                    hash_mix(seed, r));
          PointSet pts = digital_net_points(cfg, 0, n);
          double sum = 0.0;
          for (size_t i = 0; i < pts.n; ++i) sum += prob.f(pts.row(i));
          means[r] = sum / double(n);
        }
        double mu = 0.0;
        for (double m : means) mu += m;
        mu /= double(a.R);
        double var = 0.0;
        for (double m : means) var += (m - mu) * (m - mu);
        var /= double(a.R - 1);
        est = mu;
        se = std::sqrt(var / double(a.R));
      } else if (a.algo == "bqmc") {
        SequenceHandle seq = SequenceHandle::make_dnet(
            DigitalNetConfig::make_default(prob.d, NetRand::digital_shift, seed));
        FastGP gp(seq, KernelSpec::dsi_adaptive(prob.d));
        uint64_t n = 1;
        while (2 * n <= budget) n *= 2;
        PointSet pts = seq.points(0, n);
        std::vector<double> y(n);
        for (uint64_t i = 0; i < n; ++i) y[i] = prob.f(pts.row(i));
        gp.set_data(y);
        gp.fit(GPLoss::nmll, 20);
        gp.set_tau(gp.optimal_tau(GPLoss::nmll));
        auto cub = gp.bayes_cubature();
        est = cub.mean;
        se = std::sqrt(std::max(cub.variance, 0.0));
      } else {
        throw std::runtime_error("unknown algorithm: " + a.algo);
      }
      double err = std::fabs(est - prob.reference);
      errs.push_back(err);
      f << budget << "," << s << "," << fmt17(err) << "," << fmt17(se) << "\n";
    }
    std::sort(errs.begin(), errs.end());
    med_err.push_back(errs[errs.size() / 2]);
  }
  // least-squares slope of log2 median error against log2 budget
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t m = budgets.size();
  for (size_t i = 0; i < m; ++i) {
    double lx = std::log2(double(budgets[i]));
    double ly = std::log2(std::max(med_err[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double slope = (double(m) * sxy - sx * sy) / (double(m) * sxx - sx * sx);
  f << "# median_slope," << fmt17(slope) << "\n";
  std::cout << "median slope " << fmt17(slope) << "\n";
  return 0;
}

struct MlArgs {
  std::string problem = "elliptic", algo = "bqmc", out = "ml_report.json";
  size_t levels = 4, R = 8;
  double budget = 4096;
  uint64_t seed = 7;
  uint64_t n_init = 16;
};

int cmd_ml(const MlArgs& a) {
  MultilevelProblem prob =
      a.problem == "asian-ml" ? multilevel_option(a.levels) : elliptic_1d(a.levels);
  std::vector<uint64_t> init(prob.levels, a.n_init);
  MLRunResult res;
  if (a.algo == "mc")
    res = mlmc_run(prob, a.budget, init, a.seed);
  else if (a.algo == "rqmc")
    res = mlqmc_run(prob, a.budget, a.R, init, a.seed);
  else if (a.algo == "bqmc")
    res = bqmc_run(prob, a.budget, init, a.seed);
  else
    throw std::runtime_error("unknown algorithm: " + a.algo);
  json rep;
  rep["problem"] = prob.name;
  rep["algorithm"] = a.algo;
  rep["budget"] = a.budget;
  rep["estimate"] = res.estimate;
  rep["stderr"] = res.stderr_est;
  rep["samples"] = res.samples;
  rep["spent"] = res.spent;
  json trace = json::array();
  for (const auto& t : res.trace)
    trace.push_back({{"level", t.level}, {"n", t.n_new}, {"utility", t.utility}});
  rep["trace"] = trace;
  std::ofstream f(a.out);
  f << rep.dump(2) << "\n";
  std::cout << "estimate " << fmt17(res.estimate) << " stderr " << fmt17(res.stderr_est) << "\n";
  return 0;
}

int cmd_rerun(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw std::runtime_error(manifest_path + ": cannot open");
  json m = json::parse(f);
  if (m["subcommand"] != "gen") throw std::runtime_error("rerun supports gen manifests");
  GenArgs a;
  const auto& fl = m["flags"];
  a.seq = fl["seq"];
  a.n = fl["n"];
  a.d = fl["d"];
  a.rand = fl["rand"];
  a.alpha = fl["alpha"];
  a.order = fl["order"];
  a.seed = fl["seed"];
  a.vector_file = fl["vector-file"];
  a.matrix_file = fl["matrix-file"];
  a.out = m["output"];
  return cmd_gen(a);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmcgp: randomized low-discrepancy sequences, fast kernel methods, and adaptive "
               "(Quasi-)Monte Carlo"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cg = app.add_subcommand("gen", "generate a point set as CSV");
  cg->add_option("--seq", gen.seq, "lattice|dnet|halton|iid");
  cg->add_option("--n", gen.n);
  cg->add_option("--d", gen.d);
  cg->add_option("--rand", gen.rand, "none|shift|ds|lms-ds|nus|permute");
  cg->add_option("--alpha", gen.alpha, "interlacing order for dnet");
  cg->add_option("--order", gen.order, "natural|gray|linear");
  cg->add_option("--seed", gen.seed);
  cg->add_option("--vector-file", gen.vector_file);
  cg->add_option("--matrix-file", gen.matrix_file);
  cg->add_option("--out", gen.out);

  std::string xf_kind = "fwht", xf_in, xf_out = "xform.csv";
  size_t xf_col = 0;
  auto* cx = app.add_subcommand("xform", "apply a fast transform to a CSV column");
  cx->add_option("--kind", xf_kind, "fwht|fftbr|ifftbr");
  cx->add_option("--in", xf_in)->required();
  cx->add_option("--col", xf_col);
  cx->add_option("--out", xf_out);

  std::string k_family = "si";
  double k_alpha = 1, k_x = 0.25, k_y = 0.5;
  auto* ck = app.add_subcommand("kernel", "evaluate a univariate kernel");
  ck->add_option("--family", k_family, "si|dsi-omega|dsi-k3dot|dsi-order1");
  ck->add_option("--alpha", k_alpha);
  ck->add_option("--x", k_x);
  ck->add_option("--y", k_y);

  IntegrateArgs ia;
  auto* ci = app.add_subcommand("integrate", "adaptive integration of a named problem");
  ci->add_option("--problem", ia.problem);
  ci->add_option("--d", ia.d);
  ci->add_option("--algo", ia.algo, "clt|student-t|bayes");
  ci->add_option("--abs-tol", ia.abs_tol);
  ci->add_option("--rel-tol", ia.rel_tol);
  ci->add_option("--alpha", ia.alpha);
  ci->add_option("--R", ia.R);
  ci->add_option("--inflation", ia.inflation);
  ci->add_option("--seed", ia.seed);
  ci->add_option("--n-max", ia.n_max);
  ci->add_option("--save-model", ia.save_model);
  ci->add_option("--trace", ia.trace, "per-iteration CSV of (n, bounds, flags)");

  ConvergenceArgs ca;
  auto* cc = app.add_subcommand("convergence", "error-vs-budget study");
  cc->add_option("--algo", ca.algo, "mc|rqmc|bqmc");
  cc->add_option("--problem", ca.problem);
  cc->add_option("--d", ca.d);
  cc->add_option("--budgets", ca.budgets, "comma-separated budgets");
  cc->add_option("--seeds", ca.seeds);
  cc->add_option("--R", ca.R);
  cc->add_option("--seed", ca.seed0);
  cc->add_option("--out", ca.out);

  MlArgs ml;
  auto* cm = app.add_subcommand("ml", "budgeted multilevel run");
  cm->add_option("--problem", ml.problem, "elliptic|asian-ml");
  cm->add_option("--algo", ml.algo, "mc|rqmc|bqmc");
  cm->add_option("--budget", ml.budget);
  cm->add_option("--levels", ml.levels);
  cm->add_option("--R", ml.R);
  cm->add_option("--seed", ml.seed);
  cm->add_option("--n-init", ml.n_init);
  cm->add_option("--out", ml.out);

  std::string rerun_path;
  auto* cr = app.add_subcommand("rerun", "re-execute a run from its manifest");
  cr->add_option("manifest", rerun_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cg->parsed()) return cmd_gen(gen);
    if (cx->parsed()) return cmd_xform(xf_kind, xf_in, xf_col, xf_out);
    if (ck->parsed()) return cmd_kernel(k_family, k_alpha, k_x, k_y);
    if (ci->parsed()) return cmd_integrate(ia);
    if (cc->parsed()) return cmd_convergence(ca);
    if (cm->parsed()) return cmd_ml(ml);
    if (cr->parsed()) return cmd_rerun(rerun_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
