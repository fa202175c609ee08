// lcsim — command-line front end: batch simulation, execution/trace analysis,
// and protocol parameter solving.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lcsim/analysis.hpp"
#include "lcsim/cli_config.hpp"
#include "lcsim/lottery_model.hpp"

using namespace lcsim;

namespace {

int cmd_simulate(const std::string& config, uint64_t seed, bool seed_set,
                 const std::string& out, int jobs) {
  Scenario s = load_scenario(config);
  if (seed_set) s.params.seed = seed;
  std::string dir = out.empty() ? s.out_dir : out;
  std::vector<RunSummary> rs = run_batch(s, dir, jobs, true);
  std::cerr << rs.size() << " run(s) written to " << dir << "\n";
  return 0;
}

// Reads the `unique` and `maxdl` columns of a trace CSV.
bool csv_maxdl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace: " + path);
  std::string header;
  if (!std::getline(f, header)) throw std::runtime_error("empty trace: " + path);
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  int iu = -1, im = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "unique") iu = int(i);
    if (cols[i] == "maxdl") im = int(i);
  }
  if (iu < 0 || im < 0) throw std::runtime_error("trace lacks unique/maxdl columns");
  std::string line;
  while (std::getline(f, line)) {
    std::stringstream ls(line);
    std::string cell;
    std::string u, m;
    for (int i = 0; std::getline(ls, cell, ','); ++i) {
      if (i == iu) u = cell;
      if (i == im) m = cell;
    }
    if (u == "1" && m == "0") return false;
  }
  return true;
}

void emit_verdict(const std::string& predicate, double value, double bound,
                  double empirical, uint64_t n) {
  std::cout << "{\"predicate\": \"" << predicate << "\", \"value\": " << fmt17(value)
            << ", \"bound\": " << fmt17(bound) << ", \"empirical\": " << fmt17(empirical)
            << ", \"n\": " << n << "}\n";
}

int cmd_analyze(const std::string& config, const std::vector<std::string>& predicates,
                uint64_t k, uint64_t n, const std::string& trace_path, uint64_t seed,
                bool seed_set) {
  if (predicates.empty()) return 0;
  Scenario s;
  if (!config.empty()) s = load_scenario(config);
  if (seed_set) s.params.seed = seed;
  BoundParams bp = s.bounds;
  if (bp.t_window == 0) bp.t_window = double(s.params.horizon);
  for (const std::string& pred : predicates) {
    if (pred == "maxdl") {
      if (trace_path.empty()) throw std::runtime_error("maxdl needs --trace");
      emit_verdict(pred, csv_maxdl(trace_path) ? 1.0 : 0.0, 0.0, 0.0, 1);
      continue;
    }
    // Execution-level predicates: Monte Carlo over n sampled executions.
    auto holds = [&](const Execution& e) {
      if (pred == "short-prefixes") return check_short_prefixes(e, uint32_t(k));
      if (pred == "few-long-chains") return check_few_long_chains(e, uint32_t(k));
      if (pred == "freq-pivots") return check_freq_pivots(e, uint32_t(k));
      if (pred == "pivot") return check_pivot(e, uint32_t(k));
      throw std::runtime_error("unknown predicate: " + pred);
    };
    double bound = 0.0;
    if (pred == "short-prefixes") {
      BoundParams b = bp;
      bound = bound_short_prefixes(s.params, b);
    } else if (pred == "few-long-chains") {
      bound = bound_few_long_chains(s.params, bp);
    } else if (pred == "freq-pivots") {
      BoundParams b = bp;
      b.gamma = double(k);
      bound = bound_freq_pivots(s.params, b).bound;
    }
    uint64_t fails = 0;
    double first = 0.0;
    for (uint64_t i = 0; i < n; ++i) {
      ProtocolParams p = s.params;
      p.seed = s.params.seed + i;
      Execution e = sample_execution(p);
      bool h = holds(e);
      if (i == 0) first = h ? 1.0 : 0.0;
      if (!h) ++fails;
    }
    emit_verdict(pred, first, bound, n ? double(fails) / double(n) : 0.0, n);
  }
  return 0;
}

int cmd_solve_params(double beta, double eps1, uint32_t k, uint32_t t_h, double kappa) {
  auto rho = solve_rho(beta, eps1);
  if (!rho) {
    std::cerr << "no positive rho: epsilon1 = " << fmt17(eps1)
              << " >= 1 - 2*beta = " << fmt17(1.0 - 2.0 * beta)
              << " (the security condition degenerates at rho -> 0)\n";
    return 1;
  }
  ProtocolParams p;
  p.rho = *rho;
  p.beta = beta;
  p.horizon = t_h;
  p.budget_k = k;
  DerivedConstants d = derive_constants(p);
  BoundParams bp;
  bp.epsilon1 = eps1;
  bp.kappa = kappa;
  FreqPivotsBound fp = bound_freq_pivots(p, bp);
  // The derived confirmation depth can exceed any representable horizon when
  // the pivot-rate constants underflow; report null rather than a bogus cast.
  bool gamma_finite = std::isfinite(fp.gamma) && fp.gamma < 9.0e18;
  uint64_t t_conf = gamma_finite ? uint64_t(std::ceil(fp.gamma)) : 0;
  bp.t_window = gamma_finite ? double(t_conf) : fp.gamma;
  ThroughputBounds tb = throughput_bounds(p, 1);
  std::cout << "{\"rho\": " << fmt17(*rho);
  std::cout << ", \"p\": " << fmt17(d.p) << ", \"p_u\": " << fmt17(d.p_u)
            << ", \"p_a\": " << fmt17(d.p_a);
  std::cout << ", \"theta\": " << fmt17(tb.theta)
            << ", \"phi_idle\": " << fmt17(tb.phi_idle);
  std::cout << ", \"w\": " << fmt17(fp.w) << ", \"v\": " << fmt17(fp.v) << ", \"gamma\": "
            << (std::isfinite(fp.gamma) ? fmt17(fp.gamma) : std::string("null"));
  if (gamma_finite)
    std::cout << ", \"t_conf\": " << t_conf << ", \"t_live\": " << uint64_t(2 * t_conf);
  else
    std::cout << ", \"t_conf\": null, \"t_live\": null";
  std::cout << ", \"bound_freq_pivots\": " << fmt17(fp.bound);
  std::cout << ", \"bound_short_prefixes\": " << fmt17(bound_short_prefixes(p, bp));
  std::cout << ", \"bound_few_long_chains_max\": "
            << fmt17(bound_few_long_chains(p, bp, Alpha3Reading::MaxOfTerms));
  std::cout << ", \"bound_few_long_chains_min\": "
            << fmt17(bound_few_long_chains(p, bp, Alpha3Reading::MinOfTerms));
  std::cout << "}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bandwidth-constrained longest-chain consensus simulator"};
  app.require_subcommand(1);

  std::string config, out, trace_path;
  uint64_t seed = 0, k = 4, n = 200;
  int jobs = 1;
  std::vector<std::string> predicates;
  double beta = 0.25, eps1 = 0.1, kappa = 20.0;
  uint32_t kk = 4, t_h = 100000;

  auto add_sim = [&](const std::string& name, const std::string& desc) {
    CLI::App* c = app.add_subcommand(name, desc);
    c->add_option("--config", config, "scenario file")->required();
    c->add_option("--seed", seed, "override base seed");
    c->add_option("--out", out, "output directory (overrides scenario)");
    c->add_option("--jobs", jobs, "parallel workers");
    return c;
  };
  CLI::App* sim = add_sim("simulate", "run the scenario's grid x replications");
  CLI::App* swp = add_sim("sweep", "alias of simulate");

  CLI::App* ana = app.add_subcommand("analyze", "evaluate predicates and bounds");
  ana->add_option("--config", config, "scenario file for parameters");
  ana->add_option("--predicate", predicates, "predicate id(s)");
  ana->add_option("--k", k, "predicate parameter (K, or gamma for freq-pivots)");
  ana->add_option("--n", n, "Monte Carlo sample count");
  ana->add_option("--trace", trace_path, "trace CSV (maxdl predicate)");
  ana->add_option("--seed", seed, "override base seed");

  CLI::App* sol = app.add_subcommand("solve-params", "solve the security condition");
  sol->add_option("--beta", beta, "adversarial fraction");
  sol->add_option("--epsilon1", eps1, "security slack");
  sol->add_option("--k", kk, "download budget K");
  sol->add_option("--t-h", t_h, "horizon T_h");
  sol->add_option("--kappa", kappa, "security parameter");

  CLI11_PARSE(app, argc, argv);
  try {
    bool seed_set = sim->count("--seed") > 0 || swp->count("--seed") > 0;
    if (sim->parsed() || swp->parsed())
      return cmd_simulate(config, seed, seed_set, out, jobs);
    if (ana->parsed())
      return cmd_analyze(config, predicates, k, n, trace_path, seed,
                         ana->count("--seed") > 0);
    if (sol->parsed()) return cmd_solve_params(beta, eps1, kk, t_h, kappa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
