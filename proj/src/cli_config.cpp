#include "lcsim/cli_config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lcsim {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::runtime_error("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  try {
    size_t n;
    double d = std::stod(v, &n);
    if (n != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + v + "'");
  }
}

uint64_t to_u64(const std::string& v, int line) {
  try {
    size_t n;
    uint64_t u = std::stoull(v, &n);
    if (n != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    fail(line, "expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "expected true/false, got '" + v + "'");
}

// Returns false when the key does not belong to the section.
bool set_protocol_key(Scenario& s, const std::string& k, const std::string& v, int line) {
  ProtocolParams& p = s.params;
  if (k == "rho")
    p.rho = to_double(v, line);
  else if (k == "beta")
    p.beta = to_double(v, line);
  else if (k == "num_nodes")
    p.num_nodes = uint32_t(to_u64(v, line));
  else if (k == "budget_k")
    p.budget_k = uint32_t(to_u64(v, line));
  else if (k == "t_conf")
    p.t_conf = uint32_t(to_u64(v, line));
  else if (k == "horizon")
    p.horizon = uint32_t(to_u64(v, line));
  else if (k == "lottery_mode") {
    if (v == "binomial")
      p.lottery_mode = LotteryMode::Binomial;
    else if (v == "poisson")
      p.lottery_mode = LotteryMode::Poisson;
    else
      fail(line, "lottery_mode must be binomial or poisson");
  } else if (k == "seed")
    p.seed = to_u64(v, line);
  else if (k == "rule_id")
    p.rule_id = v;
  else if (k == "adversary_id")
    p.adversary_id = v;
  else if (k == "parallel_m")
    p.parallel_m = uint32_t(to_u64(v, line));
  else
    return false;
  return true;
}

bool set_engine_key(Scenario& s, const std::string& k, const std::string& v, int line) {
  if (k == "probe_interval")
    s.probe_interval = uint32_t(to_u64(v, line));
  else if (k == "cap_half_budget")
    s.cap_half_budget = to_bool(v, line);
  else if (k == "t_live")
    s.t_live = to_u64(v, line);
  else
    return false;
  return true;
}

bool set_bounds_key(Scenario& s, const std::string& k, const std::string& v, int line) {
  BoundParams& b = s.bounds;
  if (k == "epsilon1")
    b.epsilon1 = to_double(v, line);
  else if (k == "epsilon2")
    b.epsilon2 = to_double(v, line);
  else if (k == "epsilon3")
    b.epsilon3 = to_double(v, line);
  else if (k == "epsilon7")
    b.epsilon7 = to_double(v, line);
  else if (k == "kappa")
    b.kappa = to_double(v, line);
  else if (k == "t_window")
    b.t_window = to_double(v, line);
  else if (k == "gamma")
    b.gamma = to_double(v, line);
  else
    return false;
  return true;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string l = raw;
    size_t hash = l.find('#');
    if (hash != std::string::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') fail(line, "unterminated section header");
      section = l.substr(1, l.size() - 2);
      if (section != "protocol" && section != "engine" && section != "bounds" &&
          section != "sweep" && section != "output")
        fail(line, "unknown section [" + section + "]");
      continue;
    }
    size_t eq = l.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    std::string k = trim(l.substr(0, eq)), v = trim(l.substr(eq + 1));
    if (section.empty()) fail(line, "key before any [section]");
    bool ok = false;
    if (section == "protocol")
      ok = set_protocol_key(s, k, v, line);
    else if (section == "engine")
      ok = set_engine_key(s, k, v, line);
    else if (section == "bounds")
      ok = set_bounds_key(s, k, v, line);
    else if (section == "sweep") {
      if (k == "replications") {
        s.replications = uint32_t(to_u64(v, line));
        ok = true;
      } else if (k == "max_runs") {
        s.max_runs = to_u64(v, line);
        ok = true;
      } else if (k.rfind("axis.", 0) == 0) {
        s.sweep.emplace_back(k.substr(5), split(v, ','));
        ok = true;
      }
    } else if (section == "output") {
      if (k == "dir") {
        s.out_dir = v;
        ok = true;
      }
    }
    if (!ok) fail(line, "unknown key '" + k + "' in section [" + section + "]");
  }
  s.params.validate();
  for (const auto& [key, values] : s.sweep) {
    if (values.empty()) throw std::runtime_error("sweep axis '" + key + "' has no values");
    Scenario probe = s;
    for (const auto& v : values) apply_axis(probe, key, v);  // validates key/value
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string serialize_scenario(const Scenario& s) {
  const ProtocolParams& p = s.params;
  std::ostringstream o;
  o << "[protocol]\n";
  o << "rho = " << fmt17(p.rho) << "\n";
  o << "beta = " << fmt17(p.beta) << "\n";
  o << "num_nodes = " << p.num_nodes << "\n";
  o << "budget_k = " << p.budget_k << "\n";
  o << "t_conf = " << p.t_conf << "\n";
  o << "horizon = " << p.horizon << "\n";
  o << "lottery_mode = "
    << (p.lottery_mode == LotteryMode::Binomial ? "binomial" : "poisson") << "\n";
  o << "seed = " << p.seed << "\n";
  o << "rule_id = " << p.rule_id << "\n";
  o << "adversary_id = " << p.adversary_id << "\n";
  o << "parallel_m = " << p.parallel_m << "\n";
  o << "\n[engine]\n";
  o << "probe_interval = " << s.probe_interval << "\n";
  o << "cap_half_budget = " << (s.cap_half_budget ? "true" : "false") << "\n";
  o << "t_live = " << s.t_live << "\n";
  o << "\n[bounds]\n";
  o << "epsilon1 = " << fmt17(s.bounds.epsilon1) << "\n";
  o << "epsilon2 = " << fmt17(s.bounds.epsilon2) << "\n";
  o << "epsilon3 = " << fmt17(s.bounds.epsilon3) << "\n";
  o << "epsilon7 = " << fmt17(s.bounds.epsilon7) << "\n";
  o << "kappa = " << fmt17(s.bounds.kappa) << "\n";
  o << "t_window = " << fmt17(s.bounds.t_window) << "\n";
  o << "gamma = " << fmt17(s.bounds.gamma) << "\n";
  o << "\n[sweep]\n";
  o << "replications = " << s.replications << "\n";
  o << "max_runs = " << s.max_runs << "\n";
  for (const auto& [k, vals] : s.sweep) {
    o << "axis." << k << " = ";
    for (size_t i = 0; i < vals.size(); ++i) o << (i ? "," : "") << vals[i];
    o << "\n";
  }
  o << "\n[output]\n";
  o << "dir = " << s.out_dir << "\n";
  return o.str();
}

void apply_axis(Scenario& s, const std::string& key, const std::string& value) {
  if (set_protocol_key(s, key, value, 0)) return;
  if (set_engine_key(s, key, value, 0)) return;
  throw std::runtime_error("unknown sweep axis '" + key + "'");
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trace_csv(const Trace& trace, std::ostream& os) {
  os << "slot,Lmin";
  for (uint32_t n : trace.honest_ids) os << ",L_" << n;
  for (uint32_t n : trace.honest_ids) os << ",used_" << n;
  for (uint32_t n : trace.honest_ids) os << ",wasted_" << n;
  for (uint32_t n : trace.honest_ids) os << ",idle_" << n;
  os << ",unique,maxdl,events\n";
  for (const TraceRow& r : trace.rows) {
    os << r.slot << ',' << r.lmin;
    for (uint32_t v : r.len) os << ',' << v;
    for (uint32_t v : r.used) os << ',' << v;
    for (uint32_t v : r.wasted) os << ',' << v;
    for (uint32_t v : r.idle) os << ',' << v;
    os << ',' << (r.unique ? 1 : 0) << ',' << (r.maxdl ? 1 : 0) << ',' << r.events
       << '\n';
  }
}

void write_merged_csv(const Trace& trace, std::ostream& os) {
  os << "slot,instance,block_id,height\n";
  for (const MergedEntry& e : trace.merged)
    os << e.slot << ',' << e.instance << ',' << e.block << ',' << e.height << '\n';
}

std::string summary_json_line(const RunSummary& r, uint32_t onset,
                              double growth_post_onset) {
  std::ostringstream o;
  o << "{\"seed\": " << r.seed;
  o << ", \"growth\": " << fmt17(r.metrics.growth);
  o << ", \"quality\": " << fmt17(r.metrics.quality);
  o << ", \"idle\": " << fmt17(r.metrics.idle);
  o << ", \"wasted\": " << fmt17(r.metrics.wasted);
  o << ", \"safety\": " << (r.safety.safe ? "true" : "false");
  o << ", \"liveness\": \"";
  switch (r.liveness.verdict) {
    case LivenessVerdict::Live:
      o << "live";
      break;
    case LivenessVerdict::NotLive:
      o << "not-live";
      break;
    case LivenessVerdict::Inapplicable:
      o << "inapplicable";
      break;
  }
  o << "\"";
  // documented extras
  o << ", \"gridpoint\": \"" << r.gridpoint << "\"";
  o << ", \"onset\": " << onset;
  o << ", \"growth_post_onset\": " << fmt17(growth_post_onset);
  o << ", \"maxdl_ratio\": " << fmt17(r.metrics.maxdl_ratio);
  o << ", \"liveness_vacuous\": " << (r.liveness.vacuous ? "true" : "false");
  o << "}";
  return o.str();
}

std::vector<GridPoint> expand_grid(const Scenario& s) {
  std::vector<GridPoint> grid{GridPoint{"default", {}}};
  for (const auto& [key, values] : s.sweep) {
    std::vector<GridPoint> next;
    for (const GridPoint& g : grid) {
      for (const std::string& v : values) {
        GridPoint n = g;
        n.name = (g.assigns.empty() ? "" : g.name + "_") + key + "=" + v;
        n.assigns.emplace_back(key, v);
        next.push_back(std::move(n));
      }
    }
    grid = std::move(next);
  }
  uint64_t total = uint64_t(grid.size()) * std::max<uint32_t>(1, s.replications);
  if (total > s.max_runs)
    throw std::runtime_error("sweep grid x replications (" + std::to_string(total) +
                             ") exceeds max_runs (" + std::to_string(s.max_runs) + ")");
  return grid;
}

std::vector<RunSummary> run_batch(const Scenario& s, const std::string& out_dir,
                                  int jobs, bool write_files) {
  std::vector<GridPoint> grid = expand_grid(s);
  uint32_t reps = std::max<uint32_t>(1, s.replications);
  size_t total = grid.size() * reps;
  std::vector<RunSummary> results(total);
  std::vector<uint32_t> onsets(total, 0);
  std::vector<std::string> csvs(write_files ? total : 0);
  std::vector<std::string> merged(write_files ? total : 0);
  std::string error;
  if (jobs < 1) jobs = 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
  for (long long i = 0; i < (long long)total; ++i) {
    try {
      size_t gi = size_t(i) / reps;
      uint32_t rep = uint32_t(size_t(i) % reps);
      Scenario sc = s;
      for (const auto& [k, v] : grid[gi].assigns) apply_axis(sc, k, v);
      sc.params.seed = s.params.seed + rep;
      RunConfig rc{sc.params, sc.probe_interval, sc.cap_half_budget};
      Trace tr = run(rc);
      RunSummary r;
      r.gridpoint = grid[gi].name;
      r.seed = sc.params.seed;
      r.metrics = metrics(tr);
      r.safety = check_safety(tr);
      r.liveness = check_liveness(tr, sc.t_live);
      onsets[i] = tr.onset;
      if (write_files) {
        std::ostringstream csv;
        write_trace_csv(tr, csv);
        csvs[i] = csv.str();
        if (tr.params.parallel_m > 1) {
          std::ostringstream mcsv;
          write_merged_csv(tr, mcsv);
          merged[i] = mcsv.str();
        }
      }
      results[i] = std::move(r);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw std::runtime_error(error);
  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream summary(fs::path(out_dir) / "summary.jsonl", std::ios::binary);
    for (size_t i = 0; i < total; ++i) {
      fs::path dir = fs::path(out_dir) / results[i].gridpoint;
      fs::create_directories(dir);
      std::ofstream csv(dir / (std::to_string(results[i].seed) + ".csv"),
                        std::ios::binary);
      csv << csvs[i];
      if (!merged.empty() && !merged[i].empty()) {
        std::ofstream m(dir / (std::to_string(results[i].seed) + ".merged.csv"),
                        std::ios::binary);
        m << merged[i];
      }
      summary << summary_json_line(results[i], onsets[i],
                                   results[i].metrics.growth_post_onset)
              << "\n";
    }
  }
  return results;
}

}  // namespace lcsim
