#pragma once
// Scenario files, batch orchestration and bit-exact output formats.
//
// Config format: flat `key = value` lines grouped into [sections]
// ([protocol], [engine], [bounds], [sweep], [output]); '#' starts a comment.
// parse -> serialize -> parse is the identity on Scenario.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lcsim/analysis.hpp"
#include "lcsim/engine.hpp"

namespace lcsim {

struct Scenario {
  ProtocolParams params;
  uint32_t probe_interval = 0;
  bool cap_half_budget = false;
  uint64_t t_live = 0;  // liveness deadline in slots (0 with no probes = n/a)
  BoundParams bounds;
  // Sweep axes: (protocol/engine key, candidate values as config strings).
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep;
  uint32_t replications = 1;
  uint64_t max_runs = 10000;  // grid size x replications cap
  std::string out_dir = "out";
};

Scenario parse_scenario(const std::string& text);   // throws with line diagnostics
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& s);

// Assign one swept value; throws on unknown key or bad value.
void apply_axis(Scenario& s, const std::string& key, const std::string& value);

// 17-significant-digit float formatting ('.' decimal, no locale).
std::string fmt17(double x);

void write_trace_csv(const Trace& trace, std::ostream& os);
void write_merged_csv(const Trace& trace, std::ostream& os);

struct RunSummary {
  std::string gridpoint;
  uint64_t seed = 0;
  Metrics metrics;
  SafetyVerdict safety;
  LivenessResult liveness;
};

// {seed, growth, quality, idle, wasted, safety, liveness} followed by
// documented extras (gridpoint, onset diagnostics).
std::string summary_json_line(const RunSummary& r, uint32_t onset,
                              double growth_post_onset);

struct GridPoint {
  std::string name;                                          // "key=value_..."
  std::vector<std::pair<std::string, std::string>> assigns;  // axis settings
};

// Cartesian product of the sweep axes; throws when grid x replications
// exceeds max_runs.
std::vector<GridPoint> expand_grid(const Scenario& s);

// One run per (grid point x replication), seeds base..base+reps-1, executed
// with up to `jobs` parallel workers; outputs are written (when write_files)
// and returned in grid order regardless of worker count.
std::vector<RunSummary> run_batch(const Scenario& s, const std::string& out_dir,
                                  int jobs, bool write_files);

}  // namespace lcsim
