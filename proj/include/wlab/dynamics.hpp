#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wlab/distributions.hpp"

namespace wlab {

struct LsvMap {
  double gamma;  // in (0,1)
};

// One step of the two-branch intermittent map: x(1 + 2^g x^g) on [0,1/2),
// 2x - 1 on [1/2,1].
double lsv_step(double x, double gamma);

// Monotone C^1 branch on [lo, hi], mapping into [0,1].
struct GpmBranch {
  double lo, hi;
  std::function<double(double)> f;
};

struct GpmMap {
  std::vector<double> breakpoints;  // y_0 = 0 < y_1 < ... < y_d = 1
  std::vector<GpmBranch> branches;  // branch k lives on [y_k, y_{k+1}]
  double gamma = 0.0;               // neutral-branch exponent; 0 = uniformly expanding
};

GpmMap lsv_as_gpm(double gamma);
GpmMap doubling_map();  // 2x mod 1

// Applies the branch containing x; breakpoint ties go to the right branch.
double gpm_step(const GpmMap& map, double x);

enum class ProcessKind { lsv, gpm, iid, m_dependent };

struct ProcessSpec {
  ProcessKind kind = ProcessKind::iid;
  double gamma = 0.5;                    // lsv
  GpmMap gpm;                            // gpm
  Observable g;                          // observable for map kinds
  LawPtr iid_law;                        // iid draws
  int window = 0;                        // m-dependent window length m
  long burn_in = 10000;                  // map kinds only
  std::uint64_t seed = 0;
  std::optional<double> forced_x0;       // test hook: fixed start, first attempt only

  std::string describe() const;
  std::uint64_t hash() const;
};

struct SimulationStats {
  std::size_t restarts = 0;  // trajectories restarted after hitting an absorbing rounding artifact
};

// Emits g(theta^k x0) for k = 1..n after burn_in iterations (map kinds),
// n independent draws (iid), or a sliding-window mean of iid uniforms over
// m+1 terms (m-dependent). Deterministic given (spec, n).
std::vector<double> simulate_series(const ProcessSpec& spec, std::size_t n);
std::vector<double> simulate_series(const ProcessSpec& spec, std::size_t n,
                                    SimulationStats& stats);

void save_trajectory_csv(const ProcessSpec& spec,
                         const std::vector<double>& series,
                         const std::string& path);

}  // namespace wlab
