#pragma once

#include <string>
#include <vector>

#include "wlab/distributions.hpp"
#include "wlab/dynamics.hpp"

namespace wlab {

enum class MeshKind { uniform, graded };

// Compressed sparse rows; enough structure for the matrix-vector products
// the coefficient estimates need.
struct SparseRowMatrix {
  int rows = 0, cols = 0;
  std::vector<int> row_ptr;  // rows + 1
  std::vector<int> col;
  std::vector<double> val;

  std::vector<double> apply(const std::vector<double>& x) const;
  // Y = A X for row-major X, Y of shape rows x k.
  void apply_block(const double* X, double* Y, int k) const;
};

// Ulam discretization of the transfer machinery of an interval map:
// L is the Lebesgue transfer matrix L[i][j] = lambda(I_i cap T^{-1} I_j) /
// lambda(I_i), h the invariant density per bin, nu = h * width the invariant
// probability, and K the kernel of the associated stationary chain (the
// nu-reversal of L).
struct UlamOperator {
  int m = 0;
  MeshKind mesh = MeshKind::uniform;
  double gamma = 0.0;
  std::vector<double> edges;   // m + 1
  SparseRowMatrix L;
  std::vector<double> h;       // density per bin
  std::vector<double> nu;      // invariant probability per bin
  std::vector<double> cum_nu;  // m + 1 prefix masses
  SparseRowMatrix K;

  double width(int i) const { return edges[i + 1] - edges[i]; }
  double midpoint(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  int bin_of(double x) const;
};

// Bin edges: uniform i/m, or graded (i/m)^{1/(1-gamma)} which resolves the
// density singularity h ~ x^{-gamma} of GPM maps.
std::vector<double> make_mesh(int m, MeshKind kind, double gamma);

UlamOperator build_ulam(const GpmMap& map, int m,
                        MeshKind mesh = MeshKind::graded);
UlamOperator build_ulam(const LsvMap& map, int m,
                        MeshKind mesh = MeshKind::graded);

struct AlphaEstimate {
  int lag = 0;
  double value = 0.0;
  int grid = 0;  // threshold grid resolution used
};

// alpha_1(n) = sup_x || E(1_{X_n <= x} | F_0) - F(x) ||_1 for the chain with
// kernel K and X = g(Y); the sup runs over a grid of g-image thresholds.
std::vector<AlphaEstimate> alpha1_profile(const UlamOperator& op,
                                          const Observable& g,
                                          const std::vector<int>& lags,
                                          int x_grid);
AlphaEstimate alpha1(const UlamOperator& op, const Observable& g, int lag,
                     int x_grid);

// alpha_2(n): adds the pair term sup over thresholds (x1,x2) and index pairs
// n <= i1 <= i2 with i2 - i1 in gap_grid; always >= alpha_1(n).
std::vector<AlphaEstimate> alpha2_profile(const UlamOperator& op,
                                          const Observable& g,
                                          const std::vector<int>& lags,
                                          int x_grid,
                                          const std::vector<int>& gap_grid);
AlphaEstimate alpha2(const UlamOperator& op, const Observable& g, int lag,
                     int x_grid, const std::vector<int>& gap_grid);

// Tabulated law of g under nu (monotone g required).
LawPtr pushforward_law(const UlamOperator& op, const Observable& g);

// Pool-adjacent-violators projection onto nonincreasing sequences.
std::vector<double> isotonic_nonincreasing(std::vector<double> v);

// Binary operator file: header (m, gamma, mesh kind), then row-major L and h.
void save_ulam(const UlamOperator& op, const std::string& path);
UlamOperator load_ulam(const std::string& path);

void save_density_csv(const UlamOperator& op, const std::string& path);

}  // namespace wlab
