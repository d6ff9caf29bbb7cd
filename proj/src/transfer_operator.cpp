#include "wlab/transfer_operator.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "wlab/quadrature.hpp"

namespace wlab {

std::vector<double> SparseRowMatrix::apply(const std::vector<double>& x) const {
  std::vector<double> y(rows, 0.0);
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) acc += val[e] * x[col[e]];
    y[i] = acc;
  }
  return y;
}

void SparseRowMatrix::apply_block(const double* X, double* Y, int k) const {
  std::fill(Y, Y + std::size_t(rows) * k, 0.0);
  for (int i = 0; i < rows; ++i) {
    double* yi = Y + std::size_t(i) * k;
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const double v = val[e];
      const double* xj = X + std::size_t(col[e]) * k;
      for (int c = 0; c < k; ++c) yi[c] += v * xj[c];
    }
  }
}

int UlamOperator::bin_of(double x) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto i = static_cast<long>(it - edges.begin()) - 1;
  i = std::clamp<long>(i, 0, m - 1);
  return int(i);
}

std::vector<double> make_mesh(int m, MeshKind kind, double gamma) {
  std::vector<double> edges(m + 1);
  const double power = (kind == MeshKind::graded && gamma > 0.0)
                           ? 1.0 / (1.0 - gamma)
                           : 1.0;
  for (int i = 0; i <= m; ++i) {
    edges[i] = std::pow(double(i) / double(m), power);
  }
  edges.front() = 0.0;
  edges.back() = 1.0;
  return edges;
}

namespace {

double invert_monotone(const std::function<double(double)>& f, double lo,
                       double hi, double target, bool increasing) {
  // bisection to 1e-13; branches are C^1 so this is robust
  for (int it = 0; it < 120 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool go_right = increasing ? (f(mid) < target) : (f(mid) > target);
    if (go_right) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Triplet {
  int i, j;
  double w;
};

// Invariant probability of a row-stochastic CSR matrix, via a direct sparse
// solve of nu (I - L) = 0 with the normalization sum(nu) = 1. Power
// iteration alone stalls on slowly mixing maps (the discretized spectral
// gap closes as the mesh refines near the neutral point), so the fixed
// point is solved directly and then verified against the stated residual.
std::vector<double> stationary_vector(const SparseRowMatrix& L) {
  const int m = L.rows;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(L.val.size() + 2 * m);
  for (int i = 0; i < m; ++i) {
    for (int e = L.row_ptr[i]; e < L.row_ptr[i + 1]; ++e) {
      const int j = L.col[e];
      if (j == m - 1) continue;  // that equation is replaced by the normalization
      trips.emplace_back(j, i, -L.val[e]);
    }
  }
  for (int i = 0; i < m - 1; ++i) trips.emplace_back(i, i, 1.0);
  for (int i = 0; i < m; ++i) trips.emplace_back(m - 1, i, 1.0);

  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.analyzePattern(A);
  solver.factorize(A);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("invariant density solve: factorization failed");
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs[m - 1] = 1.0;
  Eigen::VectorXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("invariant density solve: back-substitution failed");
  }

  std::vector<double> nu(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    nu[i] = std::max(0.0, x[i]);
    total += nu[i];
  }
  for (auto& v : nu) v /= total;

  // refinement sweeps double as the convergence check
  auto residual = [&](const std::vector<double>& v) {
    std::vector<double> w(m, 0.0);
    for (int i = 0; i < m; ++i) {
      for (int e = L.row_ptr[i]; e < L.row_ptr[i + 1]; ++e) {
        w[L.col[e]] += v[i] * L.val[e];
      }
    }
    double r = 0.0;
    for (int i = 0; i < m; ++i) r += std::abs(w[i] - v[i]);
    return std::make_pair(r, w);
  };
  auto [res, next] = residual(nu);
  for (int sweep = 0; sweep < 100 && res > 1e-12; ++sweep) {
    nu.swap(next);
    std::tie(res, next) = residual(nu);
  }
  if (res > 1e-10) {
    throw NumericalFailure("invariant density not converged, residual = " +
                           std::to_string(res));
  }
  return nu;
}

}  // namespace

UlamOperator build_ulam(const GpmMap& map, int m, MeshKind mesh) {
  if (m < 16) throw std::invalid_argument("build_ulam: m must be >= 16");
  UlamOperator op;
  op.m = m;
  op.mesh = mesh;
  op.gamma = map.gamma;
  op.edges = make_mesh(m, mesh, map.gamma);

  std::vector<Triplet> trips;
  for (const auto& br : map.branches) {
    const double flo = br.f(br.lo);
    const double fhi = br.f(br.hi);
    const bool increasing = fhi >= flo;
    const double img_lo = std::min(flo, fhi);
    const double img_hi = std::max(flo, fhi);

    std::vector<double> cuts = {br.lo, br.hi};
    for (double e : op.edges) {
      if (e > br.lo && e < br.hi) cuts.push_back(e);
      if (e > img_lo && e < img_hi) {
        cuts.push_back(invert_monotone(br.f, br.lo, br.hi, e, increasing));
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return b - a < 1e-15; }),
               cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double w = cuts[k + 1] - cuts[k];
      if (w <= 0.0) continue;
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      const double img = std::clamp(br.f(mid), 0.0, 1.0);
      trips.push_back({op.bin_of(mid), op.bin_of(img), w});
    }
  }

  // assemble CSR rows of L, normalizing each row by the bin width
  std::vector<std::vector<std::pair<int, double>>> rows(m);
  for (const auto& t : trips) rows[t.i].push_back({t.j, t.w});
  op.L.rows = op.L.cols = m;
  op.L.row_ptr.assign(m + 1, 0);
  for (int i = 0; i < m; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    double sum = 0.0;
    std::vector<std::pair<int, double>> merged;
    for (const auto& [j, w] : r) {
      if (!merged.empty() && merged.back().first == j) {
        merged.back().second += w;
      } else {
        merged.push_back({j, w});
      }
      sum += w;
    }
    const double width = op.width(i);
    if (std::abs(sum - width) > 1e-9 * std::max(width, 1e-12)) {
      throw NumericalFailure("ulam row " + std::to_string(i) +
                             " does not partition its bin");
    }
    for (auto& [j, w] : merged) {
      op.L.col.push_back(j);
      op.L.val.push_back(w / sum);
    }
    op.L.row_ptr[i + 1] = int(op.L.col.size());
  }

  op.nu = stationary_vector(op.L);
  op.h.resize(m);
  for (int i = 0; i < m; ++i) op.h[i] = op.nu[i] / op.width(i);
  op.cum_nu.assign(m + 1, 0.0);
  for (int i = 0; i < m; ++i) op.cum_nu[i + 1] = op.cum_nu[i] + op.nu[i];

  // chain kernel: K[i][j] = nu_j L[j][i] / nu_i (time reversal wrt nu)
  std::vector<std::vector<std::pair<int, double>>> krows(m);
  for (int j = 0; j < m; ++j) {
    for (int e = op.L.row_ptr[j]; e < op.L.row_ptr[j + 1]; ++e) {
      const int i = op.L.col[e];
      if (op.nu[i] > 0.0) {
        krows[i].push_back({j, op.nu[j] * op.L.val[e] / op.nu[i]});
      }
    }
  }
  op.K.rows = op.K.cols = m;
  op.K.row_ptr.assign(m + 1, 0);
  for (int i = 0; i < m; ++i) {
    auto& r = krows[i];
    std::sort(r.begin(), r.end());
    double sum = 0.0;
    for (const auto& [j, v] : r) sum += v;
    if (r.empty() || sum <= 0.0) {
      // unreachable bin (nu ~ 0): keep the row stochastic with a self loop
      op.K.col.push_back(i);
      op.K.val.push_back(1.0);
    } else {
      if (std::abs(sum - 1.0) > 1e-8) {
        throw NumericalFailure("chain kernel row sum off by " +
                               std::to_string(sum - 1.0));
      }
      for (const auto& [j, v] : r) {
        op.K.col.push_back(j);
        op.K.val.push_back(v / sum);
      }
    }
    op.K.row_ptr[i + 1] = int(op.K.col.size());
  }
  return op;
}

UlamOperator build_ulam(const LsvMap& map, int m, MeshKind mesh) {
  return build_ulam(lsv_as_gpm(map.gamma), m, mesh);
}

// ---------------------------------------------------------------------------
// Coefficient estimates

namespace {

// Threshold cuts in the g-ordering of bins, roughly equi-distributed in nu
// mass. A cut c means the event {g <= g(midpoint of ordered bin c-1)}.
struct CutSet {
  std::vector<int> cuts;          // cut positions in ordered-bin space
  std::vector<double> F;          // nu mass of each cut event
  std::vector<int> order;         // ordered bin index -> natural bin index
};

CutSet make_cuts(const UlamOperator& op, const Observable& g, int x_grid) {
  CutSet cs;
  const int m = op.m;
  cs.order.resize(m);
  for (int i = 0; i < m; ++i) cs.order[i] = i;
  if (g.nonincreasing()) std::reverse(cs.order.begin(), cs.order.end());

  std::vector<double> cum(m + 1, 0.0);
  for (int i = 0; i < m; ++i) cum[i + 1] = cum[i] + op.nu[cs.order[i]];

  int prev = -1;
  for (int q = 1; q <= x_grid; ++q) {
    const double target = double(q) / double(x_grid + 1);
    const auto it = std::lower_bound(cum.begin(), cum.end(), target);
    int c = int(it - cum.begin());
    c = std::clamp(c, 1, m - 1);
    if (c != prev) {
      cs.cuts.push_back(c);
      cs.F.push_back(cum[c]);
      prev = c;
    }
  }
  return cs;
}

std::vector<double> indicator_columns(const CutSet& cs, int m) {
  const int C = int(cs.cuts.size());
  std::vector<double> X(std::size_t(m) * C, 0.0);
  for (int c = 0; c < C; ++c) {
    for (int pos = 0; pos < cs.cuts[c]; ++pos) {
      X[std::size_t(cs.order[pos]) * C + c] = 1.0;
    }
  }
  return X;
}

double weighted_max_deviation(const UlamOperator& op, const double* X, int C,
                              const std::vector<double>& center) {
  std::vector<double> dev(C, 0.0);
  for (int i = 0; i < op.m; ++i) {
    const double w = op.nu[i];
    const double* xi = X + std::size_t(i) * C;
    for (int c = 0; c < C; ++c) dev[c] += w * std::abs(xi[c] - center[c]);
  }
  return *std::max_element(dev.begin(), dev.end());
}

}  // namespace

std::vector<AlphaEstimate> alpha1_profile(const UlamOperator& op,
                                          const Observable& g,
                                          const std::vector<int>& lags,
                                          int x_grid) {
  if (lags.empty()) return {};
  for (int n : lags) {
    if (n < 0) throw std::invalid_argument("alpha1: negative lag");
  }
  std::vector<int> sorted = lags;
  std::sort(sorted.begin(), sorted.end());
  const int max_lag = sorted.back();

  const CutSet cs = make_cuts(op, g, x_grid);
  const int C = int(cs.cuts.size());
  std::vector<double> X = indicator_columns(cs, op.m);
  std::vector<double> Y(X.size());

  std::vector<AlphaEstimate> out;
  auto record = [&](int lag) {
    out.push_back({lag, weighted_max_deviation(op, X.data(), C, cs.F), x_grid});
  };
  std::size_t idx = 0;
  while (idx < sorted.size() && sorted[idx] == 0) {
    record(0);
    ++idx;
  }
  for (int step = 1; step <= max_lag; ++step) {
    op.K.apply_block(X.data(), Y.data(), C);
    X.swap(Y);
    while (idx < sorted.size() && sorted[idx] == step) {
      record(step);
      ++idx;
    }
  }
  return out;
}

AlphaEstimate alpha1(const UlamOperator& op, const Observable& g, int lag,
                     int x_grid) {
  if (lag < 1) throw std::invalid_argument("alpha1: lag must be >= 1");
  return alpha1_profile(op, g, {lag}, x_grid).front();
}

std::vector<AlphaEstimate> alpha2_profile(const UlamOperator& op,
                                          const Observable& g,
                                          const std::vector<int>& lags,
                                          int x_grid,
                                          const std::vector<int>& gap_grid) {
  std::vector<AlphaEstimate> l1 = alpha1_profile(op, g, lags, x_grid);
  if (l1.empty()) return l1;

  std::vector<int> sorted = lags;
  std::sort(sorted.begin(), sorted.end());
  const int max_lag = sorted.back();
  const CutSet cs = make_cuts(op, g, x_grid);
  const int C = int(cs.cuts.size());
  const int m = op.m;

  std::vector<double> best(sorted.size(), 0.0);
  std::vector<double> U = indicator_columns(cs, m);
  std::vector<double> W(U.size());
  std::vector<double> tmp(U.size());

  for (int gap : gap_grid) {
    if (gap < 0) throw std::invalid_argument("alpha2: negative gap");
    // W = K^gap applied to the second indicator family
    W = U;
    for (int s = 0; s < gap; ++s) {
      op.K.apply_block(W.data(), tmp.data(), C);
      W.swap(tmp);
    }
    // centered products over all threshold pairs
    const int P = C * C;
    std::vector<double> Z(std::size_t(m) * P);
    std::vector<double> mean(P, 0.0);
    for (int i = 0; i < m; ++i) {
      const double* ui = U.data() + std::size_t(i) * C;
      const double* wi = W.data() + std::size_t(i) * C;
      double* zi = Z.data() + std::size_t(i) * P;
      for (int c1 = 0; c1 < C; ++c1) {
        const double phi = ui[c1] - cs.F[c1];
        for (int c2 = 0; c2 < C; ++c2) {
          const double z = phi * (wi[c2] - cs.F[c2]);
          zi[c1 * C + c2] = z;
          mean[c1 * C + c2] += op.nu[i] * z;
        }
      }
    }
    std::vector<double> Zt(Z.size());
    std::size_t idx = 0;
    while (idx < sorted.size() && sorted[idx] == 0) {
      best[idx] = std::max(best[idx],
                           weighted_max_deviation(op, Z.data(), P, mean));
      ++idx;
    }
    for (int step = 1; step <= max_lag; ++step) {
      op.K.apply_block(Z.data(), Zt.data(), P);
      Z.swap(Zt);
      while (idx < sorted.size() && sorted[idx] == step) {
        best[idx] = std::max(best[idx],
                             weighted_max_deviation(op, Z.data(), P, mean));
        ++idx;
      }
    }
  }

  // include the l = 1 term
  std::vector<AlphaEstimate> out(l1.size());
  for (std::size_t k = 0; k < l1.size(); ++k) {
    // l1 is ordered like `lags`; best is ordered like `sorted`
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), l1[k].lag) -
                     sorted.begin();
    out[k] = {l1[k].lag, std::max(l1[k].value, best[std::size_t(pos)]), x_grid};
  }
  return out;
}

AlphaEstimate alpha2(const UlamOperator& op, const Observable& g, int lag,
                     int x_grid, const std::vector<int>& gap_grid) {
  if (lag < 1) throw std::invalid_argument("alpha2: lag must be >= 1");
  return alpha2_profile(op, g, {lag}, x_grid, gap_grid).front();
}

// ---------------------------------------------------------------------------

LawPtr pushforward_law(const UlamOperator& op, const Observable& g) {
  bool noninc = g.nonincreasing();
  if (g.kind == ObservableKind::custom) {
    // probe the declared monotonicity
    double prev = g.eval(1e-6);
    for (int k = 1; k <= 100; ++k) {
      const double v = g.eval(std::min(1.0 - 1e-6, double(k) / 100.0 - 5e-3));
      if (noninc ? v > prev + 1e-12 : v < prev - 1e-12) {
        throw std::invalid_argument("pushforward: observable is not monotone");
      }
      prev = v;
    }
  }
  const int m = op.m;
  std::vector<double> x, F;
  x.reserve(m + 2);
  F.reserve(m + 2);
  if (!noninc) {
    for (int k = 0; k <= m; ++k) {
      const double gx = g.eval_closure(op.edges[k]);
      if (!std::isfinite(gx)) continue;  // truncated singular end
      x.push_back(gx);
      F.push_back(op.cum_nu[k]);
    }
  } else {
    for (int k = m; k >= 0; --k) {
      const double gx = g.eval_closure(op.edges[k]);
      if (!std::isfinite(gx)) continue;
      x.push_back(gx);
      F.push_back(1.0 - op.cum_nu[k]);
    }
  }
  if (x.size() < 2) throw std::invalid_argument("pushforward: degenerate observable");
  // enforce monotone knots against rounding, and park any truncated tail
  // mass as a jump at the largest finite image
  for (std::size_t i = 1; i < x.size(); ++i) x[i] = std::max(x[i], x[i - 1]);
  if (F.back() < 1.0) {
    x.push_back(x.back());
    F.push_back(1.0);
  }
  if (F.front() > 0.0) {
    x.insert(x.begin(), x.front());
    F.insert(F.begin(), 0.0);
  }
  return tabulated_law(std::move(x), std::move(F));
}

std::vector<double> isotonic_nonincreasing(std::vector<double> v) {
  // PAVA on blocks
  std::vector<double> mean;
  std::vector<int> count;
  for (double x : v) {
    mean.push_back(x);
    count.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 2] < mean.back()) {
      const double tot = mean.back() * count.back() +
                         mean[mean.size() - 2] * count[count.size() - 2];
      const int cnt = count.back() + count[count.size() - 2];
      mean.pop_back();
      count.pop_back();
      mean.back() = tot / cnt;
      count.back() = cnt;
    }
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t b = 0; b < mean.size(); ++b) {
    out.insert(out.end(), count[b], mean[b]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr char kMagic[8] = {'W', 'L', 'U', 'L', 'A', 'M', '0', '1'};
}

void save_ulam(const UlamOperator& op, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::int32_t m = op.m;
  const std::int32_t mesh = op.mesh == MeshKind::graded ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&m), sizeof(m));
  out.write(reinterpret_cast<const char*>(&op.gamma), sizeof(double));
  out.write(reinterpret_cast<const char*>(&mesh), sizeof(mesh));
  std::vector<double> row(op.m, 0.0);
  for (int i = 0; i < op.m; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (int e = op.L.row_ptr[i]; e < op.L.row_ptr[i + 1]; ++e) {
      row[op.L.col[e]] = op.L.val[e];
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(sizeof(double)) * op.m);
  }
  out.write(reinterpret_cast<const char*>(op.h.data()),
            std::streamsize(sizeof(double)) * op.m);
}

UlamOperator load_ulam(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not an ulam operator file: " + path);
  }
  std::int32_t m = 0, mesh = 0;
  double gamma = 0.0;
  in.read(reinterpret_cast<char*>(&m), sizeof(m));
  in.read(reinterpret_cast<char*>(&gamma), sizeof(gamma));
  in.read(reinterpret_cast<char*>(&mesh), sizeof(mesh));
  if (m < 16 || m > (1 << 26)) throw std::runtime_error("corrupt operator header");

  UlamOperator op;
  op.m = m;
  op.gamma = gamma;
  op.mesh = mesh == 1 ? MeshKind::graded : MeshKind::uniform;
  op.edges = make_mesh(m, op.mesh, gamma);

  op.L.rows = op.L.cols = m;
  op.L.row_ptr.assign(m + 1, 0);
  std::vector<double> row(m);
  for (int i = 0; i < m; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            std::streamsize(sizeof(double)) * m);
    for (int j = 0; j < m; ++j) {
      if (row[j] != 0.0) {
        op.L.col.push_back(j);
        op.L.val.push_back(row[j]);
      }
    }
    op.L.row_ptr[i + 1] = int(op.L.col.size());
  }
  op.h.resize(m);
  in.read(reinterpret_cast<char*>(op.h.data()),
          std::streamsize(sizeof(double)) * m);
  if (!in) throw std::runtime_error("truncated operator file: " + path);

  op.nu.resize(m);
  for (int i = 0; i < m; ++i) op.nu[i] = op.h[i] * op.width(i);
  double tot = std::accumulate(op.nu.begin(), op.nu.end(), 0.0);
  for (auto& v : op.nu) v /= tot;
  op.cum_nu.assign(m + 1, 0.0);
  for (int i = 0; i < m; ++i) op.cum_nu[i + 1] = op.cum_nu[i] + op.nu[i];

  std::vector<std::vector<std::pair<int, double>>> krows(m);
  for (int j = 0; j < m; ++j) {
    for (int e = op.L.row_ptr[j]; e < op.L.row_ptr[j + 1]; ++e) {
      const int i = op.L.col[e];
      if (op.nu[i] > 0.0) {
        krows[i].push_back({j, op.nu[j] * op.L.val[e] / op.nu[i]});
      }
    }
  }
  op.K.rows = op.K.cols = m;
  op.K.row_ptr.assign(m + 1, 0);
  for (int i = 0; i < m; ++i) {
    auto& r = krows[i];
    std::sort(r.begin(), r.end());
    double sum = 0.0;
    for (const auto& [j, v] : r) sum += v;
    if (r.empty() || sum <= 0.0) {
      op.K.col.push_back(i);
      op.K.val.push_back(1.0);
    } else {
      for (const auto& [j, v] : r) {
        op.K.col.push_back(j);
        op.K.val.push_back(v / sum);
      }
    }
    op.K.row_ptr[i + 1] = int(op.K.col.size());
  }
  return op;
}

void save_density_csv(const UlamOperator& op, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "x,h\n";
  char buf[64];
  for (int i = 0; i < op.m; ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", op.midpoint(i), op.h[i]);
    out << buf;
  }
}

}  // namespace wlab
