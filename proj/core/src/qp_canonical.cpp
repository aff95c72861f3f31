// Canonical optimum: the minimum-norm point of the optimal face.
//
// For a convex QP every optimal x shares the same Qx, and any optimal x pairs
// with any optimal dual. The optimal face is therefore the feasible set with
// (a) bounds and inequality rows that carry a positive dual held active and
// (b) Qx pinned to its value at the reported optimum. Minimizing ||x||^2 over
// that face picks a unique representative and leaves the duals valid.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gridmech/qp.hpp"

namespace gridmech::qp {
namespace {

// Connected components of the sparsity graph of Q.
std::vector<std::vector<std::size_t>> quadratic_components(const std::vector<QEntry>& entries,
                                                           std::size_t n) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<char> touched(n, 0);
  for (const auto& e : entries) {
    touched[e.row] = touched[e.col] = 1;
    parent[find(e.row)] = find(e.col);
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < n; ++j)
    if (touched[j]) groups[find(j)].push_back(j);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

}  // namespace

Solution minimum_norm_optimum(const QuadraticProgram& problem, const Solution& optimum,
                              const Settings& settings) {
  if (!optimum.optimal()) return optimum;
  const std::size_t n = problem.variable_count();

  // The face is built around x snapped onto the bounds it holds active, with
  // row right-hand sides moved by the rounding so that the snapped point is
  // feasible. The moves are at the solver's accuracy.
  std::vector<double> x = optimum.x;
  QuadraticProgram face;
  for (std::size_t j = 0; j < n; ++j) {
    double lo = problem.lower()[j], hi = problem.upper()[j];
    x[j] = std::clamp(x[j], lo, hi);
    // Strictly complementary side: the dual outweighs the slack.
    if (std::isfinite(lo) && optimum.lower_duals[j] > x[j] - lo) hi = x[j] = lo;
    else if (std::isfinite(hi) && optimum.upper_duals[j] > hi - x[j]) lo = x[j] = hi;
    face.add_variable(lo, hi, 0.0);
    face.add_quadratic(j, j, 1.0);
  }

  const auto activity = problem.row_activity(x);
  for (std::size_t k = 0; k < problem.constraint_count(); ++k) {
    const auto& row = problem.constraint(k);
    if (row.relation == Relation::Equal || optimum.row_duals[k] > row.rhs - activity[k])
      face.add_constraint(row.terms, Relation::Equal, activity[k]);
    else
      face.add_constraint(row.terms, Relation::LessEqual, std::max(row.rhs, activity[k]));
  }

  // Qx invariance, one row per significant eigen-direction of each block.
  const auto entries = problem.quadratic_entries();
  for (const auto& comp : quadratic_components(entries, n)) {
    const auto size = static_cast<Eigen::Index>(comp.size());
    std::map<std::size_t, Eigen::Index> local;
    for (Eigen::Index i = 0; i < size; ++i) local[comp[static_cast<std::size_t>(i)]] = i;
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(size, size);
    for (const auto& e : entries) {
      const auto it = local.find(e.row);
      if (it == local.end()) continue;
      const auto r = it->second, c = local.at(e.col);
      block(r, c) += e.value;
      if (r != c) block(c, r) += e.value;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    for (Eigen::Index e = 0; e < size; ++e) {
      if (eig.eigenvalues()[e] <= 1e-9 * top) continue;
      std::vector<Term> terms;
      double rhs = 0.0;
      for (Eigen::Index i = 0; i < size; ++i) {
        const double v = eig.eigenvectors()(i, e);
        if (std::abs(v) < 1e-14) continue;
        terms.push_back({comp[static_cast<std::size_t>(i)], v});
        rhs += v * x[comp[static_cast<std::size_t>(i)]];
      }
      face.add_constraint(std::move(terms), Relation::Equal, rhs);
    }
  }

  const Solution selected = solve(face, settings);
  if (!selected.optimal()) return optimum;

  Solution out = optimum;
  out.x = selected.x;
  out.objective = problem.objective(out.x);
  return out;
}

}  // namespace gridmech::qp
