#pragma once

// Sparse convex quadratic programs and a primal-dual interior-point solver.
//
//   minimize    1/2 x'Qx + q'x + constant
//   subject to  row_k . x  (= or <=)  rhs_k
//               lower <= x <= upper
//
// Dual sign convention (stationarity of the Lagrangian):
//   Qx + q + sum_k y_k row_k - z_lower + z_upper = 0
// with y_k >= 0 on <= rows, y_k free on = rows, z_lower, z_upper >= 0.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace gridmech::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { Equal, LessEqual };

struct Term {
  std::size_t var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Relation relation = Relation::Equal;
  double rhs = 0.0;
  std::string name;
};

/// Upper-triangle entry of Q (row <= col).
struct QEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

class QuadraticProgram {
 public:
  QuadraticProgram() = default;

  std::size_t add_variable(double lower = 0.0, double upper = kInf, double cost = 0.0,
                           std::string name = {});
  std::size_t variable_count() const noexcept { return lower_.size(); }

  void set_bounds(std::size_t j, double lower, double upper);
  void add_linear(std::size_t j, double cost);
  /// Adds v to Q(i,j) and Q(j,i); on the diagonal this contributes v/2 x_i^2.
  void add_quadratic(std::size_t i, std::size_t j, double v);
  void add_constant(double c) { constant_ += c; }

  std::size_t add_constraint(std::vector<Term> terms, Relation relation, double rhs,
                             std::string name = {});
  std::size_t constraint_count() const noexcept { return rows_.size(); }

  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }
  std::span<const double> linear() const noexcept { return linear_; }
  double constant() const noexcept { return constant_; }
  const std::string& variable_name(std::size_t j) const { return names_.at(j); }
  const Constraint& constraint(std::size_t k) const { return rows_.at(k); }
  std::span<const Constraint> constraints() const noexcept { return rows_; }

  /// Q with duplicates merged, upper triangle, sorted by (row, col).
  std::vector<QEntry> quadratic_entries() const;

  std::vector<double> q_times(std::span<const double> x) const;
  double objective(std::span<const double> x) const;
  /// row_k . x for every constraint.
  std::vector<double> row_activity(std::span<const double> x) const;

  /// Throws ModelError on bad indices, non-finite data or a Q that fails the
  /// PSD probes.
  void validate() const;

  /// Plain-text sparse dump: header, bounds, costs, Q triplets, rows.
  void dump(std::ostream& os) const;

 private:
  std::vector<double> lower_, upper_, linear_;
  std::vector<std::string> names_;
  std::vector<QEntry> quad_;
  std::vector<Constraint> rows_;
  double constant_ = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded, IterLimit };

const char* to_string(Status s);

struct Settings {
  double tol_primal = 1e-9;  // relative
  double tol_dual = 1e-9;    // relative
  double tol_gap = 1e-9;     // relative
  int max_iter = 200;
  bool scale = true;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct Solution {
  Status status = Status::IterLimit;
  std::vector<double> x;
  std::vector<double> row_duals;
  std::vector<double> lower_duals;
  std::vector<double> upper_duals;
  double objective = 0.0;
  Residuals residuals;
  int iterations = 0;

  bool optimal() const noexcept { return status == Status::Optimal; }
};

/// Mehrotra predictor-corrector on the scaled problem. Deterministic;
/// reentrant. Throws ModelError when `validate` rejects the problem.
Solution solve(const QuadraticProgram& qp, const Settings& settings = {});

/// Minimum-norm point of the optimal face of `qp`, found from a solved
/// `optimum` by a second solve. Duals are kept, since every optimal primal
/// pairs with every optimal dual. Returns `optimum` unchanged when the
/// selection solve fails.
Solution minimum_norm_optimum(const QuadraticProgram& qp, const Solution& optimum,
                              const Settings& settings = {});

}  // namespace gridmech::qp
