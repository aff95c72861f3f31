#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include "gridmech/error.hpp"
#include "gridmech/qp.hpp"

namespace gridmech::qp {

std::size_t QuadraticProgram::add_variable(double lower, double upper, double cost,
                                           std::string name) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  linear_.push_back(cost);
  if (name.empty()) name = "x" + std::to_string(names_.size());
  names_.push_back(std::move(name));
  return lower_.size() - 1;
}

void QuadraticProgram::set_bounds(std::size_t j, double lower, double upper) {
  lower_.at(j) = lower;
  upper_.at(j) = upper;
}

void QuadraticProgram::add_linear(std::size_t j, double cost) { linear_.at(j) += cost; }

void QuadraticProgram::add_quadratic(std::size_t i, std::size_t j, double v) {
  if (i > j) std::swap(i, j);
  quad_.push_back({i, j, v});
}

std::size_t QuadraticProgram::add_constraint(std::vector<Term> terms, Relation relation,
                                             double rhs, std::string name) {
  rows_.push_back({std::move(terms), relation, rhs, std::move(name)});
  return rows_.size() - 1;
}

std::vector<QEntry> QuadraticProgram::quadratic_entries() const {
  std::map<std::pair<std::size_t, std::size_t>, double> merged;
  for (const auto& e : quad_) merged[{e.row, e.col}] += e.value;
  std::vector<QEntry> out;
  out.reserve(merged.size());
  for (const auto& [key, v] : merged)
    if (v != 0.0) out.push_back({key.first, key.second, v});
  return out;
}

std::vector<double> QuadraticProgram::q_times(std::span<const double> x) const {
  std::vector<double> out(variable_count(), 0.0);
  for (const auto& e : quad_) {
    out[e.row] += e.value * x[e.col];
    if (e.row != e.col) out[e.col] += e.value * x[e.row];
  }
  return out;
}

double QuadraticProgram::objective(std::span<const double> x) const {
  const auto qx = q_times(x);
  double f = constant_;
  for (std::size_t j = 0; j < variable_count(); ++j) f += x[j] * (0.5 * qx[j] + linear_[j]);
  return f;
}

std::vector<double> QuadraticProgram::row_activity(std::span<const double> x) const {
  std::vector<double> out(rows_.size(), 0.0);
  for (std::size_t k = 0; k < rows_.size(); ++k)
    for (const auto& t : rows_[k].terms) out[k] += t.coef * x[t.var];
  return out;
}

void QuadraticProgram::validate() const {
  const std::size_t n = variable_count();
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] == kInf ||
        upper_[j] == -kInf)
      throw ModelError("variable '" + names_[j] + "' has invalid bounds");
    if (!std::isfinite(linear_[j]))
      throw ModelError("variable '" + names_[j] + "' has a non-finite cost");
  }
  if (!std::isfinite(constant_)) throw ModelError("non-finite objective constant");
  for (const auto& e : quad_) {
    if (e.col >= n) throw ModelError("quadratic entry references an unknown variable");
    if (!std::isfinite(e.value)) throw ModelError("non-finite quadratic entry");
  }
  for (const auto& r : rows_) {
    if (!std::isfinite(r.rhs)) throw ModelError("constraint '" + r.name + "' has non-finite rhs");
    for (const auto& t : r.terms) {
      if (t.var >= n) throw ModelError("constraint '" + r.name + "' references an unknown variable");
      if (!std::isfinite(t.coef))
        throw ModelError("constraint '" + r.name + "' has a non-finite coefficient");
    }
  }

  // PSD probes: unit vectors, every 2x2 principal block touched by an
  // off-diagonal entry, and a fixed set of pseudo-random directions.
  const auto entries = quadratic_entries();
  double scale = 0.0;
  std::vector<double> diag(n, 0.0);
  for (const auto& e : entries) {
    scale = std::max(scale, std::abs(e.value));
    if (e.row == e.col) diag[e.row] = e.value;
  }
  if (entries.empty()) return;
  const double tol = 1e-10 * scale;
  for (std::size_t j = 0; j < n; ++j)
    if (diag[j] < -tol) throw ModelError("quadratic matrix is not positive semidefinite");
  for (const auto& e : entries) {
    if (e.row == e.col) continue;
    const double a = diag[e.row], c = diag[e.col], b = e.value;
    // Smallest eigenvalue of [[a, b], [b, c]].
    const double lam = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    if (lam < -tol * 10.0) throw ModelError("quadratic matrix is not positive semidefinite");
  }
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(n);
  for (int probe = 0; probe < 16; ++probe) {
    double norm2 = 0.0;
    for (auto& vi : v) {
      vi = unif(rng);
      norm2 += vi * vi;
    }
    const auto qv = q_times(v);
    double quad = 0.0;
    for (std::size_t j = 0; j < n; ++j) quad += v[j] * qv[j];
    if (quad < -tol * norm2 * 10.0)
      throw ModelError("quadratic matrix is not positive semidefinite");
  }
}

void QuadraticProgram::dump(std::ostream& os) const {
  const auto entries = quadratic_entries();
  os.precision(17);
  os << "qp " << variable_count() << " variables " << rows_.size() << " rows " << entries.size()
     << " qentries\n";
  os << "constant " << constant_ << "\n";
  for (std::size_t j = 0; j < variable_count(); ++j)
    os << "var " << j << ' ' << names_[j] << ' ' << lower_[j] << ' ' << upper_[j] << ' '
       << linear_[j] << "\n";
  for (const auto& e : entries) os << "q " << e.row << ' ' << e.col << ' ' << e.value << "\n";
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const auto& r = rows_[k];
    os << "row " << k << ' ' << (r.name.empty() ? "-" : r.name) << ' '
       << (r.relation == Relation::Equal ? "=" : "<=") << ' ' << r.rhs << ' ' << r.terms.size();
    for (const auto& t : r.terms) os << ' ' << t.var << ':' << t.coef;
    os << "\n";
  }
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterLimit: return "iteration-limit";
  }
  return "?";
}

}  // namespace gridmech::qp
