// Primal-dual interior-point method (Mehrotra predictor-corrector).
//
// Bound constraints are eliminated into the primal diagonal; general
// inequality rows carry explicit slacks and stay in a quasi-definite
// augmented system factored by a sparse LDL' whose pattern is analysed once.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <map>

#include "gridmech/qp.hpp"

namespace gridmech::qp {
namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;
using Trip = Eigen::Triplet<double, int>;

constexpr double kDeltaPrimal = 1e-9;
constexpr double kDeltaDual = 1e-9;
constexpr double kStepFraction = 0.995;
constexpr double kDivergence = 1e10;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Problem in solver form: equality rows A x = b, inequality rows G x <= h.
struct Standard {
  int n = 0;
  SpMat Q;  // full symmetric
  Vec q;
  SpMat A, G;
  Vec b, h;
  Vec l, u;
  // Row provenance: original constraint index.
  std::vector<long> eq_source, ineq_source;
};

struct Scaling {
  Vec d;       // column scaling, x = d .* xs
  Vec ea, eg;  // row scaling
  double c = 1.0;
};

// Column-wise infinity norms of a column-major sparse matrix.
Vec col_norms(const SpMat& M) {
  Vec out = Vec::Zero(M.cols());
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      out[k] = std::max(out[k], std::abs(it.value()));
  return out;
}

Vec row_norms(const SpMat& M) {
  Vec out = Vec::Zero(M.rows());
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
  return out;
}

Scaling ruiz(Standard& s, bool enabled) {
  Scaling sc;
  sc.d = Vec::Ones(s.n);
  sc.ea = Vec::Ones(s.A.rows());
  sc.eg = Vec::Ones(s.G.rows());
  if (!enabled) return sc;

  auto clip = [](double v) { return std::clamp(v, 1e-4, 1e4); };
  for (int pass = 0; pass < 15; ++pass) {
    Vec cn = col_norms(s.Q).cwiseMax(col_norms(s.A)).cwiseMax(col_norms(s.G));
    Vec dn(s.n), ean(s.A.rows()), egn(s.G.rows());
    for (int j = 0; j < s.n; ++j) dn[j] = cn[j] > 0.0 ? clip(1.0 / std::sqrt(cn[j])) : 1.0;
    Vec ra = row_norms(s.A), rg = row_norms(s.G);
    for (int k = 0; k < ra.size(); ++k) ean[k] = ra[k] > 0.0 ? clip(1.0 / std::sqrt(ra[k])) : 1.0;
    for (int k = 0; k < rg.size(); ++k) egn[k] = rg[k] > 0.0 ? clip(1.0 / std::sqrt(rg[k])) : 1.0;

    s.Q = dn.asDiagonal() * s.Q * dn.asDiagonal();
    s.A = ean.asDiagonal() * s.A * dn.asDiagonal();
    s.G = egn.asDiagonal() * s.G * dn.asDiagonal();
    s.q = s.q.cwiseProduct(dn);
    s.b = s.b.cwiseProduct(ean);
    s.h = s.h.cwiseProduct(egn);
    s.l = s.l.cwiseQuotient(dn);
    s.u = s.u.cwiseQuotient(dn);
    sc.d = sc.d.cwiseProduct(dn);
    sc.ea = sc.ea.cwiseProduct(ean);
    sc.eg = sc.eg.cwiseProduct(egn);
  }

  double qmax = 0.0;
  for (int k = 0; k < s.Q.outerSize(); ++k)
    for (SpMat::InnerIterator it(s.Q, k); it; ++it) qmax = std::max(qmax, std::abs(it.value()));
  const double ref = std::max({1.0, inf_norm(s.q), qmax});
  sc.c = 1.0 / ref;
  s.Q *= sc.c;
  s.q *= sc.c;
  return sc;
}

// Unscaled view used for termination tests.
struct Metrics {
  Residuals rel;
  double objective = 0.0;
  double merit = 0.0;
};

class InteriorPoint {
 public:
  InteriorPoint(const Standard& original, Standard scaled, Scaling sc, const Settings& settings)
      : o_(original), s_(std::move(scaled)), sc_(std::move(sc)), set_(settings) {
    n_ = s_.n;
    me_ = static_cast<int>(s_.A.rows());
    mi_ = static_cast<int>(s_.G.rows());
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(s_.l[j])) lo_.push_back(j);
      if (std::isfinite(s_.u[j])) up_.push_back(j);
    }
    At_ = s_.A.transpose();
    Gt_ = s_.G.transpose();
  }

  Status run(Vec& x, Vec& y, Vec& zg, Vec& zl_full, Vec& zu_full, Metrics& best_metrics,
             int& iterations);

 private:
  void initial_point();
  void residuals(Vec& rd, Vec& re, Vec& rg) const;
  double mu() const;
  Metrics unscaled_metrics() const;
  void build_matrix();
  bool factorize();
  void solve_kkt(const Vec& rhs, Vec& sol);
  void direction(const Vec& rd, const Vec& re, const Vec& rg, const Vec& rcl, const Vec& rcu,
                 const Vec& rcg);
  double max_step() const;

  const Standard& o_;
  Standard s_;
  Scaling sc_;
  Settings set_;
  int n_ = 0, me_ = 0, mi_ = 0;
  std::vector<int> lo_, up_;
  SpMat At_, Gt_;

  // Iterate.
  Vec x_, y_, zg_, sg_, zl_, sl_, zu_, su_;
  // Direction.
  Vec dx_, dy_, dzg_, dsg_, dzl_, dsl_, dzu_, dsu_;

  SpMat K_;
  std::vector<double> kbase_;
  std::vector<int> diag_pos_;
  Vec kdiag_reg_;  // regularization added to the diagonal of the factored matrix
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analysed_ = false;
  double delta_scale_ = 1.0;
};

void InteriorPoint::initial_point() {
  x_ = Vec::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    const double l = s_.l[j], u = s_.u[j];
    const bool fl = std::isfinite(l), fu = std::isfinite(u);
    if (fl && fu) {
      const double margin = std::min(1.0, 0.25 * (u - l));
      x_[j] = std::clamp(0.0, l + margin, u - margin);
    } else if (fl) {
      x_[j] = std::max(0.0, l + 1.0);
    } else if (fu) {
      x_[j] = std::min(0.0, u - 1.0);
    }
  }
  y_ = Vec::Zero(me_);
  zg_ = Vec::Ones(mi_);
  sg_ = (s_.h - s_.G * x_).cwiseMax(1.0);
  const auto nl = static_cast<int>(lo_.size()), nu = static_cast<int>(up_.size());
  sl_.resize(nl);
  su_.resize(nu);
  zl_ = Vec::Ones(nl);
  zu_ = Vec::Ones(nu);
  for (int k = 0; k < nl; ++k) sl_[k] = x_[lo_[k]] - s_.l[lo_[k]];
  for (int k = 0; k < nu; ++k) su_[k] = s_.u[up_[k]] - x_[up_[k]];
}

void InteriorPoint::residuals(Vec& rd, Vec& re, Vec& rg) const {
  rd = s_.Q * x_ + s_.q + At_ * y_ + Gt_ * zg_;
  for (std::size_t k = 0; k < lo_.size(); ++k) rd[lo_[k]] -= zl_[k];
  for (std::size_t k = 0; k < up_.size(); ++k) rd[up_[k]] += zu_[k];
  re = s_.A * x_ - s_.b;
  rg = s_.G * x_ + sg_ - s_.h;
}

double InteriorPoint::mu() const {
  const auto m = static_cast<double>(sl_.size() + su_.size() + sg_.size());
  if (m == 0.0) return 0.0;
  return (sl_.dot(zl_) + su_.dot(zu_) + sg_.dot(zg_)) / m;
}

Metrics InteriorPoint::unscaled_metrics() const {
  const Vec x = sc_.d.cwiseProduct(x_);
  const Vec y = sc_.ea.cwiseProduct(y_) / sc_.c;
  const Vec zg = sc_.eg.cwiseProduct(zg_) / sc_.c;
  Vec zl = Vec::Zero(n_), zu = Vec::Zero(n_);
  for (std::size_t k = 0; k < lo_.size(); ++k) zl[lo_[k]] = zl_[k] / (sc_.c * sc_.d[lo_[k]]);
  for (std::size_t k = 0; k < up_.size(); ++k) zu[up_[k]] = zu_[k] / (sc_.c * sc_.d[up_[k]]);

  const Vec qx = o_.Q * x;
  const Vec aty = o_.A.transpose() * y;
  const Vec gtz = o_.G.transpose() * zg;
  const Vec rd = qx + o_.q + aty + gtz - zl + zu;
  const Vec ax = o_.A * x, gx = o_.G * x;
  const Vec re = ax - o_.b;
  const Vec rg = (gx - o_.h).cwiseMax(0.0);

  Metrics m;
  m.objective = 0.5 * x.dot(qx) + o_.q.dot(x);
  const double dscale =
      1.0 + std::max({inf_norm(qx), inf_norm(o_.q), inf_norm(aty), inf_norm(gtz), inf_norm(zl),
                      inf_norm(zu)});
  const double pscale =
      1.0 + std::max({inf_norm(o_.b), inf_norm(o_.h), inf_norm(ax), inf_norm(gx)});
  m.rel.dual = inf_norm(rd) / dscale;
  m.rel.primal = std::max(inf_norm(re), inf_norm(rg)) / pscale;
  const double comp = (sl_.dot(zl_) + su_.dot(zu_) + sg_.dot(zg_)) / sc_.c;
  m.rel.gap = std::abs(comp) / (1.0 + std::abs(m.objective));
  m.merit = std::max({m.rel.primal / set_.tol_primal, m.rel.dual / set_.tol_dual,
                      m.rel.gap / set_.tol_gap});
  return m;
}

void InteriorPoint::build_matrix() {
  const int N = n_ + me_ + mi_;
  if (K_.rows() == 0) {
    std::vector<Trip> trips;
    for (int k = 0; k < s_.Q.outerSize(); ++k)
      for (SpMat::InnerIterator it(s_.Q, k); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), k, it.value());
    for (int k = 0; k < s_.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(s_.A, k); it; ++it) {
        trips.emplace_back(n_ + static_cast<int>(it.row()), k, it.value());
        trips.emplace_back(k, n_ + static_cast<int>(it.row()), it.value());
      }
    for (int k = 0; k < s_.G.outerSize(); ++k)
      for (SpMat::InnerIterator it(s_.G, k); it; ++it) {
        trips.emplace_back(n_ + me_ + static_cast<int>(it.row()), k, it.value());
        trips.emplace_back(k, n_ + me_ + static_cast<int>(it.row()), it.value());
      }
    for (int i = 0; i < N; ++i) trips.emplace_back(i, i, 0.0);
    K_.resize(N, N);
    K_.setFromTriplets(trips.begin(), trips.end());
    K_.makeCompressed();
    kbase_.assign(K_.valuePtr(), K_.valuePtr() + K_.nonZeros());
    diag_pos_.resize(N);
    for (int i = 0; i < N; ++i)
      diag_pos_[i] = static_cast<int>(&K_.coeffRef(i, i) - K_.valuePtr());
  }

  std::copy(kbase_.begin(), kbase_.end(), K_.valuePtr());
  Vec dx = Vec::Zero(n_);
  for (std::size_t k = 0; k < lo_.size(); ++k) dx[lo_[k]] += zl_[k] / sl_[k];
  for (std::size_t k = 0; k < up_.size(); ++k) dx[up_[k]] += zu_[k] / su_[k];
  kdiag_reg_.resize(N);
  const double dp = kDeltaPrimal * delta_scale_, dd = kDeltaDual * delta_scale_;
  for (int j = 0; j < n_; ++j) {
    K_.valuePtr()[diag_pos_[j]] += dx[j] + dp;
    kdiag_reg_[j] = dp;
  }
  for (int k = 0; k < me_; ++k) {
    K_.valuePtr()[diag_pos_[n_ + k]] -= dd;
    kdiag_reg_[n_ + k] = -dd;
  }
  for (int k = 0; k < mi_; ++k) {
    K_.valuePtr()[diag_pos_[n_ + me_ + k]] -= sg_[k] / zg_[k] + dd;
    kdiag_reg_[n_ + me_ + k] = -dd;
  }
}

bool InteriorPoint::factorize() {
  for (int attempt = 0; attempt < 6; ++attempt) {
    build_matrix();
    if (!analysed_) {
      ldlt_.analyzePattern(K_);
      analysed_ = true;
    }
    ldlt_.factorize(K_);
    if (ldlt_.info() == Eigen::Success) {
      const Vec d = ldlt_.vectorD();
      if (d.allFinite()) return true;
    }
    delta_scale_ *= 100.0;
  }
  return false;
}

// Solve with the regularized factor, refining against the unregularized
// matrix.
void InteriorPoint::solve_kkt(const Vec& rhs, Vec& sol) {
  sol = ldlt_.solve(rhs);
  const double target = 1e-13 * (1.0 + inf_norm(rhs));
  for (int pass = 0; pass < 6; ++pass) {
    Vec r = rhs - (K_ * sol - kdiag_reg_.cwiseProduct(sol));
    if (inf_norm(r) <= target) break;
    sol += ldlt_.solve(r);
  }
}

void InteriorPoint::direction(const Vec& rd, const Vec& re, const Vec& rg, const Vec& rcl,
                              const Vec& rcu, const Vec& rcg) {
  Vec rhs(n_ + me_ + mi_);
  Vec r1 = -rd;
  for (std::size_t k = 0; k < lo_.size(); ++k) r1[lo_[k]] -= rcl[k] / sl_[k];
  for (std::size_t k = 0; k < up_.size(); ++k) r1[up_[k]] += rcu[k] / su_[k];
  rhs.head(n_) = r1;
  rhs.segment(n_, me_) = -re;
  rhs.tail(mi_) = -rg + rcg.cwiseQuotient(zg_);
  Vec sol;
  solve_kkt(rhs, sol);
  dx_ = sol.head(n_);
  dy_ = sol.segment(n_, me_);
  dzg_ = sol.tail(mi_);
  dsg_ = (-rcg - sg_.cwiseProduct(dzg_)).cwiseQuotient(zg_);
  dsl_.resize(lo_.size());
  dzl_.resize(lo_.size());
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    dsl_[k] = dx_[lo_[k]];
    dzl_[k] = (-rcl[k] - zl_[k] * dsl_[k]) / sl_[k];
  }
  dsu_.resize(up_.size());
  dzu_.resize(up_.size());
  for (std::size_t k = 0; k < up_.size(); ++k) {
    dsu_[k] = -dx_[up_[k]];
    dzu_[k] = (-rcu[k] - zu_[k] * dsu_[k]) / su_[k];
  }
}

double InteriorPoint::max_step() const {
  double a = 1.0;
  auto limit = [&a](const Vec& v, const Vec& dv) {
    for (int k = 0; k < v.size(); ++k)
      if (dv[k] < 0.0) a = std::min(a, -v[k] / dv[k]);
  };
  limit(sl_, dsl_);
  limit(zl_, dzl_);
  limit(su_, dsu_);
  limit(zu_, dzu_);
  limit(sg_, dsg_);
  limit(zg_, dzg_);
  return a;
}

Status InteriorPoint::run(Vec& x, Vec& y, Vec& zg, Vec& zl_full, Vec& zu_full,
                          Metrics& best_metrics, int& iterations) {
  initial_point();
  const double ncomp = static_cast<double>(sl_.size() + su_.size() + sg_.size());

  Vec best_x, best_y, best_zg, best_zl, best_zu, best_sl, best_su, best_sg;
  best_metrics.merit = std::numeric_limits<double>::infinity();
  auto remember = [&](const Metrics& m) {
    if (m.merit < best_metrics.merit) {
      best_metrics = m;
      best_x = x_;
      best_y = y_;
      best_zg = zg_;
      best_zl = zl_;
      best_zu = zu_;
    }
  };

  Status status = Status::IterLimit;
  Vec rd, re, rg;
  int it = 0;
  for (; it <= set_.max_iter; ++it) {
    residuals(rd, re, rg);
    const Metrics m = unscaled_metrics();
    remember(m);
    if (m.rel.primal <= set_.tol_primal && m.rel.dual <= set_.tol_dual &&
        m.rel.gap <= set_.tol_gap) {
      status = Status::Optimal;
      break;
    }
    if (it == set_.max_iter) break;

    const double dual_norm = std::max({inf_norm(y_), inf_norm(zg_), inf_norm(zl_), inf_norm(zu_)});
    if (inf_norm(x_) > kDivergence) {
      status = Status::Unbounded;
      break;
    }
    if (dual_norm > kDivergence) {
      status = Status::Infeasible;
      break;
    }

    if (!factorize()) break;

    const double mu0 = mu();
    // Predictor.
    direction(rd, re, rg, sl_.cwiseProduct(zl_), su_.cwiseProduct(zu_), sg_.cwiseProduct(zg_));
    double sigma = 0.0;
    if (ncomp > 0.0) {
      const double a_aff = max_step();
      const double mu_aff = ((sl_ + a_aff * dsl_).dot(zl_ + a_aff * dzl_) +
                             (su_ + a_aff * dsu_).dot(zu_ + a_aff * dzu_) +
                             (sg_ + a_aff * dsg_).dot(zg_ + a_aff * dzg_)) /
                            ncomp;
      sigma = mu0 > 0.0 ? std::clamp(std::pow(mu_aff / mu0, 3.0), 0.0, 1.0) : 0.0;
      // Corrector.
      const Vec rcl = sl_.cwiseProduct(zl_) + dsl_.cwiseProduct(dzl_) -
                      Vec::Constant(sl_.size(), sigma * mu0);
      const Vec rcu = su_.cwiseProduct(zu_) + dsu_.cwiseProduct(dzu_) -
                      Vec::Constant(su_.size(), sigma * mu0);
      const Vec rcg = sg_.cwiseProduct(zg_) + dsg_.cwiseProduct(dzg_) -
                      Vec::Constant(sg_.size(), sigma * mu0);
      direction(rd, re, rg, rcl, rcu, rcg);
      // The second-order term misleads far from the central path; fall back
      // to the plain centred direction when it allows the longer step.
      if (max_step() < 0.5 * a_aff) {
        const Vec dx = dx_, dy = dy_, dzg = dzg_, dsg = dsg_, dzl = dzl_, dsl = dsl_, dzu = dzu_,
                  dsu = dsu_;
        const double a_corr = max_step();
        direction(rd, re, rg, sl_.cwiseProduct(zl_) - Vec::Constant(sl_.size(), sigma * mu0),
                  su_.cwiseProduct(zu_) - Vec::Constant(su_.size(), sigma * mu0),
                  sg_.cwiseProduct(zg_) - Vec::Constant(sg_.size(), sigma * mu0));
        if (max_step() < a_corr) {
          dx_ = dx, dy_ = dy, dzg_ = dzg, dsg_ = dsg, dzl_ = dzl, dsl_ = dsl, dzu_ = dzu, dsu_ = dsu;
        }
      }
    }
    const double alpha = std::min(1.0, kStepFraction * max_step());

    x_ += alpha * dx_;
    y_ += alpha * dy_;
    zg_ += alpha * dzg_;
    sg_ += alpha * dsg_;
    zl_ += alpha * dzl_;
    sl_ += alpha * dsl_;
    zu_ += alpha * dzu_;
    su_ += alpha * dsu_;
  }
  iterations = it;

  if (status != Status::Optimal) {
    x_ = best_x;
    y_ = best_y;
    zg_ = best_zg;
    zl_ = best_zl;
    zu_ = best_zu;
  }

  x = sc_.d.cwiseProduct(x_);
  y = sc_.ea.cwiseProduct(y_) / sc_.c;
  zg = sc_.eg.cwiseProduct(zg_) / sc_.c;
  zl_full = Vec::Zero(n_);
  zu_full = Vec::Zero(n_);
  for (std::size_t k = 0; k < lo_.size(); ++k)
    zl_full[lo_[k]] = zl_[k] / (sc_.c * sc_.d[lo_[k]]);
  for (std::size_t k = 0; k < up_.size(); ++k)
    zu_full[up_[k]] = zu_[k] / (sc_.c * sc_.d[up_[k]]);
  return status;
}

SpMat rows_to_matrix(const std::vector<std::map<int, double>>& rows, int n) {
  std::vector<Trip> trips;
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (const auto& [j, v] : rows[k]) trips.emplace_back(static_cast<int>(k), j, v);
  SpMat M(static_cast<int>(rows.size()), n);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

// A row is forcing when its bounds leave exactly one way to satisfy it:
// every variable must sit at the bound that attains the row's extreme
// activity. Such rows have no interior, which leaves the interior-point
// duals unbounded, so they are removed and their variables fixed.
struct ForcedRow {
  std::size_t row = 0;
  bool at_max = false;    // equality row met at its maximum activity
  std::vector<int> vars;  // variables this row fixed
};

std::vector<ForcedRow> presolve_forcing_rows(const std::vector<std::map<int, double>>& rows,
                                             const QuadraticProgram& qp, std::vector<double>& lower,
                                             std::vector<double>& upper, std::vector<char>& dropped) {
  std::vector<ForcedRow> forced;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (dropped[k] || rows[k].empty()) continue;
      const auto& r = qp.constraint(k);
      double lo = 0.0, hi = 0.0, scale = std::abs(r.rhs);
      for (const auto& [j, a] : rows[k]) {
        const double at_lo = a > 0.0 ? lower[j] : upper[j];
        const double at_hi = a > 0.0 ? upper[j] : lower[j];
        lo += a * at_lo;
        hi += a * at_hi;
        scale += std::abs(a) * (std::isfinite(at_lo) ? std::abs(at_lo) : 0.0) +
                 std::abs(a) * (std::isfinite(at_hi) ? std::abs(at_hi) : 0.0);
      }
      const double tol = 1e-12 * (1.0 + scale);
      const bool min_forced = std::isfinite(lo) && std::abs(lo - r.rhs) <= tol;
      const bool max_forced =
          r.relation == Relation::Equal && !min_forced && std::isfinite(hi) && std::abs(hi - r.rhs) <= tol;
      if (!min_forced && !max_forced) continue;

      ForcedRow f{k, max_forced, {}};
      for (const auto& [j, a] : rows[k]) {
        if (lower[j] == upper[j]) continue;
        const double v = (a > 0.0) != max_forced ? lower[j] : upper[j];
        lower[j] = upper[j] = v;
        f.vars.push_back(j);
      }
      dropped[k] = 1;
      forced.push_back(std::move(f));
      changed = true;
    }
  }
  return forced;
}

}  // namespace

Solution solve(const QuadraticProgram& qp, const Settings& settings) {
  qp.validate();
  const int n = static_cast<int>(qp.variable_count());
  const auto m = qp.constraint_count();

  Solution sol;
  sol.x.assign(n, 0.0);
  sol.row_duals.assign(m, 0.0);
  sol.lower_duals.assign(n, 0.0);
  sol.upper_duals.assign(n, 0.0);

  // Presolve: bounds sanity, empty rows, forcing rows, fixed variables.
  for (int j = 0; j < n; ++j)
    if (qp.lower()[j] > qp.upper()[j]) {
      sol.status = Status::Infeasible;
      return sol;
    }

  std::vector<std::map<int, double>> rows(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& r = qp.constraint(k);
    for (const auto& t : r.terms) rows[k][static_cast<int>(t.var)] += t.coef;
    std::erase_if(rows[k], [](const auto& kv) { return kv.second == 0.0; });
    if (rows[k].empty()) {
      const double slack = 1e-9 * std::max(1.0, std::abs(r.rhs));
      const bool ok = r.relation == Relation::Equal ? std::abs(r.rhs) <= slack : r.rhs >= -slack;
      if (!ok) {
        sol.status = Status::Infeasible;
        return sol;
      }
    }
  }
  std::vector<double> lower(qp.lower().begin(), qp.lower().end());
  std::vector<double> upper(qp.upper().begin(), qp.upper().end());
  std::vector<char> dropped(m, 0);
  const auto forced = presolve_forcing_rows(rows, qp, lower, upper, dropped);

  // Fixed variables are substituted out; the solver sees only the rest.
  std::vector<int> active_of(n, -1), original_of;
  for (int j = 0; j < n; ++j)
    if (lower[j] != upper[j]) {
      active_of[j] = static_cast<int>(original_of.size());
      original_of.push_back(j);
    }
  const int na = static_cast<int>(original_of.size());
  std::vector<double> xfull(n, 0.0);
  for (int j = 0; j < n; ++j)
    if (active_of[j] < 0) xfull[j] = lower[j];
  const std::vector<double> qfixed = qp.q_times(xfull);  // Q x restricted to fixed columns

  Standard st;
  st.n = na;
  st.q.resize(na);
  st.l.resize(na);
  st.u.resize(na);
  for (int a = 0; a < na; ++a) {
    const int j = original_of[a];
    st.q[a] = qp.linear()[j] + qfixed[j];
    st.l[a] = lower[j];
    st.u[a] = upper[j];
  }

  std::vector<std::map<int, double>> eq_rows, ineq_rows;
  std::vector<double> eq_rhs, ineq_rhs;
  for (std::size_t k = 0; k < m; ++k) {
    if (dropped[k] || rows[k].empty()) continue;
    const auto& r = qp.constraint(k);
    std::map<int, double> reduced;
    double rhs = r.rhs;
    for (const auto& [j, a] : rows[k]) {
      if (active_of[j] >= 0)
        reduced[active_of[j]] = a;
      else
        rhs -= a * xfull[j];
    }
    if (reduced.empty()) {
      const double slack = 1e-9 * std::max(1.0, std::abs(r.rhs));
      const bool ok = r.relation == Relation::Equal ? std::abs(rhs) <= slack : rhs >= -slack;
      if (!ok) {
        sol.status = Status::Infeasible;
        return sol;
      }
      continue;
    }
    if (r.relation == Relation::Equal) {
      eq_rows.push_back(std::move(reduced));
      eq_rhs.push_back(rhs);
      st.eq_source.push_back(static_cast<long>(k));
    } else {
      ineq_rows.push_back(std::move(reduced));
      ineq_rhs.push_back(rhs);
      st.ineq_source.push_back(static_cast<long>(k));
    }
  }

  {
    std::vector<Trip> trips;
    for (const auto& e : qp.quadratic_entries()) {
      const int i = active_of[e.row], j = active_of[e.col];
      if (i < 0 || j < 0) continue;
      trips.emplace_back(i, j, e.value);
      if (i != j) trips.emplace_back(j, i, e.value);
    }
    st.Q.resize(na, na);
    st.Q.setFromTriplets(trips.begin(), trips.end());
    st.Q.makeCompressed();
  }
  st.A = rows_to_matrix(eq_rows, na);
  st.G = rows_to_matrix(ineq_rows, na);
  st.b = Eigen::Map<const Vec>(eq_rhs.data(), static_cast<int>(eq_rhs.size()));
  st.h = Eigen::Map<const Vec>(ineq_rhs.data(), static_cast<int>(ineq_rhs.size()));

  if (na == 0) {
    sol.status = Status::Optimal;
  } else {
    Standard scaled = st;
    Scaling sc = ruiz(scaled, settings.scale);
    InteriorPoint ipm(st, std::move(scaled), std::move(sc), settings);
    Vec x, y, zg, zl, zu;
    Metrics metrics;
    sol.status = ipm.run(x, y, zg, zl, zu, metrics, sol.iterations);
    sol.residuals = metrics.rel;
    for (int a = 0; a < na; ++a) {
      const int j = original_of[a];
      xfull[j] = x[a];
      sol.lower_duals[j] = zl[a];
      sol.upper_duals[j] = zu[a];
    }
    for (std::size_t k = 0; k < st.eq_source.size(); ++k)
      sol.row_duals[static_cast<std::size_t>(st.eq_source[k])] = y[static_cast<int>(k)];
    for (std::size_t k = 0; k < st.ineq_source.size(); ++k)
      sol.row_duals[static_cast<std::size_t>(st.ineq_source[k])] = zg[static_cast<int>(k)];
  }
  sol.x = xfull;

  // Postsolve. Forced rows are handled newest first: each row dual is the
  // smallest shift that gives the variables it fixed correctly signed bound
  // duals. Every fixed variable then takes its reduced cost as bound dual.
  if (na < n) {
    std::vector<double> reduced = qp.q_times(sol.x);
    for (int j = 0; j < n; ++j) reduced[j] += qp.linear()[j];
    for (std::size_t k = 0; k < m; ++k)
      if (sol.row_duals[k] != 0.0)
        for (const auto& t : qp.constraint(k).terms) reduced[t.var] += t.coef * sol.row_duals[k];
    for (auto f = forced.rbegin(); f != forced.rend(); ++f) {
      const auto& r = qp.constraint(f->row);
      double y = f->at_max ? kInf : (r.relation == Relation::LessEqual ? 0.0 : -kInf);
      for (int j : f->vars) {
        const double ratio = -reduced[j] / rows[f->row].at(j);
        y = f->at_max ? std::min(y, ratio) : std::max(y, ratio);
      }
      if (!std::isfinite(y)) y = 0.0;
      sol.row_duals[f->row] = y;
      for (const auto& [j, a] : rows[f->row]) reduced[j] += a * y;
    }
    for (int j = 0; j < n; ++j) {
      if (active_of[j] >= 0) continue;
      sol.lower_duals[j] = std::max(reduced[j], 0.0);
      sol.upper_duals[j] = std::max(-reduced[j], 0.0);
    }
  }

  sol.objective = qp.objective(sol.x);
  return sol;
}

}  // namespace gridmech::qp
