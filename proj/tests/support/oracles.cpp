#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace gridmech::oracle {

double toy_system_cost(const ToyMarket& m, double X) {
  const double vre = std::min(m.capacity_factor * X, m.demand);
  double cer = m.demand - vre;
  double shed = 0.0;
  if (cer > m.capacity) {
    shed = cer - m.capacity;
    cer = m.capacity;
  }
  // Shedding is cheaper than CER output once the marginal cost passes VOLL.
  if (m.slope * cer + m.intercept > m.voll) {
    const double cheap = std::max(0.0, (m.voll - m.intercept) / m.slope);
    shed += cer - cheap;
    cer = cheap;
  }
  return m.unit_cost * X + 0.5 * m.slope * cer * cer + m.intercept * cer + m.voll * shed;
}

double toy_capped_price(const ToyMarket& m, double supply) {
  const double cer = std::min(m.demand - supply, m.capacity);
  return m.slope * cer + m.intercept;
}

double toy_cournot_total(const ToyMarket& m, int investors) {
  const double n = investors;
  const double per = (m.slope * m.demand + m.intercept - m.unit_cost) / (m.slope * (n + 1.0));
  return n * per;
}

Extremum grid_minimize(const std::function<double(double)>& f, double lo, double hi, int points,
                       int rounds) {
  Extremum best{lo, f(lo)};
  for (int r = 0; r < rounds; ++r) {
    const double step = (hi - lo) / (points - 1);
    for (int k = 0; k < points; ++k) {
      const double x = lo + step * k;
      const double v = f(x);
      if (v < best.value) best = {x, v};
    }
    lo = std::max(lo, best.x - 2.0 * step);
    hi = std::min(hi, best.x + 2.0 * step);
  }
  return best;
}

double toy_best_response_fixed_point(const ToyMarket& m, int investors) {
  std::vector<double> a(investors, 0.0);
  for (int sweep = 0; sweep < 400; ++sweep) {
    double moved = 0.0;
    for (int i = 0; i < investors; ++i) {
      double others = 0.0;
      for (int j = 0; j < investors; ++j)
        if (j != i) others += a[j];
      const double room = std::max(0.0, m.demand - others);
      auto loss = [&](double x) {
        return -(toy_capped_price(m, others + x) - m.unit_cost) * x;
      };
      const double next = grid_minimize(loss, 0.0, room, 401, 10).x;
      moved = std::max(moved, std::abs(next - a[i]));
      a[i] = next;
    }
    if (moved < 1e-9) break;
  }
  return a[0];
}

ActiveSetSolution enumerate_active_sets(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                                        const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(Q.rows());
  const int m = static_cast<int>(A.rows());
  ActiveSetSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> active;
    for (int k = 0; k < m; ++k)
      if (mask & (1u << k)) active.push_back(k);
    const int s = static_cast<int>(active.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + s, n + s);
    Eigen::VectorXd rhs(n + s);
    K.topLeftCorner(n, n) = Q;
    rhs.head(n) = -q;
    for (int r = 0; r < s; ++r) {
      K.block(0, n + r, n, 1) = A.row(active[r]).transpose();
      K.block(n + r, 0, 1, n) = A.row(active[r]);
      rhs(n + r) = b(active[r]);
    }
    ++best.sets_tried;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + s) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    const Eigen::VectorXd y = sol.tail(s);
    if (((A * x - b).array() > 1e-9).any() || (s > 0 && (y.array() < -1e-9).any())) continue;
    const double obj = 0.5 * x.dot(Q * x) + q.dot(x);
    if (obj < best.objective) {
      best.x = x;
      best.multipliers = Eigen::VectorXd::Zero(m);
      for (int r = 0; r < s; ++r) best.multipliers(active[r]) = y(r);
      best.objective = obj;
      best.found = true;
    }
  }
  return best;
}

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

std::string synthetic_market_csv(int days, double slope, double constant, double noise,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::ostringstream os;
  os.precision(17);
  os << "timestamp,price,demand,vre\n";
  static const int month_days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int month = 0, day = 1, year = 2021;
  for (int d = 0; d < days; ++d) {
    for (int h = 0; h < 24; ++h) {
      const double demand = 900.0 + 300.0 * std::sin((h - 4) * 3.14159265358979 / 12.0) + 40.0 * u(rng);
      const double vre = (h >= 7 && h <= 17) ? 250.0 * (1.0 + 0.2 * u(rng)) : 20.0 * (1.0 + u(rng));
      const double price = slope * (demand - vre) + constant + noise * u(rng);
      char stamp[32];
      std::snprintf(stamp, sizeof stamp, "%04d-%02d-%02dT%02d:00:00Z", year, month + 1, day, h);
      os << stamp << ',' << price << ',' << demand << ',' << vre << '\n';
    }
    if (++day > month_days[month]) {
      day = 1;
      if (++month == 12) {
        month = 0;
        ++year;
      }
    }
  }
  return os.str();
}

}  // namespace gridmech::oracle
