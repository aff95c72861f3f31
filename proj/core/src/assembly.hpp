#pragma once

// Shared QP assembly for the planning problem and the potential game.
// Internal to the library.

#include <cstddef>
#include <span>
#include <vector>

#include "gridmech/model.hpp"
#include "gridmech/qp.hpp"

namespace gridmech::detail {

// Hour index k = w * T + t throughout.

struct VreVars {
  std::size_t capacity = 0;
  std::vector<std::size_t> market, curtailed, shed;
};

struct EsVars {
  std::size_t energy = 0, power = 0;
  std::vector<std::size_t> charge, discharge, soc, shed;
};

struct InvestorBlocks {
  std::vector<VreVars> vre;
  std::vector<EsVars> es;
  bool has_shed = false;

  /// Net supply of investor `ordinal` at hour k, plus its lost-load share
  /// when `with_shed`.
  std::vector<qp::Term> supply_terms(std::size_t ordinal, std::size_t k, bool with_shed) const;
};

struct BlockOptions {
  double investment_cost_scale = 1.0;
  bool lost_load_share = false;  // per-investor lost-load variable priced at VOLL
};

/// Variables, resource constraints and costs of every investor.
InvestorBlocks add_investor_blocks(qp::QuadraticProgram& qp, const MarketInstance& instance,
                                   const BlockOptions& options);

/// Adds weight/2 * (sum c_k x_k)^2 to the objective.
void add_squared_sum(qp::QuadraticProgram& qp, std::span<const qp::Term> terms, double weight);

/// Investor part of a profile read from a primal vector; system fields are
/// zero tables.
DecisionProfile read_investors(const InvestorBlocks& blocks, const MarketInstance& instance,
                               std::span<const double> x);

struct MarketOptions {
  BlockOptions blocks;
  double supply_quadratic_weight = 0.0;  // weight on 1/2 a (supply incl. shed)^2
  HourlyTable intercept_shift;           // added to b in the CER cost
};

/// Single-bus market: investors, CER output, lost load (system-level, or
/// per investor when `blocks.lost_load_share`), one balance row per hour.
struct MarketProblem {
  qp::QuadraticProgram qp;
  InvestorBlocks blocks;
  std::vector<std::size_t> cer;
  std::vector<std::size_t> shed;  // empty with per-investor lost load
  std::vector<std::size_t> balance;
};

MarketProblem assemble_market(const MarketInstance& instance, const MarketOptions& options);

/// Full profile from a solved market problem.
DecisionProfile read_profile(const MarketProblem& problem, const MarketInstance& instance,
                             std::span<const double> x);

}  // namespace gridmech::detail
