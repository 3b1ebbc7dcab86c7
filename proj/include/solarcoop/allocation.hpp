#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solarcoop/allocation_vector.hpp"
#include "solarcoop/billing.hpp"
#include "solarcoop/coopgame.hpp"

namespace solarcoop {

// Net-metering sharing rule: x_i = lambda*D_i when the coalition net D_N >= 0,
// else mu*D_i, with D the period net consumption. Budget balanced by
// construction. Computable for any prices; adds a warning when lambda < mu.
AllocationVector allocate_nm(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                             std::span<const HouseholdId> coalition);

// Net purchase-and-sale sharing rule: the net-metering rule applied to every
// interval (lambda branch when D_N(t) >= 0), summed over the period. The
// per-interval breakdown is kept in AllocationVector::per_interval.
AllocationVector allocate_nps(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                              std::span<const HouseholdId> coalition);

enum class Axiom {
  Equity,
  Monotonicity,
  IndividualRationality,
  BudgetBalance,
  StandaloneCost,
  PenaltyForCausing,
  RewardForMitigating,
};
inline constexpr std::array<Axiom, 7> kAllAxioms = {
    Axiom::Equity,         Axiom::Monotonicity,      Axiom::IndividualRationality, Axiom::BudgetBalance,
    Axiom::StandaloneCost, Axiom::PenaltyForCausing, Axiom::RewardForMitigating};

std::string_view to_string(Axiom a);

enum class AxiomStatus { Pass, Fail, Vacuous };
std::string_view to_string(AxiomStatus s);

struct AxiomWitness {
  std::vector<HouseholdId> households;
  std::vector<double> net_kwh;       // D of each listed household (per interval when `interval` is set)
  std::vector<Money> allocated;      // allocation of each listed household (same granularity)
  std::optional<std::size_t> interval;
  std::optional<CoalitionMask> coalition;
  std::string detail;
};

struct AxiomResult {
  Axiom axiom = Axiom::Equity;
  AxiomStatus status = AxiomStatus::Vacuous;
  std::optional<AxiomWitness> witness;  // present iff status == Fail
  // false when the sharing theorems do not cover this axiom at these prices
  bool guaranteed = true;
  bool audited_per_interval = false;
};

struct AxiomReport {
  std::array<AxiomResult, 7> results{};
  bool per_interval = false;
  // Observations that are not axiom failures (e.g. a zero-net household charged).
  std::vector<std::string> findings;

  const AxiomResult& operator[](Axiom a) const { return results[static_cast<std::size_t>(a)]; }
  bool all_pass_or_vacuous() const;
  // Axioms 1-4 and 6-7 hold.
  bool cost_causation_based() const;
};

// Checks each axiom literally. Equity, monotonicity, penalty and reward are
// audited per interval when x carries a per-interval breakdown, otherwise on
// period totals. Throws DimensionMismatch when the game players differ from x.
AxiomReport audit_axioms(const AllocationVector& x, const CommunityDataset& dataset, const PriceSchedule& prices,
                         const BillingPeriod& period, const CostGame& game);

struct HouseholdSavings {
  HouseholdId household;
  double net_kwh = 0.0;  // period net consumption D_i
  Money standalone;      // C_i under the mechanism
  Money allocated;       // x_i
  Money saving;          // C_i - x_i
  Money closed_form;     // piecewise saving formula (diagnostic)
  double saving_pct = 0.0;  // saving / |C_i| * 100; NaN when C_i == 0
};

// Place where the piecewise formula and the direct saving may disagree: the
// coalition net is exactly zero while the household's is not.
struct SavingsBoundaryFlag {
  HouseholdId household;
  std::optional<std::size_t> interval;  // unset for period-level (NM) flags
  double household_net_kwh = 0.0;
  Money direct;
  Money closed_form;
  bool diverges = false;
};

struct SavingsReport {
  Mechanism mechanism = Mechanism::NM;
  BillingPeriod period{};
  std::vector<HouseholdSavings> households;
  std::vector<SavingsBoundaryFlag> boundary_flags;
  Money total_standalone;
  Money total_allocated;
  Money total_saving;
  double saving_pct = 0.0;  // total_saving / |total_standalone| * 100
};

// mechanism must be NM or NPS (InvalidArgument otherwise).
SavingsReport savings(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                      std::span<const HouseholdId> coalition, Mechanism mechanism);

struct SavingsDifference {
  HouseholdId household;
  Money direct;       // S_i^NPS - S_i^NM from the direct savings
  Money closed_form;  // piecewise comparison formula
};

struct SavingsComparison {
  SavingsReport nm;
  SavingsReport nps;
  std::vector<SavingsDifference> differences;
};

SavingsComparison compare_savings(const CommunityDataset& dataset, const PriceSchedule& prices,
                                  const BillingPeriod& period, std::span<const HouseholdId> coalition);

struct CostGap {
  Money nps_cost;
  Money nm_cost;
  Money gap;        // nps_cost - nm_cost
  Money predicted;  // (lambda-mu) * (G^NPS if D >= 0 else Q^NPS)
  double net_kwh = 0.0;
  bool price_order_violated = false;  // lambda < mu: identity not asserted
};

// Throws IdentityViolation if lambda >= mu and |gap - predicted| exceeds the
// money tolerance.
CostGap mechanism_cost_gap(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                           std::span<const HouseholdId> coalition);

// Percent saving with an absolute-value denominator; NaN for a zero baseline.
double saving_percent(Money saving, Money baseline);

struct ShapleyHuntOptions {
  std::size_t trials = 200;
  std::size_t max_households = 5;
  std::size_t intervals = 96;  // one day at 15 minutes, so the PV window is covered
  std::uint64_t seed = 1;
  double lambda = 2.0;
  double mu = 1.0;
  Mechanism mechanism = Mechanism::NPS;
};

struct ShapleyHuntResult {
  std::size_t trial = 0;
  std::uint64_t instance_seed = 0;
  CommunityDataset dataset;
  AllocationVector shapley;
  AxiomReport report;
};

// Random search over synthetic communities for an instance where the Shapley
// value fails a cost-causation axiom (audited on period totals).
std::optional<ShapleyHuntResult> hunt_shapley_witness(const ShapleyHuntOptions& options);

}  // namespace solarcoop
