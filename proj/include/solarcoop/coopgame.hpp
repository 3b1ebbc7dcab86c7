#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "solarcoop/allocation_vector.hpp"
#include "solarcoop/billing.hpp"
#include "solarcoop/parallel.hpp"

namespace solarcoop {

inline constexpr std::size_t kMaxGamePlayers = 20;
inline constexpr std::size_t kMaxShapleyPlayers = 12;
// Absolute tolerance for every game inequality; ties count as satisfied.
inline constexpr double kMoneyTolerance = 1e-6;   // cents
inline constexpr double kEnergyTolerance = 1e-9;  // kWh

// Bit i set <=> the i-th player (ascending id) is a member.
using CoalitionMask = std::uint32_t;

// Coalition -> cost table over all nonempty subsets of at most 20 players.
class CostGame {
 public:
  // costs has 2^N entries indexed by mask; costs[0] is the empty coalition and
  // is forced to zero. Players must be ascending and unique.
  CostGame(std::vector<HouseholdId> players, Mechanism mechanism, std::vector<double> costs, BillingPeriod period = {});

  const std::vector<HouseholdId>& players() const noexcept { return players_; }
  std::size_t size() const noexcept { return players_.size(); }
  Mechanism mechanism() const noexcept { return mechanism_; }
  const BillingPeriod& period() const noexcept { return period_; }

  CoalitionMask full_mask() const noexcept { return static_cast<CoalitionMask>((std::uint64_t{1} << size()) - 1); }
  Money cost(CoalitionMask mask) const { return Money(costs_.at(mask)); }
  Money grand_cost() const { return cost(full_mask()); }
  std::span<const double> table() const noexcept { return costs_; }

  std::vector<HouseholdId> members(CoalitionMask mask) const;
  CoalitionMask mask_of(std::span<const HouseholdId> ids) const;  // throws UnknownHousehold

 private:
  std::vector<HouseholdId> players_;
  Mechanism mechanism_;
  std::vector<double> costs_;
  BillingPeriod period_;
};

// costs[S] = cost_of(aggregate_series(S)) for every nonempty S, bit for bit,
// whatever the worker count. Throws TooManyPlayers above kMaxGamePlayers.
CostGame build_cost_game(const CommunityDataset& dataset, Mechanism mechanism, const PriceSchedule& prices,
                         const BillingPeriod& period, const ExecutionOptions& exec = {});

struct SubadditivityWitness {
  CoalitionMask s = 0;
  CoalitionMask t = 0;
  Money cost_s;
  Money cost_t;
  Money cost_union;
};

struct SubadditivityReport {
  bool holds = true;
  // Lowest s, then lowest t > s, with C(s|t) > C(s) + C(t) + tolerance.
  std::optional<SubadditivityWitness> witness;
  std::uint64_t disjoint_pairs = 0;  // unordered pairs of nonempty disjoint coalitions
};

SubadditivityReport check_subadditivity(const CostGame& game, const ExecutionOptions& exec = {});

struct CoreViolation {
  CoalitionMask coalition = 0;
  Money allocated;
  Money cost;
};

struct CoreReport {
  bool in_core = false;
  bool budget_balanced = false;
  Money allocated_total;
  Money grand_cost;
  std::vector<CoreViolation> violations;  // ascending mask
};

// x must list exactly the game's players. Throws DimensionMismatch otherwise.
CoreReport check_core_membership(const CostGame& game, const AllocationVector& x);

// Exact Shapley value by weighted marginal contributions over subsets.
// Throws TooManyPlayers above kMaxShapleyPlayers.
AllocationVector shapley_value(const CostGame& game);

// Players i, j are interchangeable: C(S+i) == C(S+j) for all S without i, j.
bool symmetric_players(const CostGame& game, std::size_t i, std::size_t j, double tolerance = kMoneyTolerance);

}  // namespace solarcoop
