#include "solarcoop/coopgame.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>

#include "solarcoop/errors.hpp"

namespace solarcoop {

Money AllocationVector::total() const {
  Money sum;
  for (const Money m : amounts) sum += m;
  return sum;
}

Money AllocationVector::at(const HouseholdId& id) const {
  for (std::size_t i = 0; i < households.size(); ++i) {
    if (households[i] == id) return amounts[i];
  }
  throw Error(ErrorKind::UnknownHousehold, "household " + id.str() + " has no allocation");
}

CostGame::CostGame(std::vector<HouseholdId> players, Mechanism mechanism, std::vector<double> costs,
                   BillingPeriod period)
    : players_(std::move(players)), mechanism_(mechanism), costs_(std::move(costs)), period_(period) {
  if (players_.empty()) throw Error(ErrorKind::InvalidArgument, "game has no players");
  if (players_.size() > kMaxGamePlayers) {
    throw Error(ErrorKind::TooManyPlayers, std::to_string(players_.size()) + " players; the coalition table is capped at " +
                                               std::to_string(kMaxGamePlayers));
  }
  for (std::size_t i = 1; i < players_.size(); ++i) {
    if (!(players_[i - 1] < players_[i])) throw Error(ErrorKind::InvalidArgument, "players must be ascending and unique");
  }
  if (costs_.size() != (std::size_t{1} << players_.size())) {
    throw Error(ErrorKind::DimensionMismatch, "cost table needs 2^N entries");
  }
  costs_[0] = 0.0;
}

std::vector<HouseholdId> CostGame::members(CoalitionMask mask) const {
  std::vector<HouseholdId> out;
  for (std::size_t i = 0; i < players_.size(); ++i) {
    if (mask & (CoalitionMask{1} << i)) out.push_back(players_[i]);
  }
  return out;
}

CoalitionMask CostGame::mask_of(std::span<const HouseholdId> ids) const {
  CoalitionMask mask = 0;
  for (const auto& id : ids) {
    const auto it = std::lower_bound(players_.begin(), players_.end(), id);
    if (it == players_.end() || *it != id) throw Error(ErrorKind::UnknownHousehold, "household " + id.str());
    mask |= CoalitionMask{1} << (it - players_.begin());
  }
  return mask;
}

namespace {

// Enumerates supersets of a fixed low-bit pattern by depth-first extension
// with ascending high bits, so every coalition's per-interval sums are formed
// by adding members in ascending order starting from 0.0.
class GameTableFiller {
 public:
  GameTableFiller(const std::vector<MeterSeries>& series, Mechanism mechanism, const PriceSchedule& prices,
                  std::vector<double>& costs)
      : series_(series),
        mechanism_(mechanism),
        prices_(prices),
        costs_(costs),
        players_(series.size()),
        length_(series.front().size()) {}

  void fill_pattern(CoalitionMask pattern, std::size_t low_bits) {
    const std::size_t depth = players_ - low_bits + 1;
    std::vector<double> q_stack(depth * length_, 0.0), g_stack(depth * length_, 0.0);
    for (std::size_t b = 0; b < low_bits; ++b) {
      if (pattern & (CoalitionMask{1} << b)) accumulate(q_stack.data(), g_stack.data(), b);
    }
    if (pattern != 0) record(pattern, q_stack.data(), g_stack.data());
    extend(pattern, low_bits, 0, q_stack, g_stack);
  }

 private:
  void accumulate(double* q, double* g, std::size_t player) const {
    const auto sq = series_[player].consumption();
    const auto sg = series_[player].generation();
    for (std::size_t t = 0; t < length_; ++t) {
      q[t] += sq[t];
      g[t] += sg[t];
    }
  }

  void record(CoalitionMask mask, const double* q, const double* g) {
    costs_[mask] =
        cost_of(std::span<const double>(q, length_), std::span<const double>(g, length_), mechanism_, prices_).cents();
  }

  void extend(CoalitionMask mask, std::size_t from_bit, std::size_t level, std::vector<double>& q_stack,
              std::vector<double>& g_stack) {
    const double* q = q_stack.data() + level * length_;
    const double* g = g_stack.data() + level * length_;
    double* nq = q_stack.data() + (level + 1) * length_;
    double* ng = g_stack.data() + (level + 1) * length_;
    for (std::size_t b = from_bit; b < players_; ++b) {
      const auto sq = series_[b].consumption();
      const auto sg = series_[b].generation();
      for (std::size_t t = 0; t < length_; ++t) {
        nq[t] = q[t] + sq[t];
        ng[t] = g[t] + sg[t];
      }
      const CoalitionMask next = mask | (CoalitionMask{1} << b);
      record(next, nq, ng);
      extend(next, b + 1, level + 1, q_stack, g_stack);
    }
  }

  const std::vector<MeterSeries>& series_;
  Mechanism mechanism_;
  const PriceSchedule& prices_;
  std::vector<double>& costs_;
  std::size_t players_;
  std::size_t length_;
};

}  // namespace

CostGame build_cost_game(const CommunityDataset& dataset, Mechanism mechanism, const PriceSchedule& prices,
                         const BillingPeriod& period, const ExecutionOptions& exec) {
  const std::size_t n = dataset.size();
  if (n > kMaxGamePlayers) {
    throw Error(ErrorKind::TooManyPlayers,
                std::to_string(n) + " households; the coalition table is capped at " + std::to_string(kMaxGamePlayers));
  }
  const CommunityDataset sliced = slice_period(dataset, period);
  const std::vector<MeterSeries> series(sliced.households().begin(), sliced.households().end());

  std::vector<double> costs(std::size_t{1} << n, 0.0);
  const std::size_t low_bits = std::min<std::size_t>(n, 6);
  GameTableFiller filler(series, mechanism, prices, costs);
  run_tasks(std::size_t{1} << low_bits, exec,
            [&](std::size_t pattern) { filler.fill_pattern(static_cast<CoalitionMask>(pattern), low_bits); });
  return CostGame(sliced.ids(), mechanism, std::move(costs), period);
}

SubadditivityReport check_subadditivity(const CostGame& game, const ExecutionOptions& exec) {
  const CoalitionMask full = game.full_mask();
  const auto costs = game.table();
  const std::uint64_t masks = std::uint64_t{full} + 1;
  const std::uint64_t chunk = std::max<std::uint64_t>(1, masks / 256);
  const std::size_t tasks = static_cast<std::size_t>((masks + chunk - 1) / chunk);

  constexpr CoalitionMask kNone = std::numeric_limits<CoalitionMask>::max();
  std::atomic<CoalitionMask> best_s{kNone};
  std::vector<std::optional<SubadditivityWitness>> found(tasks);

  run_tasks(tasks, exec, [&](std::size_t task) {
    const std::uint64_t lo = std::max<std::uint64_t>(1, task * chunk);
    const std::uint64_t hi = std::min<std::uint64_t>(masks, (task + 1) * chunk);
    for (std::uint64_t s64 = lo; s64 < hi; ++s64) {
      const auto s = static_cast<CoalitionMask>(s64);
      if (s > best_s.load(std::memory_order_relaxed)) return;
      const CoalitionMask comp = full & ~s;
      CoalitionMask best_t = kNone;
      for (CoalitionMask t = comp; t != 0; t = (t - 1) & comp) {
        if (t <= s) break;  // submasks come in descending order
        if (costs[s | t] > costs[s] + costs[t] + kMoneyTolerance) best_t = std::min(best_t, t);
      }
      if (best_t != kNone) {
        found[task] = SubadditivityWitness{s, best_t, Money(costs[s]), Money(costs[best_t]), Money(costs[s | best_t])};
        CoalitionMask cur = best_s.load();
        while (s < cur && !best_s.compare_exchange_weak(cur, s)) {
        }
        return;
      }
    }
  });

  SubadditivityReport report;
  // (3^N - 2^(N+1) + 1) / 2 unordered pairs of nonempty disjoint coalitions
  std::uint64_t pow3 = 1;
  for (std::size_t i = 0; i < game.size(); ++i) pow3 *= 3;
  report.disjoint_pairs = (pow3 - 2 * masks + 1) / 2;
  for (const auto& w : found) {
    if (w) {
      report.holds = false;
      report.witness = w;
      break;
    }
  }
  return report;
}

CoreReport check_core_membership(const CostGame& game, const AllocationVector& x) {
  if (x.households != game.players() || x.amounts.size() != x.households.size()) {
    throw Error(ErrorKind::DimensionMismatch, "allocation households do not match the game players");
  }
  const CoalitionMask full = game.full_mask();
  const auto costs = game.table();
  std::vector<double> partial(std::size_t{full} + 1, 0.0);

  CoreReport report;
  report.grand_cost = game.grand_cost();
  report.allocated_total = x.total();
  report.budget_balanced =
      std::abs(report.allocated_total.cents() - report.grand_cost.cents()) <= kMoneyTolerance;
  for (std::uint64_t m64 = 1; m64 <= full; ++m64) {
    const auto mask = static_cast<CoalitionMask>(m64);
    const CoalitionMask rest = mask & (mask - 1);
    partial[mask] = partial[rest] + x.amounts[static_cast<std::size_t>(std::countr_zero(mask))].cents();
    if (partial[mask] > costs[mask] + kMoneyTolerance) {
      report.violations.push_back({mask, Money(partial[mask]), Money(costs[mask])});
    }
  }
  report.in_core = report.budget_balanced && report.violations.empty();
  return report;
}

AllocationVector shapley_value(const CostGame& game) {
  const std::size_t n = game.size();
  if (n > kMaxShapleyPlayers) {
    throw Error(ErrorKind::TooManyPlayers,
                std::to_string(n) + " players; exact Shapley is capped at " + std::to_string(kMaxShapleyPlayers));
  }
  // weight[s] = s! (n-s-1)! / n!
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = std::exp(std::lgamma(double(s) + 1) + std::lgamma(double(n - s)) - std::lgamma(double(n) + 1));
  }
  const CoalitionMask full = game.full_mask();
  const auto costs = game.table();

  AllocationVector out;
  out.households = game.players();
  out.mechanism = game.mechanism();
  out.period = game.period();
  out.amounts.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CoalitionMask bit = CoalitionMask{1} << i;
    double phi = 0.0;
    for (std::uint64_t s64 = 0; s64 <= full; ++s64) {
      const auto s = static_cast<CoalitionMask>(s64);
      if (s & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(s))] * (costs[s | bit] - costs[s]);
    }
    out.amounts[i] = Money(phi);
  }
  return out;
}

bool symmetric_players(const CostGame& game, std::size_t i, std::size_t j, double tolerance) {
  if (i >= game.size() || j >= game.size()) throw Error(ErrorKind::DimensionMismatch, "player index out of range");
  if (i == j) return true;
  const CoalitionMask bi = CoalitionMask{1} << i;
  const CoalitionMask bj = CoalitionMask{1} << j;
  const auto costs = game.table();
  for (std::uint64_t s64 = 0; s64 <= game.full_mask(); ++s64) {
    const auto s = static_cast<CoalitionMask>(s64);
    if (s & (bi | bj)) continue;
    if (std::abs(costs[s | bi] - costs[s | bj]) > tolerance) return false;
  }
  return true;
}

}  // namespace solarcoop
