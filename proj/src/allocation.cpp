#include "solarcoop/allocation.hpp"

#include <cmath>
#include <limits>

#include "solarcoop/errors.hpp"

namespace solarcoop {

namespace {

// Members' sliced series plus the coalition aggregate over one period.
struct CoalitionView {
  std::vector<HouseholdId> members;
  std::vector<MeterSeries> series;
  MeterSeries aggregate;
};

CoalitionView view_of(const CommunityDataset& dataset, const BillingPeriod& period,
                      std::span<const HouseholdId> coalition) {
  auto members = normalize_coalition(dataset, coalition);
  dataset.require_aligned();
  const CommunityDataset sliced = slice_period(dataset.subset(members), period);
  MeterSeries aggregate = aggregate_series(sliced, members);
  return {std::move(members), {sliced.households().begin(), sliced.households().end()}, std::move(aggregate)};
}

double period_net(const MeterSeries& s) { return energy_totals(s.consumption(), s.generation(), Mechanism::FiT).net; }

void warn_price_order(AllocationVector& x, const PriceSchedule& prices) {
  if (!prices.retail_at_least_sellback()) {
    x.warnings.push_back("lambda < mu: the allocation is computable but not guaranteed to be individually rational "
                         "or in the core");
  }
}

}  // namespace

AllocationVector allocate_nm(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                             std::span<const HouseholdId> coalition) {
  const CoalitionView v = view_of(dataset, period, coalition);
  const double rate = period_net(v.aggregate) >= 0.0 ? prices.lambda() : prices.mu();

  AllocationVector x;
  x.households = v.members;
  x.mechanism = Mechanism::NM;
  x.period = period;
  x.amounts.reserve(v.members.size());
  for (const auto& s : v.series) x.amounts.push_back(Money(rate * period_net(s)));
  warn_price_order(x, prices);
  return x;
}

AllocationVector allocate_nps(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                              std::span<const HouseholdId> coalition) {
  const CoalitionView v = view_of(dataset, period, coalition);
  const std::size_t length = v.aggregate.size();
  const auto aq = v.aggregate.consumption();
  const auto ag = v.aggregate.generation();

  std::vector<double> rate(length);
  for (std::size_t t = 0; t < length; ++t) rate[t] = aq[t] - ag[t] >= 0.0 ? prices.lambda() : prices.mu();

  AllocationVector x;
  x.households = v.members;
  x.mechanism = Mechanism::NPS;
  x.period = period;
  x.amounts.reserve(v.members.size());
  std::vector<std::vector<double>> breakdown;
  breakdown.reserve(v.members.size());
  for (const auto& s : v.series) {
    const auto q = s.consumption();
    const auto g = s.generation();
    std::vector<double> row(length);
    double total = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
      row[t] = rate[t] * (q[t] - g[t]);
      total += row[t];
    }
    x.amounts.push_back(Money(total));
    breakdown.push_back(std::move(row));
  }
  x.per_interval = std::move(breakdown);
  warn_price_order(x, prices);
  return x;
}

std::string_view to_string(Axiom a) {
  switch (a) {
    case Axiom::Equity: return "equity";
    case Axiom::Monotonicity: return "monotonicity";
    case Axiom::IndividualRationality: return "individual_rationality";
    case Axiom::BudgetBalance: return "budget_balance";
    case Axiom::StandaloneCost: return "standalone_cost";
    case Axiom::PenaltyForCausing: return "penalty_for_causing";
    case Axiom::RewardForMitigating: return "reward_for_mitigating";
  }
  return "?";
}

std::string_view to_string(AxiomStatus s) {
  switch (s) {
    case AxiomStatus::Pass: return "pass";
    case AxiomStatus::Fail: return "fail";
    case AxiomStatus::Vacuous: return "vacuous";
  }
  return "?";
}

bool AxiomReport::all_pass_or_vacuous() const {
  for (const auto& r : results) {
    if (r.status == AxiomStatus::Fail) return false;
  }
  return true;
}

bool AxiomReport::cost_causation_based() const {
  for (const Axiom a : kAllAxioms) {
    if (a == Axiom::StandaloneCost) continue;
    if ((*this)[a].status == AxiomStatus::Fail) return false;
  }
  return true;
}

namespace {

// Tracks one axiom across many evaluation slices (intervals or the period).
class AxiomTally {
 public:
  void applicable() { applicable_ = true; }
  void fail(AxiomWitness w) {
    applicable_ = true;
    if (!witness_) witness_ = std::move(w);
  }
  bool failed() const { return witness_.has_value(); }

  AxiomResult finish(Axiom axiom, bool per_interval, bool guaranteed) {
    AxiomResult r;
    r.axiom = axiom;
    r.audited_per_interval = per_interval;
    r.guaranteed = guaranteed;
    if (witness_) {
      r.status = AxiomStatus::Fail;
      r.witness = std::move(witness_);
    } else {
      r.status = applicable_ ? AxiomStatus::Pass : AxiomStatus::Vacuous;
    }
    return r;
  }

 private:
  bool applicable_ = false;
  std::optional<AxiomWitness> witness_;
};

int sign_of(double d) {
  if (d > kEnergyTolerance) return 1;
  if (d < -kEnergyTolerance) return -1;
  return 0;
}

AxiomWitness pair_witness(const std::vector<HouseholdId>& ids, std::span<const double> d, std::span<const double> x,
                          std::size_t i, std::size_t j, std::optional<std::size_t> interval, std::string detail) {
  return {{ids[i], ids[j]}, {d[i], d[j]}, {Money(x[i]), Money(x[j])}, interval, std::nullopt, std::move(detail)};
}

AxiomWitness single_witness(const std::vector<HouseholdId>& ids, std::span<const double> d, std::span<const double> x,
                            std::size_t i, std::optional<std::size_t> interval, std::string detail) {
  return {{ids[i]}, {d[i]}, {Money(x[i])}, interval, std::nullopt, std::move(detail)};
}

// The four axioms stated on the cost-causation variable D, evaluated on one
// slice (one interval, or the whole period).
struct CausationTallies {
  AxiomTally equity, monotonicity, penalty, reward;

  void audit(const std::vector<HouseholdId>& ids, std::span<const double> d, std::span<const double> x,
             std::optional<std::size_t> interval) {
    const std::size_t n = ids.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n && !equity.failed(); ++j) {
        if (std::abs(d[i] - d[j]) > kEnergyTolerance) continue;
        equity.applicable();
        if (std::abs(x[i] - x[j]) > kMoneyTolerance) {
          equity.fail(pair_witness(ids, d, x, i, j, interval, "equal net consumption, unequal allocation"));
        }
      }
    }
    for (std::size_t i = 0; i < n && !monotonicity.failed(); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || sign_of(d[i]) * sign_of(d[j]) < 0) continue;
        if (std::abs(d[i]) < std::abs(d[j]) - kEnergyTolerance) continue;
        monotonicity.applicable();
        if (std::abs(x[i]) < std::abs(x[j]) - kMoneyTolerance) {
          monotonicity.fail(pair_witness(ids, d, x, i, j, interval, "|D_i| >= |D_j| but |x_i| < |x_j|"));
          break;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] > kEnergyTolerance) {
        penalty.applicable();
        if (!(x[i] > 0.0) && !penalty.failed()) {
          penalty.fail(single_witness(ids, d, x, i, interval, "causes cost but is not charged"));
        }
      } else if (d[i] < -kEnergyTolerance) {
        reward.applicable();
        if (!(x[i] < 0.0) && !reward.failed()) {
          reward.fail(single_witness(ids, d, x, i, interval, "mitigates cost but is not rewarded"));
        }
      }
    }
  }
};

}  // namespace

AxiomReport audit_axioms(const AllocationVector& x, const CommunityDataset& dataset, const PriceSchedule& prices,
                         const BillingPeriod& period, const CostGame& game) {
  if (x.households != game.players() || x.amounts.size() != x.households.size()) {
    throw Error(ErrorKind::DimensionMismatch, "allocation households do not match the game players");
  }
  const CoalitionView v = view_of(dataset, period, x.households);
  const std::size_t n = x.size();
  const std::size_t length = v.aggregate.size();
  if (x.per_interval) {
    if (x.per_interval->size() != n) throw Error(ErrorKind::DimensionMismatch, "per-interval rows != households");
    for (const auto& row : *x.per_interval) {
      if (row.size() != length) throw Error(ErrorKind::DimensionMismatch, "per-interval columns != period length");
    }
  }

  std::vector<double> d_period(n), x_period(n);
  for (std::size_t i = 0; i < n; ++i) {
    d_period[i] = period_net(v.series[i]);
    x_period[i] = x.amounts[i].cents();
  }

  AxiomReport report;
  report.per_interval = x.per_interval.has_value();
  const bool guaranteed = prices.retail_at_least_sellback();

  CausationTallies causation;
  if (x.per_interval) {
    std::vector<double> d(n), xt(n);
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = v.series[i].consumption()[t] - v.series[i].generation()[t];
        xt[i] = (*x.per_interval)[i][t];
      }
      causation.audit(x.households, d, xt, t);
    }
  } else {
    causation.audit(x.households, d_period, x_period, std::nullopt);
    if (x.mechanism == Mechanism::NPS) {
      report.findings.push_back(
          "per-interval cost-causation audit inapplicable: allocation has no per-interval form; equity, "
          "monotonicity, penalty and reward audited on period totals");
    }
  }

  AxiomTally ir;
  for (std::size_t i = 0; i < n; ++i) {
    ir.applicable();
    const Money standalone = game.cost(CoalitionMask{1} << i);
    if (x_period[i] > standalone.cents() + kMoneyTolerance && !ir.failed()) {
      AxiomWitness w = single_witness(x.households, d_period, x_period, i, std::nullopt,
                                      "allocated more than standalone cost " + std::to_string(standalone.cents()));
      w.coalition = CoalitionMask{1} << i;
      ir.fail(std::move(w));
    }
  }

  AxiomTally bb;
  bb.applicable();
  const Money total = x.total();
  if (std::abs(total.cents() - game.grand_cost().cents()) > kMoneyTolerance) {
    AxiomWitness w{x.households, d_period, x.amounts, std::nullopt, game.full_mask(),
                   "sum of allocations " + std::to_string(total.cents()) + " != coalition cost " +
                       std::to_string(game.grand_cost().cents())};
    bb.fail(std::move(w));
  }

  AxiomTally standalone;
  standalone.applicable();
  const CoreReport core = check_core_membership(game, x);
  if (!core.violations.empty()) {
    const CoreViolation& cv = core.violations.front();
    AxiomWitness w;
    w.households = game.members(cv.coalition);
    w.allocated = {cv.allocated, cv.cost};
    w.coalition = cv.coalition;
    w.detail = "coalition allocated " + std::to_string(cv.allocated.cents()) + " above its cost " +
               std::to_string(cv.cost.cents());
    standalone.fail(std::move(w));
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (sign_of(d_period[i]) == 0 && std::abs(x_period[i]) > kMoneyTolerance) {
      report.findings.push_back(std::string(x_period[i] > 0 ? "charges" : "rewards") + " a zero-net household " +
                                x.households[i].str() + " (" + std::to_string(x_period[i]) + " cents)");
    }
  }
  if (!guaranteed) {
    report.findings.push_back("lambda < mu: individual rationality and standalone cost are not guaranteed");
  }

  const bool pi = report.per_interval;
  report.results[0] = causation.equity.finish(Axiom::Equity, pi, true);
  report.results[1] = causation.monotonicity.finish(Axiom::Monotonicity, pi, true);
  report.results[2] = ir.finish(Axiom::IndividualRationality, false, guaranteed);
  report.results[3] = bb.finish(Axiom::BudgetBalance, false, true);
  report.results[4] = standalone.finish(Axiom::StandaloneCost, false, guaranteed);
  report.results[5] = causation.penalty.finish(Axiom::PenaltyForCausing, pi, true);
  report.results[6] = causation.reward.finish(Axiom::RewardForMitigating, pi, true);
  return report;
}

double saving_percent(Money saving, Money baseline) {
  if (baseline.cents() == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return saving.cents() / std::abs(baseline.cents()) * 100.0;
}

SavingsReport savings(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                      std::span<const HouseholdId> coalition, Mechanism mechanism) {
  if (mechanism == Mechanism::FiT) {
    throw Error(ErrorKind::InvalidArgument, "savings are defined for nm and nps only");
  }
  const CoalitionView v = view_of(dataset, period, coalition);
  const AllocationVector x = mechanism == Mechanism::NM ? allocate_nm(dataset, prices, period, v.members)
                                                        : allocate_nps(dataset, prices, period, v.members);
  const double spread = prices.lambda() - prices.mu();
  const std::size_t length = v.aggregate.size();
  const double d_grand = period_net(v.aggregate);

  SavingsReport report;
  report.mechanism = mechanism;
  report.period = period;
  for (std::size_t i = 0; i < v.members.size(); ++i) {
    const MeterSeries& s = v.series[i];
    HouseholdSavings h;
    h.household = v.members[i];
    h.net_kwh = period_net(s);
    h.standalone = cost_of(s.consumption(), s.generation(), mechanism, prices);
    h.allocated = x.amounts[i];
    h.saving = h.standalone - h.allocated;
    h.saving_pct = saving_percent(h.saving, h.standalone);

    if (mechanism == Mechanism::NM) {
      h.closed_form = h.net_kwh * d_grand < 0.0 ? Money(spread * std::abs(h.net_kwh)) : Money(0.0);
      if (d_grand == 0.0 && h.net_kwh != 0.0) {
        report.boundary_flags.push_back({h.household, std::nullopt, h.net_kwh, h.saving, h.closed_form,
                                         std::abs((h.saving - h.closed_form).cents()) > kMoneyTolerance});
      }
    } else {
      const auto q = s.consumption();
      const auto g = s.generation();
      const auto aq = v.aggregate.consumption();
      const auto ag = v.aggregate.generation();
      double opposed = 0.0;
      for (std::size_t t = 0; t < length; ++t) {
        const double di = q[t] - g[t];
        const double dn = aq[t] - ag[t];
        if (di * dn < 0.0) opposed += std::abs(di);
        if (dn == 0.0 && di != 0.0) {
          const Money direct = interval_cost(q[t], g[t], prices) - Money((*x.per_interval)[i][t]);
          report.boundary_flags.push_back(
              {h.household, t, di, direct, Money(0.0), std::abs(direct.cents()) > kMoneyTolerance});
        }
      }
      h.closed_form = Money(spread * opposed);
    }
    report.total_standalone += h.standalone;
    report.total_allocated += h.allocated;
    report.households.push_back(std::move(h));
  }
  report.total_saving = report.total_standalone - report.total_allocated;
  report.saving_pct = saving_percent(report.total_saving, report.total_standalone);
  return report;
}

SavingsComparison compare_savings(const CommunityDataset& dataset, const PriceSchedule& prices,
                                  const BillingPeriod& period, std::span<const HouseholdId> coalition) {
  SavingsComparison out{savings(dataset, prices, period, coalition, Mechanism::NM),
                        savings(dataset, prices, period, coalition, Mechanism::NPS),
                        {}};
  const CoalitionView v = view_of(dataset, period, coalition);
  const double spread = prices.lambda() - prices.mu();
  const double d_grand = period_net(v.aggregate);
  const auto aq = v.aggregate.consumption();
  const auto ag = v.aggregate.generation();
  for (std::size_t i = 0; i < v.members.size(); ++i) {
    const auto q = v.series[i].consumption();
    const auto g = v.series[i].generation();
    double opposed = 0.0;
    for (std::size_t t = 0; t < q.size(); ++t) {
      const double di = q[t] - g[t];
      if (di * (aq[t] - ag[t]) < 0.0) opposed += std::abs(di);
    }
    const double d_i = period_net(v.series[i]);
    const double closed = d_i * d_grand >= 0.0 ? spread * opposed : spread * (opposed - std::abs(d_i));
    out.differences.push_back(
        {v.members[i], out.nps.households[i].saving - out.nm.households[i].saving, Money(closed)});
  }
  return out;
}

CostGap mechanism_cost_gap(const CommunityDataset& dataset, const PriceSchedule& prices, const BillingPeriod& period,
                           std::span<const HouseholdId> coalition) {
  const CoalitionView v = view_of(dataset, period, coalition);
  const auto q = v.aggregate.consumption();
  const auto g = v.aggregate.generation();
  const EnergyTotals nps = energy_totals(q, g, Mechanism::NPS);

  CostGap gap;
  gap.nps_cost = cost_of(q, g, Mechanism::NPS, prices);
  gap.nm_cost = cost_of(q, g, Mechanism::NM, prices);
  gap.gap = gap.nps_cost - gap.nm_cost;
  gap.net_kwh = nps.net;
  gap.predicted = Money((prices.lambda() - prices.mu()) * (nps.net >= 0.0 ? nps.g_total : nps.q_total));
  gap.price_order_violated = !prices.retail_at_least_sellback();
  if (!gap.price_order_violated && std::abs((gap.gap - gap.predicted).cents()) > kMoneyTolerance) {
    throw Error(ErrorKind::IdentityViolation, "NPS-NM cost gap " + std::to_string(gap.gap.cents()) +
                                                  " differs from the closed form " +
                                                  std::to_string(gap.predicted.cents()));
  }
  return gap;
}

std::optional<ShapleyHuntResult> hunt_shapley_witness(const ShapleyHuntOptions& options) {
  const PriceSchedule prices(options.lambda, options.mu);
  const std::size_t max_n = std::min(std::max<std::size_t>(options.max_households, 2), kMaxShapleyPlayers);
  SynthProfile profile;
  profile.daylight_envelope = true;
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    const std::uint64_t instance_seed = options.seed * 1000003ULL + trial;
    const std::size_t n = 2 + static_cast<std::size_t>(instance_seed % (max_n - 1));
    // vary the PV sizing so both net producers and net consumers appear
    profile.mean_pv_peak_kwh = 0.2 + 0.1 * static_cast<double>(trial % 7);
    CommunityDataset data = synth_community(n, options.intervals, profile, instance_seed);
    const BillingPeriod period = full_span(data.grid());
    const CostGame game = build_cost_game(data, options.mechanism, prices, period, ExecutionOptions{1});
    AllocationVector phi = shapley_value(game);
    AxiomReport report = audit_axioms(phi, data, prices, period, game);
    if (!report.cost_causation_based()) {
      return ShapleyHuntResult{trial, instance_seed, std::move(data), std::move(phi), std::move(report)};
    }
  }
  return std::nullopt;
}

}  // namespace solarcoop
