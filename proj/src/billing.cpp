#include "solarcoop/billing.hpp"

#include <algorithm>
#include <cctype>
#include <cfenv>
#include <cmath>
#include <cstdio>

#include "solarcoop/errors.hpp"

namespace solarcoop {

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::FiT: return "fit";
    case Mechanism::NM: return "nm";
    case Mechanism::NPS: return "nps";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "fit") return Mechanism::FiT;
  if (lower == "nm") return Mechanism::NM;
  if (lower == "nps") return Mechanism::NPS;
  throw Error(ErrorKind::InvalidArgument, "unknown mechanism '" + std::string(text) + "'");
}

std::int64_t whole_cents(Money m) {
  if (!std::isfinite(m.cents())) throw Error(ErrorKind::InvalidArgument, "non-finite money amount");
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(m.cents());
  std::fesetround(saved);
  return static_cast<std::int64_t>(r);
}

std::string format_dollars(Money m) {
  const std::int64_t c = whole_cents(m);
  const std::uint64_t mag = c < 0 ? static_cast<std::uint64_t>(-(c + 1)) + 1 : static_cast<std::uint64_t>(c);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%02llu", c < 0 ? "-" : "", static_cast<unsigned long long>(mag / 100),
                static_cast<unsigned long long>(mag % 100));
  return buf;
}

PriceSchedule::PriceSchedule(double lambda, double mu) : lambda_(lambda), mu_(mu) {
  if (!std::isfinite(lambda) || !std::isfinite(mu) || lambda < 0.0 || mu < 0.0) {
    throw Error(ErrorKind::InvalidPrice, "prices must be finite and non-negative (lambda=" + std::to_string(lambda) +
                                             ", mu=" + std::to_string(mu) + ")");
  }
}

std::vector<HouseholdId> normalize_coalition(const CommunityDataset& dataset, std::span<const HouseholdId> members) {
  if (members.empty()) throw Error(ErrorKind::EmptyCoalition, "coalition has no members");
  std::vector<HouseholdId> out(members.begin(), members.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (const auto& id : out) {
    if (!dataset.index_of(id)) throw Error(ErrorKind::UnknownHousehold, "household " + id.str());
  }
  return out;
}

MeterSeries aggregate_series(const CommunityDataset& dataset, std::span<const HouseholdId> coalition) {
  const auto members = normalize_coalition(dataset, coalition);
  dataset.require_aligned();
  if (members.size() == 1) return dataset.household(members.front());

  const TimeGrid& grid = dataset.grid();
  std::vector<double> q(grid.length, 0.0), g(grid.length, 0.0);
  std::string label;
  for (const auto& id : members) {
    const MeterSeries& s = dataset.household(id);
    const auto sq = s.consumption();
    const auto sg = s.generation();
    for (std::size_t t = 0; t < grid.length; ++t) {
      q[t] += sq[t];
      g[t] += sg[t];
    }
    if (!label.empty()) label += '+';
    label += id.str();
  }
  return MeterSeries(HouseholdId(std::move(label)), grid.start, grid.resolution, std::move(q), std::move(g));
}

EnergyTotals energy_totals(std::span<const double> q, std::span<const double> g, Mechanism mechanism) {
  if (q.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "consumption/generation length mismatch");
  double sq = 0.0, sg = 0.0;
  for (std::size_t t = 0; t < q.size(); ++t) {
    sq += q[t];
    sg += g[t];
  }
  EnergyTotals out;
  out.net = sq - sg;
  switch (mechanism) {
    case Mechanism::FiT:
      out.q_total = sq;
      out.g_total = sg;
      break;
    case Mechanism::NM:
      out.q_total = std::max(sq - sg, 0.0);
      out.g_total = std::max(sg - sq, 0.0);
      break;
    case Mechanism::NPS:
      for (std::size_t t = 0; t < q.size(); ++t) {
        const double d = q[t] - g[t];
        if (d > 0.0) {
          out.q_total += d;
        } else {
          out.g_total -= d;
        }
      }
      break;
  }
  return out;
}

Money interval_cost(double q, double g, const PriceSchedule& prices) {
  const double d = q - g;
  return Money(d >= 0.0 ? prices.lambda() * d : prices.mu() * d);
}

Money cost_of(std::span<const double> q, std::span<const double> g, Mechanism mechanism, const PriceSchedule& prices) {
  if (mechanism == Mechanism::NPS) {
    if (q.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "consumption/generation length mismatch");
    Money total;
    for (std::size_t t = 0; t < q.size(); ++t) total += interval_cost(q[t], g[t], prices);
    return total;
  }
  const EnergyTotals e = energy_totals(q, g, mechanism);
  return Money(prices.lambda() * e.q_total - prices.mu() * e.g_total);
}

EnergyTotals energy_totals(const MeterSeries& series, Mechanism mechanism, const BillingPeriod& period) {
  const MeterSeries s = slice_series(series, period);
  return energy_totals(s.consumption(), s.generation(), mechanism);
}

Money cost_of(const MeterSeries& series, Mechanism mechanism, const PriceSchedule& prices,
              const BillingPeriod& period) {
  const MeterSeries s = slice_series(series, period);
  return cost_of(s.consumption(), s.generation(), mechanism, prices);
}

std::vector<double> net_profile(const MeterSeries& series) {
  std::vector<double> d(series.size());
  const auto q = series.consumption();
  const auto g = series.generation();
  for (std::size_t t = 0; t < d.size(); ++t) d[t] = q[t] - g[t];
  return d;
}

}  // namespace solarcoop
