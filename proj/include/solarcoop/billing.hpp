#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solarcoop/meterdata.hpp"

namespace solarcoop {

enum class Mechanism { FiT, NM, NPS };

std::string_view to_string(Mechanism m);
Mechanism parse_mechanism(std::string_view text);  // "fit" | "nm" | "nps", case-insensitive

// Signed amount in cents, fractional.
class Money {
 public:
  constexpr Money() = default;
  constexpr explicit Money(double cents) : cents_(cents) {}

  constexpr double cents() const noexcept { return cents_; }

  Money& operator+=(Money o) noexcept { cents_ += o.cents_; return *this; }
  Money& operator-=(Money o) noexcept { cents_ -= o.cents_; return *this; }

  friend constexpr Money operator+(Money a, Money b) noexcept { return Money(a.cents_ + b.cents_); }
  friend constexpr Money operator-(Money a, Money b) noexcept { return Money(a.cents_ - b.cents_); }
  friend constexpr Money operator-(Money a) noexcept { return Money(-a.cents_); }
  friend constexpr Money operator*(double k, Money a) noexcept { return Money(k * a.cents_); }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  double cents_ = 0.0;
};

// Whole cents, ties to even.
std::int64_t whole_cents(Money m);
// Dollars with two decimals ("-12.35"), rounding half-even on the cent.
std::string format_dollars(Money m);

// Retail price lambda and sell-back price mu, cents per kWh, constant over a
// billing period.
class PriceSchedule {
 public:
  // Throws InvalidPrice for negative or non-finite prices.
  PriceSchedule(double lambda, double mu);

  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return mu_; }
  // lambda >= mu: the precondition of the sharing theorems
  bool retail_at_least_sellback() const noexcept { return lambda_ >= mu_; }

 private:
  double lambda_;
  double mu_;
};

struct EnergyTotals {
  double q_total = 0.0;  // billed consumption, kWh
  double g_total = 0.0;  // billed generation, kWh
  double net = 0.0;      // sum(q) - sum(g), identical across mechanisms
};

// Sorted, de-duplicated members; throws EmptyCoalition / UnknownHousehold.
std::vector<HouseholdId> normalize_coalition(const CommunityDataset& dataset, std::span<const HouseholdId> members);

// Per-interval sums over members, added in ascending id order.
MeterSeries aggregate_series(const CommunityDataset& dataset, std::span<const HouseholdId> coalition);

// Kernels over raw per-interval energies. These are the single source of the
// billing formulas; everything else (game tables included) goes through them.
EnergyTotals energy_totals(std::span<const double> q, std::span<const double> g, Mechanism mechanism);
Money cost_of(std::span<const double> q, std::span<const double> g, Mechanism mechanism, const PriceSchedule& prices);
// Cost of one interval netted on its own: lambda*(q-g)+ - mu*(g-q)+.
Money interval_cost(double q, double g, const PriceSchedule& prices);

EnergyTotals energy_totals(const MeterSeries& series, Mechanism mechanism, const BillingPeriod& period);
Money cost_of(const MeterSeries& series, Mechanism mechanism, const PriceSchedule& prices, const BillingPeriod& period);

// D(t) = q(t) - g(t)
std::vector<double> net_profile(const MeterSeries& series);

}  // namespace solarcoop
