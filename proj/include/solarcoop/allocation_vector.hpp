#pragma once

#include <optional>
#include <string>
#include <vector>

#include "solarcoop/billing.hpp"

namespace solarcoop {

// Monetary allocation of a coalition's cost to its members.
struct AllocationVector {
  std::vector<HouseholdId> households;  // ascending
  std::vector<Money> amounts;           // parallel to households
  Mechanism mechanism = Mechanism::NM;
  BillingPeriod period{};
  // Cents per household per interval, for rules defined interval by interval.
  std::optional<std::vector<std::vector<double>>> per_interval;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return households.size(); }
  Money total() const;
  Money at(const HouseholdId& id) const;  // throws UnknownHousehold
};

}  // namespace solarcoop
