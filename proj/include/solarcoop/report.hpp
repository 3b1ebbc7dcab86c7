#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "solarcoop/allocation.hpp"
#include "solarcoop/billing.hpp"
#include "solarcoop/coopgame.hpp"
#include "solarcoop/meterdata.hpp"
#include "solarcoop/parallel.hpp"
#include "solarcoop/table.hpp"

namespace solarcoop {

// ---- billing calendar ------------------------------------------------------

struct LabeledPeriod {
  std::string label;  // "2016-01" for calendar months, start timestamp for windows
  BillingPeriod period;
};

struct CalendarOptions {
  Duration utc_offset{0};           // month boundaries are local midnight at this offset
  std::optional<Duration> window;   // fixed-length windows from the data start instead of months
};

// Billing periods for `spec` ("all" or "YYYY-MM"), clipped to the data span.
// Throws PeriodOutOfRange when a month has no data, UnalignedBoundary when a
// boundary falls inside an interval, InvalidArgument for a bad spec.
std::vector<LabeledPeriod> plan_periods(const TimeGrid& grid, std::string_view spec, const CalendarOptions& calendar);

// ---- coalition selection ---------------------------------------------------

struct CoalitionSpec {
  enum class Kind { All, Ids, Each };
  Kind kind = Kind::All;
  std::vector<HouseholdId> ids;  // for Kind::Ids, as given

  // "all" | "each" | comma-separated ids. Throws EmptyCoalition for an empty list.
  static CoalitionSpec parse(std::string_view text);
  // Members for a single-coalition spec (All or Ids), ascending and validated.
  std::vector<HouseholdId> members(const CommunityDataset& dataset) const;
  std::string label() const;
};

// ---- tables ----------------------------------------------------------------

struct ReportContext {
  const CommunityDataset& dataset;
  PriceSchedule prices;
  std::vector<LabeledPeriod> periods;
  ExecutionOptions exec{};
};

// Per period (and per household for Kind::Each): consumption, generation, net,
// billed purchase/sale energies and cost under `mechanism`.
Table bill_table(const ReportContext& ctx, Mechanism mechanism, const CoalitionSpec& coalition);

// Savings from sharing under NM or NPS. `monthly` has one row per period;
// `households` sums each member over all periods.
struct AllocationTables {
  Table monthly;
  Table households;
  std::vector<SavingsReport> reports;  // one per period
};
AllocationTables allocation_tables(const ReportContext& ctx, Mechanism mechanism,
                                   const std::vector<HouseholdId>& members);

// NM against NPS side by side, with the community cost gap per period and the
// per-household saving differences.
struct ComparisonTables {
  Table monthly;
  Table households;
};
ComparisonTables comparison_tables(const ReportContext& ctx, const std::vector<HouseholdId>& members);

// ---- distributions ---------------------------------------------------------

struct DistributionSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Linear-interpolation quantile (the common "type 7" definition) of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);
// Throws InvalidArgument for an empty sample.
DistributionSummary summarize(std::vector<double> values);

struct DistributionTables {
  Table cost;     // per period: standalone and shared per-household cost
  Table savings;  // per period: per-household saving
  std::vector<DistributionSummary> cost_without, cost_with, saving;  // one per period
};
DistributionTables distribution_tables(const AllocationTables& allocation,
                                       const std::vector<LabeledPeriod>& periods);

// ---- charts ----------------------------------------------------------------

struct BandSeries {
  std::string name;
  std::string color;                          // CSS color
  std::vector<DistributionSummary> summaries;  // one per category, values in cents
};

// Static SVG: per category a 5-95% band, a min-max whisker and a mean marker,
// values shown in dollars.
std::string band_chart_svg(std::string_view title, const std::vector<std::string>& categories,
                           const std::vector<BandSeries>& series);

// ---- game checks -----------------------------------------------------------

struct GameCheckOutcome {
  nlohmann::ordered_json verdict;
  bool passed = true;
  std::vector<CostGame> games;  // every game built, in verdict order
};

// Subadditivity, core membership and axiom audit of the sharing rules, and the
// Shapley comparison (N <= 12), per period and mechanism. Throws TooManyPlayers.
GameCheckOutcome game_check(const ReportContext& ctx, const std::vector<HouseholdId>& members,
                            const std::vector<Mechanism>& mechanisms);

// {"schema","mechanism","period","players","costs":{mask: cents}}
nlohmann::ordered_json game_export_json(const CostGame& game, std::string_view period_label);

}  // namespace solarcoop
