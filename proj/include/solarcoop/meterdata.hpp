#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solarcoop/time.hpp"

namespace solarcoop {

// Opaque household identifier. Ordering is "natural": all-digit ids compare
// numerically and sort before any other id, which compare lexicographically.
class HouseholdId {
 public:
  HouseholdId() = default;
  explicit HouseholdId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }

  friend bool operator==(const HouseholdId&, const HouseholdId&) = default;
  friend std::strong_ordering operator<=>(const HouseholdId& a, const HouseholdId& b);

 private:
  std::string value_;
};

struct MeterInterval {
  Timestamp start;
  double consumption = 0.0;  // kWh
  double generation = 0.0;   // kWh

  friend bool operator==(const MeterInterval&, const MeterInterval&) = default;
};

struct TimeGrid {
  Timestamp start;
  Duration resolution{0};
  std::size_t length = 0;

  Timestamp end() const { return start + resolution * static_cast<std::int64_t>(length); }
  Timestamp at(std::size_t i) const { return start + resolution * static_cast<std::int64_t>(i); }
  // true when t lies on an interval boundary of this grid (end included)
  bool on_boundary(Timestamp t) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

// One household's consumption/generation energies on a uniform grid. Each
// value is the energy of its interval. Immutable once constructed.
class MeterSeries {
 public:
  // Throws NegativeEnergy for negative values, MalformedRow for non-finite
  // values, InvalidArgument for empty or mismatched vectors or a
  // non-positive resolution.
  MeterSeries(HouseholdId id, Timestamp start, Duration resolution, std::vector<double> consumption,
              std::vector<double> generation);

  const HouseholdId& household_id() const noexcept { return id_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  Timestamp start() const noexcept { return grid_.start; }
  Timestamp end() const noexcept { return grid_.end(); }
  Duration resolution() const noexcept { return grid_.resolution; }
  std::size_t size() const noexcept { return grid_.length; }

  std::span<const double> consumption() const noexcept { return consumption_; }
  std::span<const double> generation() const noexcept { return generation_; }
  MeterInterval interval(std::size_t i) const;

  friend bool operator==(const MeterSeries&, const MeterSeries&) = default;

 private:
  HouseholdId id_;
  TimeGrid grid_;
  std::vector<double> consumption_;
  std::vector<double> generation_;
};

struct BillingPeriod {
  Timestamp t0;
  Timestamp tf;

  friend bool operator==(const BillingPeriod&, const BillingPeriod&) = default;
};

struct AlignmentViolation {
  enum class Kind { Misalignment, LengthMismatch };

  HouseholdId household;
  Kind kind = Kind::Misalignment;
  std::string detail;
};

// A set of households, sorted by id. Series are not required to share a grid
// at construction so that validate_alignment can report on raw inputs; every
// billing operation calls require_aligned() first.
class CommunityDataset {
 public:
  // Throws DuplicateHousehold, InvalidArgument (no households).
  explicit CommunityDataset(std::vector<MeterSeries> households);

  std::span<const MeterSeries> households() const noexcept { return households_; }
  std::size_t size() const noexcept { return households_.size(); }
  // Grid of the first household; the shared grid when aligned.
  const TimeGrid& grid() const noexcept { return households_.front().grid(); }

  std::vector<HouseholdId> ids() const;
  std::optional<std::size_t> index_of(const HouseholdId& id) const;
  const MeterSeries& household(const HouseholdId& id) const;  // throws UnknownHousehold

  CommunityDataset subset(std::span<const HouseholdId> ids) const;

  bool is_aligned() const;
  void require_aligned() const;  // throws MisalignedGrid

  friend bool operator==(const CommunityDataset&, const CommunityDataset&) = default;

 private:
  std::vector<MeterSeries> households_;
};

struct CsvSchema {
  std::string timestamp_column = "localminute";
  std::string household_column = "dataid";
  std::string consumption_column = "use";
  std::string generation_column = "gen";
  // Fill missing intervals (inside a series and up to the common span) with
  // zero consumption and zero generation instead of rejecting.
  bool fill_gaps = false;
  // Readings are average kW over the interval rather than kWh.
  bool power_kw = false;
  // Grid step; inferred from the data when unset.
  std::optional<Duration> resolution;
};

std::vector<AlignmentViolation> validate_alignment(const CommunityDataset& dataset);

CommunityDataset parse_csv(std::istream& in, const CsvSchema& schema = {});
CommunityDataset load_csv(const std::string& path, const CsvSchema& schema = {});
// Values written with shortest round-trip formatting, so parse_csv(render_csv(d)) == d.
void render_csv(const CommunityDataset& dataset, std::ostream& out, const CsvSchema& schema = {});

BillingPeriod full_span(const TimeGrid& grid);
// Throws PeriodOutOfRange (t0 >= tf or outside the grid), UnalignedBoundary.
MeterSeries slice_series(const MeterSeries& series, const BillingPeriod& period);
CommunityDataset slice_period(const CommunityDataset& dataset, const BillingPeriod& period);

struct SynthProfile {
  Timestamp start = Timestamp{std::chrono::sys_days{std::chrono::year{2016} / 1 / 1}};
  Duration resolution = std::chrono::minutes{15};
  Duration utc_offset{0};                // local solar time for the PV envelope
  double mean_consumption_kwh = 0.25;    // per interval
  double consumption_sigma = 0.6;        // lognormal shape
  double mean_pv_peak_kwh = 0.45;        // per interval at solar noon
  double pv_capacity_spread = 0.6;       // capacity multiplier ~ U[1-s, 1+s]
  double cloudiness = 0.4;               // per-interval attenuation ~ U[1-c, 1]
  bool daylight_envelope = true;         // false: generation at any hour
};

// Fraction of peak PV output for an interval; 0 outside 06:00-18:00 local.
double pv_envelope(Timestamp interval_start, Duration resolution, Duration utc_offset);

CommunityDataset synth_community(std::size_t households, std::size_t intervals,
                                 const SynthProfile& profile, std::uint64_t seed);

}  // namespace solarcoop
