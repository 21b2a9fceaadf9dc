#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnt/geo.hpp"

namespace dnt::stats {

struct DistributionSummary {
    std::string label;
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation; 0 for a single value
};

/// Quantile by linear interpolation between closest ranks over sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

/// Summary of one non-empty group; throws ConfigError naming the label when empty.
DistributionSummary summarize_one(const std::string& label, std::span<const double> values);

/// One summary per label, in label order.
std::vector<DistributionSummary> summarize(const std::map<std::string, std::vector<double>>& groups);

struct DistanceTimingRow {
    std::string messenger;
    std::string server_address;
    std::string receiver_label;
    double dist_sm_km = 0.0;
    double dist_mr_km = 0.0;
    DistributionSummary timing;
};

/// Joins sender->server and server->receiver great-circle distances with the
/// timing summary of each receiver class; one row per (server, receiver class).
/// Throws ConfigError naming any server or receiver class without a location.
std::vector<DistanceTimingRow> distance_timing_table(const std::map<std::string, std::vector<double>>& timings,
                                                     std::span<const geo::ServerRecord> servers,
                                                     const geo::GeoPoint& sender_location,
                                                     const std::map<std::string, geo::GeoPoint>& receiver_locations);

struct TimedValue {
    std::string label;
    std::int64_t wall_time = 0;  ///< Unix seconds
    double value = 0.0;
};

struct HourBucket {
    int hour = 0;
    std::string label;
    std::optional<DistributionSummary> summary;  ///< empty bucket when absent
};

/// 24 buckets per label by local hour (`utc_offset_s` applied to wall_time).
std::vector<HourBucket> hour_of_day_breakdown(std::span<const TimedValue> values, std::int64_t utc_offset_s = 0);

inline constexpr const char* kSummaryHeader = "label,count,min,q1,median,q3,max,mean,std";
std::string summary_csv(std::span<const DistributionSummary> rows);
std::string hourly_csv(std::span<const HourBucket> rows);
std::string distance_csv(std::span<const DistanceTimingRow> rows);

}  // namespace dnt::stats
