#include "dnt/stats_report.hpp"

#include <algorithm>
#include <cmath>

#include "dnt/csv.hpp"
#include "dnt/errors.hpp"

namespace dnt::stats {

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ConfigError("quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

DistributionSummary summarize_one(const std::string& label, std::span<const double> values) {
    if (values.empty()) throw ConfigError("empty group: '" + label + "'");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    DistributionSummary s;
    s.label = label;
    s.count = v.size();
    s.min = v.front();
    s.max = v.back();
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q3 = quantile_sorted(v, 0.75);
    // Summing the sorted sequence keeps the result independent of input order.
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

std::vector<DistributionSummary> summarize(const std::map<std::string, std::vector<double>>& groups) {
    std::vector<DistributionSummary> out;
    for (const auto& [label, values] : groups) out.push_back(summarize_one(label, values));
    return out;
}

std::vector<DistanceTimingRow> distance_timing_table(const std::map<std::string, std::vector<double>>& timings,
                                                     std::span<const geo::ServerRecord> servers,
                                                     const geo::GeoPoint& sender_location,
                                                     const std::map<std::string, geo::GeoPoint>& receiver_locations) {
    geo::validate(sender_location);
    std::vector<DistanceTimingRow> rows;
    for (const auto& server : servers) {
        if (!server.location) {
            throw ConfigError("unresolvable server location: " + server.address +
                              (server.location_code ? " (code " + *server.location_code + ")" : ""));
        }
        const double d_sm = geo::great_circle_distance(sender_location, *server.location);
        for (const auto& [label, values] : timings) {
            const auto it = receiver_locations.find(label);
            if (it == receiver_locations.end()) throw ConfigError("unresolvable receiver location: " + label);
            DistanceTimingRow row;
            row.messenger = server.messenger;
            row.server_address = server.address;
            row.receiver_label = label;
            row.dist_sm_km = d_sm;
            row.dist_mr_km = geo::great_circle_distance(*server.location, it->second);
            row.timing = summarize_one(label, values);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<HourBucket> hour_of_day_breakdown(std::span<const TimedValue> values, std::int64_t utc_offset_s) {
    std::map<std::string, std::array<std::vector<double>, 24>> buckets;
    for (const auto& v : values) {
        const std::int64_t local = v.wall_time + utc_offset_s;
        const std::int64_t sec_of_day = ((local % 86400) + 86400) % 86400;
        buckets[v.label][static_cast<std::size_t>(sec_of_day / 3600)].push_back(v.value);
    }
    std::vector<HourBucket> out;
    for (const auto& [label, hours] : buckets) {
        for (int h = 0; h < 24; ++h) {
            HourBucket b;
            b.hour = h;
            b.label = label;
            const auto& vals = hours[static_cast<std::size_t>(h)];
            if (!vals.empty()) b.summary = summarize_one(label, vals);
            out.push_back(std::move(b));
        }
    }
    return out;
}

namespace {

std::string stats_fields(const DistributionSummary& s) {
    return std::to_string(s.count) + "," + csv::format_seconds(s.min) + "," + csv::format_seconds(s.q1) + "," +
           csv::format_seconds(s.median) + "," + csv::format_seconds(s.q3) + "," + csv::format_seconds(s.max) + "," +
           csv::format_seconds(s.mean) + "," + csv::format_seconds(s.std);
}

}  // namespace

std::string summary_csv(std::span<const DistributionSummary> rows) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const auto& s : rows) out += s.label + "," + stats_fields(s) + "\n";
    return out;
}

std::string hourly_csv(std::span<const HourBucket> rows) {
    std::string out = "label,hour,count,min,q1,median,q3,max,mean,std\n";
    for (const auto& b : rows) {
        out += b.label + "," + std::to_string(b.hour) + ",";
        out += b.summary ? stats_fields(*b.summary) : std::string("0,,,,,,,");
        out += "\n";
    }
    return out;
}

std::string distance_csv(std::span<const DistanceTimingRow> rows) {
    std::string out = "messenger,server,receiver,dist_sm_km,dist_mr_km," + std::string(kSummaryHeader).substr(6) + "\n";
    char buf[64];
    for (const auto& r : rows) {
        out += r.messenger + "," + r.server_address + "," + r.receiver_label + ",";
        std::snprintf(buf, sizeof buf, "%.3f,%.3f,", r.dist_sm_km, r.dist_mr_km);
        out += buf + stats_fields(r.timing) + "\n";
    }
    return out;
}

}  // namespace dnt::stats
