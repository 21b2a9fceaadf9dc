#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dnt/errors.hpp"
#include "dnt/stats_report.hpp"

using namespace dnt;
using namespace dnt::stats;

TEST(Summary, QuartilesOfOneToFive) {
    const std::vector<double> v{5, 3, 1, 4, 2};
    const auto s = summarize_one("x", v);
    EXPECT_EQ(s.min, 1.0);
    EXPECT_EQ(s.q1, 2.0);
    EXPECT_EQ(s.median, 3.0);
    EXPECT_EQ(s.q3, 4.0);
    EXPECT_EQ(s.max, 5.0);
    EXPECT_EQ(s.mean, 3.0);
    EXPECT_NEAR(s.std, std::sqrt(2.5), 1e-12);
    EXPECT_EQ(s.count, 5u);
}

TEST(Summary, SingleValueAndInterpolation) {
    const auto s = summarize_one("one", std::vector<double>{0.25});
    EXPECT_EQ(s.min, 0.25);
    EXPECT_EQ(s.median, 0.25);
    EXPECT_EQ(s.max, 0.25);
    EXPECT_EQ(s.std, 0.0);
    const std::vector<double> sorted{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile_sorted(sorted, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(sorted, 0.25), 1.75);
}

TEST(Summary, EmptyGroupNamesLabel) {
    try {
        summarize({{"berlin", {}}});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("berlin"), std::string::npos);
    }
}

TEST(Summary, LognormalMedianNearExpMu) {
    std::mt19937_64 gen(1);
    std::lognormal_distribution<double> d(std::log(0.2), 0.5);
    std::vector<double> v(10000);
    for (auto& x : v) x = d(gen);
    EXPECT_NEAR(summarize_one("l", v).median, 0.2, 0.2 * 0.05);
}

TEST(Summary, PermutationInvariantAndConcatenationBounds) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(1 + gen() % 40);
        std::vector<double> b(1 + gen() % 40);
        for (auto& x : a) x = u(gen);
        for (auto& x : b) x = u(gen);
        auto shuffled = a;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        const auto sa = summarize_one("a", a);
        const auto ss = summarize_one("a", shuffled);
        EXPECT_EQ(sa.median, ss.median);
        EXPECT_EQ(sa.mean, ss.mean);
        EXPECT_EQ(sa.std, ss.std);
        auto ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        const auto sab = summarize_one("ab", ab);
        const auto sb = summarize_one("b", b);
        EXPECT_EQ(sab.min, std::min(sa.min, sb.min));
        EXPECT_EQ(sab.max, std::max(sa.max, sb.max));
        EXPECT_LE(sa.q1, sa.median);
        EXPECT_LE(sa.median, sa.q3);
    }
}

TEST(DistanceTable, CrossProductAndColocatedSender) {
    const geo::GeoPoint fra{50.0379, 8.5622};
    const geo::GeoPoint iad{38.9531, -77.4565};
    std::vector<geo::ServerRecord> servers{{"signal", "203.0.113.10", fra, "fra"}, {"signal", "203.0.113.11", iad, "iad"}};
    const std::map<std::string, std::vector<double>> timings{{"a", {0.1, 0.2}}, {"b", {0.3}}, {"c", {0.4, 0.5, 0.6}}};
    const std::map<std::string, geo::GeoPoint> locs{{"a", fra}, {"b", iad}, {"c", {1.3644, 103.9915}}};
    const auto rows = distance_timing_table(timings, servers, fra, locs);
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0].dist_sm_km, 0.0);
    EXPECT_EQ(rows[0].dist_mr_km, 0.0);
    EXPECT_EQ(rows[0].receiver_label, "a");
    EXPECT_NEAR(rows[3].dist_sm_km, geo::great_circle_distance(fra, iad), 1e-9);
    EXPECT_EQ(rows[4].dist_mr_km, 0.0);
    EXPECT_EQ(rows[5].timing.count, 3u);
    const auto text = distance_csv(rows);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

TEST(DistanceTable, UnresolvedLocationsRejected) {
    const geo::GeoPoint fra{50.0379, 8.5622};
    std::vector<geo::ServerRecord> unresolved{{"signal", "203.0.113.10", std::nullopt, "zzz"}};
    const std::map<std::string, std::vector<double>> timings{{"a", {0.1}}};
    EXPECT_THROW(distance_timing_table(timings, unresolved, fra, {{"a", fra}}), ConfigError);
    std::vector<geo::ServerRecord> ok{{"signal", "203.0.113.10", fra, std::nullopt}};
    EXPECT_THROW(distance_timing_table(timings, ok, fra, {}), ConfigError);
}

TEST(HourOfDay, AllAtOneHourLeavesOthersEmpty) {
    std::vector<TimedValue> v;
    const std::int64_t day = 1700006400;  // 00:00 UTC
    for (int i = 0; i < 20; ++i) v.push_back({"x", day + 14 * 3600 + i * 60 + 86400 * (i % 3), 0.1 * i});
    const auto buckets = hour_of_day_breakdown(v);
    ASSERT_EQ(buckets.size(), 24u);
    int empty = 0;
    for (const auto& b : buckets) {
        if (!b.summary) ++empty;
        else EXPECT_EQ(b.hour, 14);
    }
    EXPECT_EQ(empty, 23);
    // Local time shifts the bucket.
    const auto shifted = hour_of_day_breakdown(v, 2 * 3600);
    EXPECT_TRUE(shifted[16].summary.has_value());
    const auto text = hourly_csv(buckets);
    EXPECT_NE(text.find("x,0,0,,,,,,,\n"), std::string::npos);
}

TEST(HourOfDay, UniformWeekFlatProfile) {
    std::mt19937_64 gen(9);
    std::lognormal_distribution<double> d(std::log(0.1), 0.3);
    std::uniform_int_distribution<std::int64_t> t(0, 7 * 86400 - 1);
    std::vector<TimedValue> v;
    std::vector<double> all;
    for (int i = 0; i < 24000; ++i) {
        v.push_back({"x", 1700006400 + t(gen), d(gen)});
        all.push_back(v.back().value);
    }
    const double global = summarize_one("all", all).median;
    for (const auto& b : hour_of_day_breakdown(v)) {
        ASSERT_TRUE(b.summary.has_value());
        EXPECT_NEAR(b.summary->median, global, 0.1 * global);
    }
}

TEST(SummaryCsv, Header) {
    const auto rows = summarize({{"a", {1.0, 2.0}}});
    const auto text = summary_csv(rows);
    EXPECT_EQ(text.substr(0, text.find('\n')), kSummaryHeader);
}
