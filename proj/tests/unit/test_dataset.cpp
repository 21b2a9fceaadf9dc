#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "dnt/dataset.hpp"
#include "dnt/errors.hpp"
#include "support/fixtures.hpp"

using namespace dnt;
using namespace dnt::dataset;
using dnt::testing::sample;
using dnt::testing::TempDir;

namespace {

RecordGroup group_of(const std::string& label, std::vector<double> rtt_mr, int iteration = 0) {
    RecordGroup g{label + "-rx", iteration, label, {}};
    double t = iteration * 300.0;
    for (double v : rtt_mr) {
        NotificationRtts r;
        r.message_t = t;
        r.rtt_sm = 0.05;
        r.rtt_mr = v;
        r.rtt_sr = 0.05 + v;
        g.records.push_back(r);
        t += 10.0;
    }
    return g;
}

std::vector<TimingSequenceSample> with_counts(const std::map<std::string, int>& counts, std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> v(0.01, 1.0);
    std::vector<TimingSequenceSample> out;
    for (const auto& [label, n] : counts) {
        for (int i = 0; i < n; ++i) out.push_back(sample(label, {v(rng), v(rng), v(rng)}, i));
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::map<std::string, int> count_labels(std::span<const TimingSequenceSample> s) {
    std::map<std::string, int> c;
    for (const auto& x : s) ++c[x.label];
    return c;
}

}  // namespace

TEST(GroupIterations, SplitsOnLargeGaps) {
    std::vector<NotificationRtts> recs;
    for (double t : {0.0, 10.0, 20.0, 30.0, 50.0, 300.0, 310.0, 600.0}) recs.push_back({t, 0.1, 0.5, 0.4});
    const auto groups = group_iterations("rx", "lab", recs);
    ASSERT_EQ(groups.size(), 3u);
    EXPECT_EQ(groups[0].records.size(), 5u);
    EXPECT_EQ(groups[1].records.size(), 2u);
    EXPECT_EQ(groups[2].records.size(), 1u);
    EXPECT_EQ(groups[2].iteration, 2);
    EXPECT_TRUE(group_iterations("rx", "lab", {}).empty());
}

TEST(BuildSequences, FullIterationInSendOrder) {
    const std::vector<RecordGroup> groups{group_of("a", {0.5, 0.4, 0.3, 0.2, 0.1})};
    const auto r = build_sequences(groups, 5, Feature::rtt_mr);
    ASSERT_EQ(r.samples.size(), 1u);
    EXPECT_EQ(r.samples[0].values, (std::vector<double>{0.5, 0.4, 0.3, 0.2, 0.1}));
    EXPECT_EQ(r.samples[0].label, "a");
    EXPECT_EQ(r.skipped, 0u);
}

TEST(BuildSequences, ShortIterationSkipped) {
    const std::vector<RecordGroup> groups{group_of("a", {0.5, 0.4, 0.3}), group_of("a", {1, 2, 3, 4, 5}, 1)};
    const auto r = build_sequences(groups, 5, Feature::rtt_mr);
    EXPECT_EQ(r.samples.size(), 1u);
    EXPECT_EQ(r.skipped, 1u);
    EXPECT_EQ(r.samples[0].source.iteration, 1);
}

TEST(BuildSequences, LengthOneTakesFirstMessage) {
    const std::vector<RecordGroup> groups{group_of("a", {0.5, 0.4, 0.3}), group_of("b", {0.7}, 1)};
    const auto r = build_sequences(groups, 1, Feature::rtt_mr);
    ASSERT_EQ(r.samples.size(), 2u);
    EXPECT_EQ(r.samples[0].values, std::vector<double>{0.5});
    EXPECT_EQ(r.samples[1].values, std::vector<double>{0.7});
}

TEST(BuildSequences, SenderToReceiverFeatureAndBadN) {
    const std::vector<RecordGroup> groups{group_of("a", {0.5, 0.4})};
    const auto r = build_sequences(groups, 2, Feature::rtt_sr);
    EXPECT_NEAR(r.samples[0].values[0], 0.55, 1e-12);
    EXPECT_THROW(build_sequences(groups, 0, Feature::rtt_mr), ConfigError);
    EXPECT_THROW(build_sequences(groups, 6, Feature::rtt_mr), ConfigError);
}

TEST(InferFeature, DualSingleAndMixed) {
    std::vector<RecordGroup> groups{group_of("a", {0.5, 0.4})};
    EXPECT_EQ(infer_feature(groups), Feature::rtt_mr);
    groups[0].records[0].rtt_mr.reset();
    groups[0].records[0].rtt_sm.reset();
    EXPECT_THROW(infer_feature(groups), ConfigError);
    groups[0].records[1].rtt_mr.reset();
    EXPECT_EQ(infer_feature(groups), Feature::rtt_sr);
    EXPECT_THROW(build_sequences(groups, 2, Feature::rtt_mr), ConfigError);
}

TEST(BalanceClasses, DownsamplesToMinimum) {
    const auto out = balance_classes(with_counts({{"A", 120}, {"B", 80}, {"C", 200}}), 5);
    EXPECT_EQ(count_labels(out), (std::map<std::string, int>{{"A", 80}, {"B", 80}, {"C", 80}}));
}

TEST(BalanceClasses, AlreadyBalancedUnchanged) {
    const auto in = with_counts({{"A", 50}, {"B", 50}});
    EXPECT_EQ(balance_classes(in, 1), in);
}

TEST(BalanceClasses, SingleClassAndEmpty) {
    EXPECT_EQ(balance_classes(with_counts({{"A", 70}}), 1).size(), 70u);
    EXPECT_THROW(balance_classes({}, 1), ConfigError);
}

TEST(BalanceClasses, SeedChangesSelectionDeterministically) {
    const auto in = with_counts({{"A", 60}, {"B", 20}});
    EXPECT_EQ(balance_classes(in, 3), balance_classes(in, 3));
    EXPECT_NE(balance_classes(in, 3), balance_classes(in, 4));
}

TEST(MakeFolds, HundredSamplesTwoClasses) {
    const auto ds = make_folds(with_counts({{"A", 50}, {"B", 50}}), 9);
    for (int f = 0; f < kFolds; ++f) {
        std::map<int, int> per_class;
        for (std::size_t i : ds.test_indices(f)) ++per_class[ds.labels[i]];
        EXPECT_EQ(per_class[0], 10);
        EXPECT_EQ(per_class[1], 10);
        EXPECT_EQ(ds.train_indices(f).size(), 80u);
    }
}

TEST(MakeFolds, TooFewSamplesInClass) {
    EXPECT_THROW(make_folds(with_counts({{"A", 50}, {"B", 4}}), 1), ConfigError);
}

TEST(MakeFolds, SeedsChangeAssignmentNotCounts) {
    const auto samples = with_counts({{"A", 37}, {"B", 41}, {"C", 23}});
    const auto a = make_folds(samples, 1);
    const auto b = make_folds(samples, 2);
    EXPECT_NE(a.folds, b.folds);
    for (int f = 0; f < kFolds; ++f) {
        std::map<int, int> ca;
        std::map<int, int> cb;
        for (std::size_t i : a.test_indices(f)) ++ca[a.labels[i]];
        for (std::size_t i : b.test_indices(f)) ++cb[b.labels[i]];
        EXPECT_EQ(ca, cb);
    }
}

TEST(MakeFolds, RejectsMixedLengths) {
    auto s = with_counts({{"A", 10}});
    s[3].values.pop_back();
    EXPECT_THROW(make_folds(s, 1), ConfigError);
}

TEST(Normalize, StandardizesWithTrainingStats) {
    const std::vector<std::vector<double>> train{{1.0}, {2.0}, {3.0}};
    const std::vector<std::vector<double>> test{{2.0}, {4.0}};
    const auto n = normalize(train, test);
    EXPECT_NEAR(n.train[0][0], -1.2247, 1e-4);
    EXPECT_NEAR(n.train[1][0], 0.0, 1e-12);
    EXPECT_NEAR(n.train[2][0], 1.2247, 1e-4);
    EXPECT_EQ(n.test[0][0], 0.0);
    EXPECT_NEAR(n.test[1][0], 2.4495, 1e-4);
    EXPECT_TRUE(n.warnings.empty());
}

TEST(Normalize, ConstantPositionPassesThrough) {
    const std::vector<std::vector<double>> train{{1.0, 0.7}, {3.0, 0.7}};
    const std::vector<std::vector<double>> test{{2.0, 0.9}};
    const auto n = normalize(train, test);
    EXPECT_EQ(n.train[0][1], 0.7);
    EXPECT_EQ(n.test[0][1], 0.9);
    ASSERT_EQ(n.warnings.size(), 1u);
    EXPECT_NE(n.warnings[0].find("position 2"), std::string::npos);
}

TEST(DatasetProperties, RandomDatasets) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, int> counts;
        const int classes = std::uniform_int_distribution<int>(1, 6)(rng);
        for (int c = 0; c < classes; ++c) counts["c" + std::to_string(c)] = std::uniform_int_distribution<int>(5, 90)(rng);
        const auto samples = with_counts(counts, rng());
        const auto balanced = balance_classes(samples, rng());
        const int k = std::min_element(counts.begin(), counts.end(), [](auto& a, auto& b) { return a.second < b.second; })->second;
        for (const auto& [label, n] : count_labels(balanced)) EXPECT_EQ(n, k);
        // Output is a subsequence of the input.
        auto it = samples.begin();
        for (const auto& s : balanced) {
            it = std::find(it, samples.end(), s);
            ASSERT_NE(it, samples.end());
            ++it;
        }
        const auto ds = make_folds(balanced, rng());
        std::vector<int> seen(ds.size(), 0);
        for (int f = 0; f < kFolds; ++f) {
            for (std::size_t i : ds.test_indices(f)) ++seen[i];
            EXPECT_EQ(ds.test_indices(f).size() + ds.train_indices(f).size(), ds.size());
        }
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
        for (std::size_t c = 0; c < ds.classes.size(); ++c) {
            std::vector<int> sizes;
            for (int f = 0; f < kFolds; ++f) {
                int n = 0;
                for (std::size_t i : ds.test_indices(f)) n += ds.labels[i] == static_cast<int>(c);
                sizes.push_back(n);
            }
            EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
        }
    }
}

TEST(DatasetCsv, RoundTripsSamplesAndFolds) {
    TempDir dir;
    std::vector<TimingSequenceSample> s{sample("berlin", {0.123456789, 0.2}, 3), sample("paris", {1.5, 2.25}, 0)};
    const auto p = dir.write("d.csv", dataset_csv(s));
    EXPECT_EQ(read_dataset_csv(p), s);
    const auto text = dataset_csv(s);
    EXPECT_EQ(text.substr(0, text.find('\n')), "label,source,v1,v2,v3,v4,v5");
    EXPECT_NE(text.find("berlin,berlin-rx/3,0.123456789,0.200000000,,,\n"), std::string::npos);

    const auto ds = make_folds(with_counts({{"A", 12}, {"B", 9}}), 4);
    const auto fp = dir.write("f.csv", folds_csv(ds));
    EXPECT_EQ(read_folds_csv(fp, ds.size()), ds.folds);
    EXPECT_THROW(read_folds_csv(fp, ds.size() + 1), ParseError);
}

TEST(DatasetCsv, MalformedRowsNameLineAndField) {
    TempDir dir;
    const auto p = dir.write("bad.csv", "label,source,v1,v2,v3,v4,v5\na,r/0,0.1,,,,\nb,r/1,-0.5,,,,\n");
    try {
        read_dataset_csv(p);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.field(), "v1");
    }
}
