#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "dnt/classifier.hpp"
#include "dnt/errors.hpp"
#include "support/fixtures.hpp"

using namespace dnt;
using namespace dnt::classifier;
using dnt::dataset::TimingSequenceSample;
using dnt::testing::sample;

namespace {

std::vector<TimingSequenceSample> gaussian_classes(const std::vector<double>& means, double sd, int per_class,
                                                   std::uint64_t seed, int len = 5) {
    std::mt19937_64 gen(seed);
    std::vector<TimingSequenceSample> out;
    for (std::size_t c = 0; c < means.size(); ++c) {
        std::normal_distribution<double> nd(means[c], sd);
        for (int i = 0; i < per_class; ++i) {
            std::vector<double> v(static_cast<std::size_t>(len));
            for (auto& x : v) x = std::max(1e-4, nd(gen));
            out.push_back(sample("class" + std::to_string(c), v, i));
        }
    }
    return out;
}

CnnConfig quick_cnn(std::uint64_t seed = 1) {
    CnnConfig cfg;
    cfg.epochs = 30;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(MakeReport, MetricsFromConfusion) {
    const std::vector<std::string> classes{"a", "b", "c"};
    const std::vector<int> actual{0, 0, 0, 1, 1, 2};
    const std::vector<int> predicted{0, 0, 1, 1, 0, 0};
    const auto r = make_report(classes, actual, predicted, 5);
    EXPECT_EQ(r.confusion[0], (std::vector<std::size_t>{2, 1, 0}));
    EXPECT_EQ(r.confusion[2], (std::vector<std::size_t>{1, 0, 0}));
    EXPECT_NEAR(r.overall_accuracy, 3.0 / 6.0, 1e-12);
    EXPECT_NEAR(r.per_class_precision[0], 2.0 / 4.0, 1e-12);
    EXPECT_NEAR(r.per_class_recall[0], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.per_class_recall[1], 0.5, 1e-12);
    EXPECT_EQ(r.per_class_precision[2], 0.0);
    EXPECT_EQ(r.per_class_recall[2], 0.0);
    EXPECT_EQ(r.n_samples, 6u);
}

TEST(MakeReport, JsonCarriesMetrics) {
    const auto r = make_report({"x", "y"}, std::vector<int>{0, 1}, std::vector<int>{0, 1}, 3);
    const auto j = nlohmann::json::parse(r.to_json("cnn", CnnConfig{}.to_json(), 7));
    EXPECT_EQ(j["overall_accuracy"].get<double>(), 1.0);
    EXPECT_EQ(j["classes"].size(), 2u);
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), 7u);
    EXPECT_EQ(j["method"].get<std::string>(), "cnn");
    EXPECT_EQ(j["confusion"][1][1].get<int>(), 1);
}

TEST(CrossValidate, SeparableDataIsPerfect) {
    const auto ds = dataset::make_folds(gaussian_classes({0.03, 0.5}, 0.01, 50, 1), 2);
    const auto r = cross_validate(ds, quick_cnn());
    EXPECT_EQ(r.overall_accuracy, 1.0);
    EXPECT_EQ(r.per_class_precision, (std::vector<double>{1.0, 1.0}));
}

TEST(CrossValidate, EverySamplePredictedOnce) {
    const auto ds = dataset::make_folds(gaussian_classes({0.1, 0.15, 0.2}, 0.05, 23, 3), 4);
    const auto r = cross_validate(ds, quick_cnn());
    ASSERT_EQ(r.predictions.size(), ds.size());
    EXPECT_TRUE(std::all_of(r.predictions.begin(), r.predictions.end(), [](int p) { return p >= 0 && p < 3; }));
    std::size_t total = 0;
    for (const auto& row : r.confusion) {
        std::size_t s = 0;
        for (auto v : row) s += v;
        EXPECT_EQ(s, 23u);
        total += s;
    }
    EXPECT_EQ(total, ds.size());
}

TEST(CrossValidate, ShuffledLabelsGiveChance) {
    const auto base = gaussian_classes({0.03, 0.23}, 0.02, 60, 5);
    std::mt19937_64 gen(11);
    double sum = 0.0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
        auto s = base;
        std::vector<std::string> labels;
        for (const auto& x : s) labels.push_back(x.label);
        std::shuffle(labels.begin(), labels.end(), gen);
        for (std::size_t i = 0; i < s.size(); ++i) s[i].label = labels[i];
        const auto ds = dataset::make_folds(dataset::balance_classes(s, gen()), gen());
        sum += cross_validate(ds, quick_cnn(gen())).overall_accuracy;
    }
    EXPECT_NEAR(sum / reps, 0.5, 0.10);
}

TEST(CrossValidate, SimulatedCitiesAreDistinguishable) {
    auto cfg = dnt::testing::base_scenario(60, 21);
    cfg.receivers = {dnt::testing::normal_receiver("near", "near", 0.030, 0.020),
                     dnt::testing::normal_receiver("far", "far", 0.230, 0.020)};
    const auto samples = dnt::testing::scenario_samples(cfg);
    const auto ds = dataset::make_folds(dataset::balance_classes(samples, 1), 1);
    EXPECT_GE(cross_validate(ds, CnnConfig{}).overall_accuracy, 0.95);
}

TEST(CrossValidate, DeterministicForSeed) {
    const auto ds = dataset::make_folds(gaussian_classes({0.1, 0.13}, 0.03, 20, 9), 1);
    const auto a = cross_validate(ds, quick_cnn(5));
    const auto b = cross_validate(ds, quick_cnn(5));
    EXPECT_EQ(a.predictions, b.predictions);
    EXPECT_EQ(a.to_json("cnn", "{}", 5), b.to_json("cnn", "{}", 5));
}

TEST(CrossValidate, FoldErrorsPropagate) {
    const auto ds = dataset::make_folds(gaussian_classes({0.1, 0.2}, 0.01, 10, 9), 1);
    FoldClassifier failing = [](auto, auto, auto, int, int fold) -> std::vector<int> {
        if (fold == 3) throw ConfigError("fold 3 broke");
        return {};
    };
    EXPECT_THROW(cross_validate_with(ds, failing, Exec::parallel), std::exception);
}

TEST(TrainCnn, PredictsRawSequences) {
    const auto ds = dataset::make_folds(gaussian_classes({0.05, 0.4}, 0.01, 30, 2), 3);
    const auto model = train_cnn(ds, quick_cnn(), 0);
    const auto p = predict(model, std::vector<double>{0.4, 0.4, 0.41, 0.39, 0.4});
    EXPECT_EQ(model.classes()[static_cast<std::size_t>(p.decision)], "class1");
    EXPECT_NEAR(p.probabilities[0] + p.probabilities[1], 1.0, 1e-12);
    EXPECT_THROW(predict(model, std::vector<double>{0.4, 0.4}), ConfigError);
    EXPECT_TRUE(std::isfinite(model.final_loss));
}

TEST(Centroid, SingleFoldOnlyPredictsTestPortion) {
    const auto ds = dataset::make_folds(gaussian_classes({0.05, 0.4, 0.8}, 0.02, 20, 4), 3);
    const auto r = centroid_baseline(ds, 2);
    const auto test = ds.test_indices(2);
    EXPECT_EQ(r.n_samples, test.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const bool in_test = std::find(test.begin(), test.end(), i) != test.end();
        EXPECT_EQ(r.predictions[i] >= 0, in_test);
    }
    EXPECT_EQ(r.overall_accuracy, 1.0);
    EXPECT_EQ(centroid_cross_validate(ds).overall_accuracy, 1.0);
}

TEST(Convergence, SizesCappedByClassCount) {
    const auto samples = gaussian_classes({0.05, 0.4}, 0.02, 25, 4);
    const std::vector<std::size_t> sizes{3, 10, 20, 30, 300};
    CnnConfig cfg = quick_cnn();
    cfg.epochs = 5;
    const auto curve = convergence_curve(samples, cfg, sizes, 1);
    ASSERT_EQ(curve.size(), 2u);
    EXPECT_EQ(curve[0].samples_per_class, 10u);
    EXPECT_EQ(curve[1].samples_per_class, 20u);
    const auto d = default_convergence_sizes();
    EXPECT_EQ(d.size(), 30u);
    EXPECT_EQ(d.front(), 10u);
    EXPECT_EQ(d.back(), 300u);
}

TEST(CrossValidate, SeparableSingleValueSequences) {
    const auto ds = dataset::make_folds(gaussian_classes({0.05, 0.3}, 0.01, 40, 12, 1), 5);
    EXPECT_EQ(ds.sequence_length, 1);
    EXPECT_EQ(cross_validate(ds, quick_cnn()).overall_accuracy, 1.0);
}

TEST(Centroid, IdenticalProfilesNearChance) {
    const auto samples = dnt::testing::scenario_samples(dnt::testing::identical_scenario(150, 8));
    const auto ds = dataset::make_folds(dataset::balance_classes(samples, 1), 1);
    EXPECT_NEAR(centroid_cross_validate(ds).overall_accuracy, 0.5, 0.1);
}
