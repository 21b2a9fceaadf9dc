#include <gtest/gtest.h>

#include <random>

#include "dnt/classifier.hpp"
#include "dnt/defense.hpp"
#include "dnt/geo.hpp"
#include "dnt/netsim.hpp"
#include "support/fixtures.hpp"

using namespace dnt;

namespace {

classifier::CnnConfig quick_cnn() {
    classifier::CnnConfig c;
    c.epochs = 8;
    c.seed = 21;
    return c;
}

dataset::FoldedDataset small_dataset() {
    const auto samples = dnt::testing::scenario_samples(dnt::testing::separable_scenario(20, 3));
    return dataset::make_folds(dataset::balance_classes(samples, 2), 2);
}

}  // namespace

TEST(ParallelEquivalence, RunScenario) {
    auto cfg = dnt::testing::separable_scenario(25, 9);
    cfg.delivery_delay_max = 1.5;
    const auto s = netsim::run_scenario(cfg, Exec::serial);
    const auto p = netsim::run_scenario(cfg, Exec::parallel);
    ASSERT_EQ(s.size(), p.size());
    for (std::size_t r = 0; r < s.size(); ++r) EXPECT_EQ(s[r].trace, p[r].trace);
    EXPECT_EQ(netsim::truth_csv(s), netsim::truth_csv(p));
}

TEST(ParallelEquivalence, DistanceMatrix) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> lat(-90, 90);
    std::uniform_real_distribution<double> lon(-180, 180);
    std::vector<geo::GeoPoint> pts;
    for (int i = 0; i < 150; ++i) pts.push_back({lat(gen), lon(gen)});
    EXPECT_EQ(geo::distance_matrix(pts, Exec::serial), geo::distance_matrix(pts, Exec::parallel));
}

TEST(ParallelEquivalence, CrossValidate) {
    const auto ds = small_dataset();
    const auto s = classifier::cross_validate(ds, quick_cnn(), Exec::serial);
    const auto p = classifier::cross_validate(ds, quick_cnn(), Exec::parallel);
    EXPECT_EQ(s.predictions, p.predictions);
    EXPECT_EQ(s.to_json("cnn", "{}", 1), p.to_json("cnn", "{}", 1));
    EXPECT_EQ(classifier::centroid_cross_validate(ds, Exec::serial).predictions,
              classifier::centroid_cross_validate(ds, Exec::parallel).predictions);
}

TEST(ParallelEquivalence, PredictBatch) {
    const auto ds = small_dataset();
    const auto model = classifier::train_cnn(ds, quick_cnn(), 1);
    std::vector<std::vector<double>> rows;
    for (const auto& s : ds.samples) rows.push_back(s.values);
    const auto s = model.predict_batch(rows, Exec::serial);
    const auto p = model.predict_batch(rows, Exec::parallel);
    ASSERT_EQ(s.size(), p.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s[i].decision, p[i].decision);
        EXPECT_EQ(s[i].probabilities, p[i].probabilities);
    }
}

TEST(ParallelEquivalence, SweepAndConvergence) {
    const auto cfg_s = dnt::testing::separable_scenario(20, 6);
    const auto groups = dnt::testing::extract_groups(netsim::run_scenario(cfg_s), cfg_s.messenger);
    defense::SweepConfig cfg;
    cfg.cnn = quick_cnn();
    cfg.max_delay_s = 2;
    const auto s = defense::sweep(groups, cfg, Exec::serial);
    const auto p = defense::sweep(groups, cfg, Exec::parallel);
    EXPECT_EQ(defense::sweep_csv(s), defense::sweep_csv(p));

    const auto samples = dnt::testing::scenario_samples(cfg_s);
    const std::vector<std::size_t> sizes{10, 20};
    const auto cs = classifier::convergence_curve(samples, quick_cnn(), sizes, 3, Exec::serial);
    const auto cp = classifier::convergence_curve(samples, quick_cnn(), sizes, 3, Exec::parallel);
    ASSERT_EQ(cs.size(), cp.size());
    for (std::size_t i = 0; i < cs.size(); ++i) EXPECT_EQ(cs[i].overall_accuracy, cp[i].overall_accuracy);
}
