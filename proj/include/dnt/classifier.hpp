#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dnt/cnn.hpp"
#include "dnt/dataset.hpp"
#include "dnt/exec.hpp"

namespace dnt::classifier {

/// Confusion matrix [actual][predicted] plus the metrics derived from it.
struct EvalReport {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> confusion;
    /// Correct / predicted-as-class; 0 for a class that was never predicted.
    std::vector<double> per_class_precision;
    /// Correct / actual class size.
    std::vector<double> per_class_recall;
    double overall_accuracy = 0.0;
    std::size_t n_samples = 0;
    int sequence_length = 0;
    /// Predicted class per evaluated sample index; -1 where not evaluated.
    std::vector<int> predictions;

    /// Report JSON; `method` and `config_json` are echoed into the document.
    std::string to_json(const std::string& method, const std::string& config_json, std::uint64_t seed) const;
};

EvalReport make_report(const std::vector<std::string>& classes, std::span<const int> actual,
                       std::span<const int> predicted, int sequence_length);

struct Prediction {
    std::vector<double> probabilities;
    int decision = 0;
};

/// A CNN bundled with the standardization statistics of its training portion.
class TrainedCnn {
public:
    TrainedCnn(CnnModel model, dataset::FeatureStats stats, std::vector<std::string> classes);

    /// Takes a raw (unnormalized) timing sequence; throws ConfigError on length mismatch.
    Prediction predict(std::span<const double> raw) const;
    std::vector<Prediction> predict_batch(std::span<const std::vector<double>> raw, Exec exec = Exec::parallel) const;

    const CnnModel& model() const noexcept { return model_; }
    CnnModel& model() noexcept { return model_; }
    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const dataset::FeatureStats& stats() const noexcept { return stats_; }
    double final_loss = 0.0;
    std::vector<std::string> warnings;

private:
    CnnModel model_;
    dataset::FeatureStats stats_;
    std::vector<std::string> classes_;
};

/// Trains on every fold except `fold`. Seeded by derive_seed(cfg.seed, {fold}).
TrainedCnn train_cnn(const dataset::FoldedDataset& ds, const CnnConfig& cfg, int fold);

Prediction predict(const TrainedCnn& model, std::span<const double> sample);

/// Classifies the test rows of one fold; receives normalized rows.
using FoldClassifier = std::function<std::vector<int>(std::span<const std::vector<double>> train,
                                                      std::span<const int> train_labels,
                                                      std::span<const std::vector<double>> test, int n_classes,
                                                      int fold)>;

/// Runs `classify` once per fold and merges the test predictions.
EvalReport cross_validate_with(const dataset::FoldedDataset& ds, const FoldClassifier& classify, Exec exec);

EvalReport cross_validate(const dataset::FoldedDataset& ds, const CnnConfig& cfg, Exec exec = Exec::parallel);

/// Nearest training-class centroid (Euclidean, standardized features), test portion of `fold` only.
EvalReport centroid_baseline(const dataset::FoldedDataset& ds, int fold);
/// Centroid baseline merged over all five folds.
EvalReport centroid_cross_validate(const dataset::FoldedDataset& ds, Exec exec = Exec::parallel);

struct ConvergencePoint {
    std::size_t samples_per_class = 0;
    double overall_accuracy = 0.0;
};

/// 10, 20, ..., 300.
std::vector<std::size_t> default_convergence_sizes();

/// Cross-validated accuracy on seeded random balanced subsets of each size.
/// Sizes beyond the smallest class (or below the fold count) are dropped.
std::vector<ConvergencePoint> convergence_curve(std::span<const dataset::TimingSequenceSample> samples,
                                                const CnnConfig& cfg, std::span<const std::size_t> sizes,
                                                std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace dnt::classifier
