#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnt/trace_extract.hpp"

namespace dnt::dataset {

inline constexpr int kMaxSequenceLength = 5;
inline constexpr int kFolds = 5;

enum class Feature { rtt_mr, rtt_sr };

std::string to_string(Feature f);
Feature parse_feature(const std::string& s);

/// Matched records of one measurement iteration at one receiver, in send order.
struct RecordGroup {
    std::string receiver;
    int iteration = 0;
    std::string label;
    std::vector<NotificationRtts> records;
};

struct SampleSource {
    std::string receiver;
    int iteration = 0;
    friend bool operator==(const SampleSource&, const SampleSource&) = default;
};

struct TimingSequenceSample {
    std::vector<double> values;
    std::string label;
    SampleSource source;
    friend bool operator==(const TimingSequenceSample&, const TimingSequenceSample&) = default;
};

/// Splits one receiver's records (sorted by message_t) into iterations: a new
/// iteration starts whenever consecutive messages are more than `max_gap_s` apart.
std::vector<RecordGroup> group_iterations(const std::string& receiver, const std::string& label,
                                          std::span<const NotificationRtts> records, double max_gap_s = 25.0);

/// rtt_mr when every record carries it, rtt_sr when none does; mixed input throws ConfigError.
Feature infer_feature(std::span<const RecordGroup> groups);

struct BuildResult {
    std::vector<TimingSequenceSample> samples;
    std::size_t skipped = 0;
};

/// One sample per group holding the first `n` feature values. Groups with
/// fewer than `n` usable records are skipped and counted.
BuildResult build_sequences(std::span<const RecordGroup> groups, int n, Feature feature);

/// Downsamples every class to the smallest class count, uniformly without
/// replacement; kept samples retain their input order.
std::vector<TimingSequenceSample> balance_classes(std::span<const TimingSequenceSample> samples, std::uint64_t seed);

/// Distinct labels in sorted order; a label's position is its class index.
std::vector<std::string> class_labels(std::span<const TimingSequenceSample> samples);

struct FoldedDataset {
    std::vector<TimingSequenceSample> samples;
    std::vector<std::string> classes;
    std::vector<int> labels;  ///< class index per sample
    std::vector<int> folds;   ///< fold index per sample, in [0, kFolds)
    int sequence_length = 0;

    std::size_t size() const noexcept { return samples.size(); }
    std::vector<std::size_t> train_indices(int fold) const;
    std::vector<std::size_t> test_indices(int fold) const;
};

/// Stratified 5-way split: each class is shuffled and dealt round-robin into folds.
FoldedDataset make_folds(std::vector<TimingSequenceSample> samples, std::uint64_t seed);

/// Attaches an externally supplied fold assignment (e.g. read from a fold file).
FoldedDataset with_folds(std::vector<TimingSequenceSample> samples, std::vector<int> folds);

/// Per-position mean and population standard deviation.
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;

    static FeatureStats compute(std::span<const std::vector<double>> rows);
    /// Positions with zero variance are passed through unscaled.
    std::vector<double> apply(std::span<const double> row) const;
    std::vector<std::size_t> constant_positions() const;
};

struct NormalizedSplit {
    std::vector<std::vector<double>> train;
    std::vector<std::vector<double>> test;
    FeatureStats stats;
    std::vector<std::string> warnings;
};

/// Standardizes both portions with statistics of the training portion only.
NormalizedSplit normalize(std::span<const std::vector<double>> train, std::span<const std::vector<double>> test);

/// `label,source,v1..v5` with unused positions empty; source is `receiver/iteration`.
std::string dataset_csv(std::span<const TimingSequenceSample> samples);
std::vector<TimingSequenceSample> read_dataset_csv(const std::filesystem::path& path);

/// `sample_index,fold`.
std::string folds_csv(const FoldedDataset& ds);
std::vector<int> read_folds_csv(const std::filesystem::path& path, std::size_t n_samples);

}  // namespace dnt::dataset
