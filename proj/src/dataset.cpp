#include "dnt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dnt/csv.hpp"
#include "dnt/errors.hpp"
#include "dnt/rng.hpp"

namespace dnt::dataset {

std::string to_string(Feature f) { return f == Feature::rtt_mr ? "rtt_mr" : "rtt_sr"; }

Feature parse_feature(const std::string& s) {
    if (s == "rtt_mr") return Feature::rtt_mr;
    if (s == "rtt_sr") return Feature::rtt_sr;
    throw ConfigError("feature: expected 'rtt_mr' or 'rtt_sr', got '" + s + "'");
}

std::vector<RecordGroup> group_iterations(const std::string& receiver, const std::string& label,
                                          std::span<const NotificationRtts> records, double max_gap_s) {
    std::vector<RecordGroup> out;
    std::optional<double> prev;
    for (const auto& r : records) {
        if (!prev || r.message_t - *prev > max_gap_s) {
            out.push_back(RecordGroup{receiver, static_cast<int>(out.size()), label, {}});
        }
        out.back().records.push_back(r);
        prev = r.message_t;
    }
    return out;
}

Feature infer_feature(std::span<const RecordGroup> groups) {
    std::size_t with = 0;
    std::size_t without = 0;
    for (const auto& g : groups) {
        for (const auto& r : g.records) (r.rtt_mr ? with : without)++;
    }
    if (with > 0 && without > 0) {
        throw ConfigError("dataset mixes dual- and single-confirmation records (" + std::to_string(with) + " with rtt_mr, " +
                          std::to_string(without) + " without)");
    }
    return without > 0 ? Feature::rtt_sr : Feature::rtt_mr;
}

BuildResult build_sequences(std::span<const RecordGroup> groups, int n, Feature feature) {
    if (n < 1 || n > kMaxSequenceLength) throw ConfigError("n: must be in [1, 5]");
    BuildResult result;
    for (const auto& g : groups) {
        if (g.records.size() < static_cast<std::size_t>(n)) {
            ++result.skipped;
            continue;
        }
        TimingSequenceSample s;
        s.label = g.label;
        s.source = {g.receiver, g.iteration};
        bool usable = true;
        for (int i = 0; i < n; ++i) {
            const auto& r = g.records[static_cast<std::size_t>(i)];
            if (feature == Feature::rtt_mr && !r.rtt_mr) {
                throw ConfigError("feature rtt_mr requested but receiver " + g.receiver + " has single-confirmation records");
            }
            const double v = feature == Feature::rtt_mr ? *r.rtt_mr : r.rtt_sr;
            if (!std::isfinite(v) || v <= 0.0) {
                usable = false;
                break;
            }
            s.values.push_back(v);
        }
        if (!usable) {
            ++result.skipped;
            continue;
        }
        result.samples.push_back(std::move(s));
    }
    return result;
}

std::vector<std::string> class_labels(std::span<const TimingSequenceSample> samples) {
    std::vector<std::string> labels;
    for (const auto& s : samples) labels.push_back(s.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

std::vector<TimingSequenceSample> balance_classes(std::span<const TimingSequenceSample> samples, std::uint64_t seed) {
    if (samples.empty()) throw ConfigError("balance_classes: no samples");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);
    std::size_t k = samples.size();
    for (const auto& [label, idx] : by_class) {
        if (idx.empty()) throw ConfigError("balance_classes: class '" + label + "' is empty");
        k = std::min(k, idx.size());
    }
    std::vector<char> keep(samples.size(), 0);
    std::uint64_t class_index = 0;
    for (auto& [label, idx] : by_class) {
        Rng rng(derive_seed(seed, {class_index++}));
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t j = 0; j < k; ++j) keep[idx[j]] = 1;
    }
    std::vector<TimingSequenceSample> out;
    out.reserve(k * by_class.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (keep[i]) out.push_back(samples[i]);
    }
    return out;
}

std::vector<std::size_t> FoldedDataset::train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        if (folds[i] != fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldedDataset::test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        if (folds[i] == fold) out.push_back(i);
    }
    return out;
}

namespace {

FoldedDataset index_classes(std::vector<TimingSequenceSample> samples) {
    if (samples.empty()) throw ConfigError("dataset: no samples");
    FoldedDataset ds;
    ds.sequence_length = static_cast<int>(samples.front().values.size());
    for (const auto& s : samples) {
        if (static_cast<int>(s.values.size()) != ds.sequence_length) {
            throw ConfigError("dataset: samples have differing sequence lengths");
        }
    }
    ds.classes = class_labels(samples);
    for (const auto& s : samples) {
        const auto it = std::lower_bound(ds.classes.begin(), ds.classes.end(), s.label);
        ds.labels.push_back(static_cast<int>(it - ds.classes.begin()));
    }
    ds.samples = std::move(samples);
    return ds;
}

}  // namespace

FoldedDataset make_folds(std::vector<TimingSequenceSample> samples, std::uint64_t seed) {
    FoldedDataset ds = index_classes(std::move(samples));
    ds.folds.assign(ds.samples.size(), 0);
    for (std::size_t c = 0; c < ds.classes.size(); ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.labels.size(); ++i) {
            if (ds.labels[i] == static_cast<int>(c)) idx.push_back(i);
        }
        if (idx.size() < static_cast<std::size_t>(kFolds)) {
            throw ConfigError("make_folds: class '" + ds.classes[c] + "' has " + std::to_string(idx.size()) +
                              " samples, need at least " + std::to_string(kFolds));
        }
        Rng rng(derive_seed(seed, {c}));
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t j = 0; j < idx.size(); ++j) ds.folds[idx[j]] = static_cast<int>(j % kFolds);
    }
    return ds;
}

FoldedDataset with_folds(std::vector<TimingSequenceSample> samples, std::vector<int> folds) {
    if (folds.size() != samples.size()) throw ConfigError("fold assignment size does not match dataset size");
    for (int f : folds) {
        if (f < 0 || f >= kFolds) throw ConfigError("fold index out of range: " + std::to_string(f));
    }
    FoldedDataset ds = index_classes(std::move(samples));
    ds.folds = std::move(folds);
    return ds;
}

FeatureStats FeatureStats::compute(std::span<const std::vector<double>> rows) {
    FeatureStats st;
    if (rows.empty()) return st;
    const std::size_t n = rows.front().size();
    st.mean.assign(n, 0.0);
    st.std.assign(n, 0.0);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < n; ++j) st.mean[j] += r[j];
    }
    for (auto& m : st.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = r[j] - st.mean[j];
            st.std[j] += d * d;
        }
    }
    for (auto& s : st.std) s = std::sqrt(s / static_cast<double>(rows.size()));
    return st;
}

std::vector<double> FeatureStats::apply(std::span<const double> row) const {
    std::vector<double> out(row.begin(), row.end());
    for (std::size_t j = 0; j < out.size() && j < mean.size(); ++j) {
        if (std[j] > 0.0) out[j] = (out[j] - mean[j]) / std[j];
    }
    return out;
}

std::vector<std::size_t> FeatureStats::constant_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < std.size(); ++j) {
        if (!(std[j] > 0.0)) out.push_back(j);
    }
    return out;
}

NormalizedSplit normalize(std::span<const std::vector<double>> train, std::span<const std::vector<double>> test) {
    NormalizedSplit out;
    out.stats = FeatureStats::compute(train);
    for (std::size_t j : out.stats.constant_positions()) {
        out.warnings.push_back("position " + std::to_string(j + 1) + " has zero variance; passed through unscaled");
    }
    for (const auto& r : train) out.train.push_back(out.stats.apply(r));
    for (const auto& r : test) out.test.push_back(out.stats.apply(r));
    return out;
}

std::string dataset_csv(std::span<const TimingSequenceSample> samples) {
    std::string out = "label,source,v1,v2,v3,v4,v5\n";
    for (const auto& s : samples) {
        out += s.label + "," + s.source.receiver + "/" + std::to_string(s.source.iteration);
        for (int i = 0; i < kMaxSequenceLength; ++i) {
            out += ",";
            if (i < static_cast<int>(s.values.size())) out += csv::format_seconds(s.values[static_cast<std::size_t>(i)]);
        }
        out += "\n";
    }
    return out;
}

std::vector<TimingSequenceSample> read_dataset_csv(const std::filesystem::path& path) {
    const std::string src = path.string();
    std::vector<TimingSequenceSample> out;
    for (const auto& row : csv::read(path, "label,source,v1,v2,v3,v4,v5")) {
        TimingSequenceSample s;
        s.label = row.fields[0];
        if (s.label.empty()) throw ParseError(src, row.line, "label", "empty");
        const auto& source = row.fields[1];
        const auto slash = source.rfind('/');
        if (slash == std::string::npos) throw ParseError(src, row.line, "source", "expected receiver/iteration");
        s.source.receiver = source.substr(0, slash);
        csv::Row it_row{row.line, {source.substr(slash + 1)}};
        s.source.iteration = static_cast<int>(csv::parse_int(it_row, 0, src, "source"));
        bool ended = false;
        for (int i = 0; i < kMaxSequenceLength; ++i) {
            const auto col = static_cast<std::size_t>(2 + i);
            const std::string field = "v" + std::to_string(i + 1);
            if (row.fields[col].empty()) {
                ended = true;
                continue;
            }
            if (ended) throw ParseError(src, row.line, field, "value after an empty position");
            const double v = csv::parse_double(row, col, src, field);
            if (!(v > 0.0)) throw ParseError(src, row.line, field, "timing must be > 0");
            s.values.push_back(v);
        }
        if (s.values.empty()) throw ParseError(src, row.line, "v1", "sample has no values");
        if (!out.empty() && out.front().values.size() != s.values.size()) {
            throw ParseError(src, row.line, "", "sequence length differs from previous rows");
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string folds_csv(const FoldedDataset& ds) {
    std::string out = "sample_index,fold\n";
    for (std::size_t i = 0; i < ds.folds.size(); ++i) {
        out += std::to_string(i) + "," + std::to_string(ds.folds[i]) + "\n";
    }
    return out;
}

std::vector<int> read_folds_csv(const std::filesystem::path& path, std::size_t n_samples) {
    const std::string src = path.string();
    std::vector<int> folds(n_samples, -1);
    for (const auto& row : csv::read(path, "sample_index,fold")) {
        const auto idx = csv::parse_int(row, 0, src, "sample_index");
        const auto fold = csv::parse_int(row, 1, src, "fold");
        if (idx < 0 || static_cast<std::size_t>(idx) >= n_samples) {
            throw ParseError(src, row.line, "sample_index", "out of range");
        }
        if (fold < 0 || fold >= kFolds) throw ParseError(src, row.line, "fold", "out of range");
        if (folds[static_cast<std::size_t>(idx)] != -1) throw ParseError(src, row.line, "sample_index", "duplicate");
        folds[static_cast<std::size_t>(idx)] = static_cast<int>(fold);
    }
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (folds[i] < 0) throw ParseError(src, 0, "sample_index", "no fold for sample " + std::to_string(i));
    }
    return folds;
}

}  // namespace dnt::dataset
