#include "dnt/classifier.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include <json.hpp>

#include "dnt/errors.hpp"
#include "dnt/rng.hpp"

namespace dnt::classifier {

using dataset::FoldedDataset;
using nlohmann::json;

EvalReport make_report(const std::vector<std::string>& classes, std::span<const int> actual,
                       std::span<const int> predicted, int sequence_length) {
    const std::size_t C = classes.size();
    EvalReport r;
    r.classes = classes;
    r.sequence_length = sequence_length;
    r.confusion.assign(C, std::vector<std::size_t>(C, 0));
    r.predictions.assign(predicted.begin(), predicted.end());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (predicted[i] < 0) continue;
        ++r.confusion[static_cast<std::size_t>(actual[i])][static_cast<std::size_t>(predicted[i])];
        ++r.n_samples;
        if (actual[i] == predicted[i]) ++correct;
    }
    r.per_class_precision.assign(C, 0.0);
    r.per_class_recall.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t row = 0;
        std::size_t col = 0;
        for (std::size_t k = 0; k < C; ++k) {
            row += r.confusion[c][k];
            col += r.confusion[k][c];
        }
        if (col > 0) r.per_class_precision[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(col);
        if (row > 0) r.per_class_recall[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(row);
    }
    r.overall_accuracy = r.n_samples ? static_cast<double>(correct) / static_cast<double>(r.n_samples) : 0.0;
    return r;
}

std::string EvalReport::to_json(const std::string& method, const std::string& config_json, std::uint64_t seed) const {
    json j;
    j["method"] = method;
    j["classes"] = classes;
    j["confusion"] = confusion;
    j["per_class_precision"] = per_class_precision;
    j["per_class_recall"] = per_class_recall;
    j["overall_accuracy"] = overall_accuracy;
    j["n_samples"] = n_samples;
    j["sequence_length"] = sequence_length;
    j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

TrainedCnn::TrainedCnn(CnnModel model, dataset::FeatureStats stats, std::vector<std::string> classes)
    : model_(std::move(model)), stats_(std::move(stats)), classes_(std::move(classes)) {}

Prediction TrainedCnn::predict(std::span<const double> raw) const {
    if (static_cast<int>(raw.size()) != model_.sequence_length()) {
        throw ConfigError("sample length " + std::to_string(raw.size()) + " does not match trained length " +
                          std::to_string(model_.sequence_length()));
    }
    Prediction p;
    p.probabilities = model_.probabilities(stats_.apply(raw));
    p.decision = argmax(p.probabilities);
    return p;
}

std::vector<Prediction> TrainedCnn::predict_batch(std::span<const std::vector<double>> raw, Exec exec) const {
    std::vector<Prediction> out(raw.size());
    const auto n = static_cast<std::ptrdiff_t>(raw.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict(raw[i]);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict(raw[i]);
    }
    return out;
}

Prediction predict(const TrainedCnn& model, std::span<const double> sample) { return model.predict(sample); }

TrainedCnn train_cnn(const FoldedDataset& ds, const CnnConfig& cfg, int fold) {
    std::vector<std::vector<double>> raw;
    std::vector<int> labels;
    for (std::size_t i : ds.train_indices(fold)) {
        raw.push_back(ds.samples[i].values);
        labels.push_back(ds.labels[i]);
    }
    auto split = dataset::normalize(raw, {});
    CnnConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold)});
    CnnModel model(ds.sequence_length, static_cast<int>(ds.classes.size()), fold_cfg);
    Rng rng(derive_seed(fold_cfg.seed, {1}));
    const double loss = model.fit(split.train, labels, rng);
    TrainedCnn trained(std::move(model), split.stats, ds.classes);
    trained.final_loss = loss;
    trained.warnings = std::move(split.warnings);
    return trained;
}

EvalReport cross_validate_with(const FoldedDataset& ds, const FoldClassifier& classify, Exec exec) {
    if (ds.folds.size() != ds.samples.size()) throw ConfigError("cross_validate: dataset has no fold assignment");
    for (int f = 0; f < dataset::kFolds; ++f) {
        if (ds.test_indices(f).empty()) throw ConfigError("cross_validate: fold " + std::to_string(f) + " is empty");
    }
    std::vector<int> predicted(ds.size(), -1);
    auto run_fold = [&](int f) {
        std::vector<std::vector<double>> train_raw;
        std::vector<std::vector<double>> test_raw;
        std::vector<int> train_labels;
        const auto train_idx = ds.train_indices(f);
        const auto test_idx = ds.test_indices(f);
        for (std::size_t i : train_idx) {
            train_raw.push_back(ds.samples[i].values);
            train_labels.push_back(ds.labels[i]);
        }
        for (std::size_t i : test_idx) test_raw.push_back(ds.samples[i].values);
        const auto split = dataset::normalize(train_raw, test_raw);
        const auto out = classify(split.train, train_labels, split.test, static_cast<int>(ds.classes.size()), f);
        for (std::size_t k = 0; k < test_idx.size(); ++k) predicted[test_idx[k]] = out.at(k);
    };
    if (exec == Exec::parallel) {
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
        for (int f = 0; f < dataset::kFolds; ++f) {
            try {
                run_fold(f);
            } catch (...) {
#pragma omp critical(dnt_cv_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (int f = 0; f < dataset::kFolds; ++f) run_fold(f);
    }
    return make_report(ds.classes, ds.labels, predicted, ds.sequence_length);
}

EvalReport cross_validate(const FoldedDataset& ds, const CnnConfig& cfg, Exec exec) {
    cfg.validate();
    return cross_validate_with(
        ds,
        [&](std::span<const std::vector<double>> train, std::span<const int> labels,
            std::span<const std::vector<double>> test, int n_classes, int fold) {
            CnnConfig fold_cfg = cfg;
            fold_cfg.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold)});
            CnnModel model(ds.sequence_length, n_classes, fold_cfg);
            Rng rng(derive_seed(fold_cfg.seed, {1}));
            model.fit(train, labels, rng);
            std::vector<int> out;
            out.reserve(test.size());
            for (const auto& row : test) out.push_back(argmax(model.logits(row)));
            return out;
        },
        exec);
}

namespace {

std::vector<int> nearest_centroid(std::span<const std::vector<double>> train, std::span<const int> labels,
                                  std::span<const std::vector<double>> test, int n_classes) {
    const std::size_t dim = train.empty() ? 0 : train.front().size();
    std::vector<std::vector<double>> centroid(static_cast<std::size_t>(n_classes), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        for (std::size_t j = 0; j < dim; ++j) centroid[c][j] += train[i][j];
        ++count[c];
    }
    for (std::size_t c = 0; c < centroid.size(); ++c) {
        if (count[c] == 0) continue;
        for (auto& v : centroid[c]) v /= static_cast<double>(count[c]);
    }
    std::vector<int> out;
    out.reserve(test.size());
    for (const auto& row : test) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroid.size(); ++c) {
            if (count[c] == 0) continue;
            double d = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double diff = row[j] - centroid[c][j];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace

EvalReport centroid_baseline(const FoldedDataset& ds, int fold) {
    if (fold < 0 || fold >= dataset::kFolds) throw ConfigError("fold out of range");
    std::vector<std::vector<double>> train_raw;
    std::vector<std::vector<double>> test_raw;
    std::vector<int> train_labels;
    for (std::size_t i : ds.train_indices(fold)) {
        train_raw.push_back(ds.samples[i].values);
        train_labels.push_back(ds.labels[i]);
    }
    const auto test_idx = ds.test_indices(fold);
    for (std::size_t i : test_idx) test_raw.push_back(ds.samples[i].values);
    const auto split = dataset::normalize(train_raw, test_raw);
    const auto out = nearest_centroid(split.train, train_labels, split.test, static_cast<int>(ds.classes.size()));
    std::vector<int> predicted(ds.size(), -1);
    for (std::size_t k = 0; k < test_idx.size(); ++k) predicted[test_idx[k]] = out[k];
    return make_report(ds.classes, ds.labels, predicted, ds.sequence_length);
}

EvalReport centroid_cross_validate(const FoldedDataset& ds, Exec exec) {
    return cross_validate_with(
        ds,
        [](std::span<const std::vector<double>> train, std::span<const int> labels,
           std::span<const std::vector<double>> test, int n_classes, int) {
            return nearest_centroid(train, labels, test, n_classes);
        },
        exec);
}

std::vector<std::size_t> default_convergence_sizes() {
    std::vector<std::size_t> sizes;
    for (std::size_t s = 10; s <= 300; s += 10) sizes.push_back(s);
    return sizes;
}

std::vector<ConvergencePoint> convergence_curve(std::span<const dataset::TimingSequenceSample> samples,
                                                const CnnConfig& cfg, std::span<const std::size_t> sizes,
                                                std::uint64_t seed, Exec exec) {
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);
    std::size_t k_min = by_class.empty() ? 0 : samples.size();
    for (const auto& [_, idx] : by_class) k_min = std::min(k_min, idx.size());

    std::vector<std::size_t> usable;
    for (std::size_t s : sizes) {
        if (s >= static_cast<std::size_t>(dataset::kFolds) && s <= k_min) usable.push_back(s);
    }
    std::vector<ConvergencePoint> points(usable.size());
    auto run = [&](std::size_t p, Exec inner) {
        const std::size_t s = usable[p];
        std::vector<dataset::TimingSequenceSample> subset;
        std::uint64_t c = 0;
        for (const auto& [_, idx] : by_class) {
            auto shuffled = idx;
            Rng rng(derive_seed(seed, {s, c++}));
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            shuffled.resize(s);
            std::sort(shuffled.begin(), shuffled.end());
            for (std::size_t i : shuffled) subset.push_back(samples[i]);
        }
        const auto ds = dataset::make_folds(std::move(subset), seed);
        points[p] = {s, cross_validate(ds, cfg, inner).overall_accuracy};
    };
    if (exec == Exec::parallel) {
        std::exception_ptr error;
        const auto n = static_cast<std::ptrdiff_t>(usable.size());
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t p = 0; p < n; ++p) {
            try {
                run(static_cast<std::size_t>(p), Exec::serial);
            } catch (...) {
#pragma omp critical(dnt_conv_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (std::size_t p = 0; p < usable.size(); ++p) run(p, Exec::serial);
    }
    return points;
}

}  // namespace dnt::classifier
