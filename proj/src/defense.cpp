#include "dnt/defense.hpp"

#include <cstdio>

#include "dnt/errors.hpp"
#include "dnt/rng.hpp"

namespace dnt::defense {

namespace {

void perturb_in_place(NotificationRtts& r, std::uniform_real_distribution<double>& dist, Rng& rng) {
    r.rtt_sr += dist(rng);
    if (r.rtt_sm) r.rtt_mr = r.rtt_sr - *r.rtt_sm;
}

void check_delay(double d_max) {
    if (!(d_max >= 0.0)) throw ConfigError("max delay must be >= 0");
}

}  // namespace

std::vector<NotificationRtts> perturb(std::span<const NotificationRtts> records, double d_max, std::uint64_t seed) {
    check_delay(d_max);
    std::vector<NotificationRtts> out(records.begin(), records.end());
    if (d_max == 0.0) return out;
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(0.0, d_max);
    for (auto& r : out) perturb_in_place(r, dist, rng);
    return out;
}

std::vector<dataset::RecordGroup> perturb_groups(std::span<const dataset::RecordGroup> groups, double d_max,
                                                 std::uint64_t seed) {
    check_delay(d_max);
    std::vector<dataset::RecordGroup> out(groups.begin(), groups.end());
    if (d_max == 0.0) return out;
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(0.0, d_max);
    for (auto& g : out) {
        for (auto& r : g.records) perturb_in_place(r, dist, rng);
    }
    return out;
}

DelaySweepResult sweep(std::span<const dataset::RecordGroup> groups, const SweepConfig& cfg, Exec exec) {
    if (cfg.min_delay_s < 0 || cfg.max_delay_s < cfg.min_delay_s) {
        throw ConfigError("delay range: expected 0 <= min <= max");
    }
    cfg.cnn.validate();
    const int n_points = cfg.max_delay_s - cfg.min_delay_s + 1;
    DelaySweepResult result;
    result.points.resize(static_cast<std::size_t>(n_points));

    auto run_point = [&](int p) {
        const int d = cfg.min_delay_s + p;
        const auto perturbed = perturb_groups(groups, d, derive_seed(cfg.seed, {static_cast<std::uint64_t>(d)}));
        auto built = dataset::build_sequences(perturbed, cfg.sequence_length, cfg.feature);
        auto balanced = dataset::balance_classes(built.samples, cfg.seed);
        const auto ds = dataset::make_folds(std::move(balanced), cfg.seed);
        result.points[static_cast<std::size_t>(p)] = {d, classifier::cross_validate(ds, cfg.cnn, Exec::serial).overall_accuracy};
    };

    // Class count does not depend on the delay.
    const auto base = dataset::build_sequences(groups, cfg.sequence_length, cfg.feature);
    const auto classes = dataset::class_labels(base.samples);
    if (classes.empty()) throw ConfigError("sweep: no usable sequences");
    result.chance_level = 1.0 / static_cast<double>(classes.size());

    if (exec == Exec::parallel) {
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
        for (int p = 0; p < n_points; ++p) {
            try {
                run_point(p);
            } catch (...) {
#pragma omp critical(dnt_sweep_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (int p = 0; p < n_points; ++p) run_point(p);
    }
    return result;
}

double trend_slope(const DelaySweepResult& result) {
    const auto n = static_cast<double>(result.points.size());
    if (result.points.size() < 2) return 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : result.points) {
        sx += p.max_delay_s;
        sy += p.overall_accuracy;
    }
    const double mx = sx / n;
    const double my = sy / n;
    double num = 0.0;
    double den = 0.0;
    for (const auto& p : result.points) {
        num += (p.max_delay_s - mx) * (p.overall_accuracy - my);
        den += (p.max_delay_s - mx) * (p.max_delay_s - mx);
    }
    return den > 0.0 ? num / den : 0.0;
}

std::string sweep_csv(const DelaySweepResult& result) {
    std::string out = std::string(kSweepHeader) + "\n";
    char buf[96];
    for (const auto& p : result.points) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", p.max_delay_s, p.overall_accuracy, result.chance_level);
        out += buf;
    }
    return out;
}

}  // namespace dnt::defense
