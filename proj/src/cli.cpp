#include "dnt/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <ostream>

#include "dnt/classifier.hpp"
#include "dnt/csv.hpp"
#include "dnt/dataset.hpp"
#include "dnt/defense.hpp"
#include "dnt/errors.hpp"
#include "dnt/geo.hpp"
#include "dnt/netsim.hpp"
#include "dnt/stats_report.hpp"
#include "dnt/trace_extract.hpp"

namespace dnt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Provenance record written next to every run's outputs.
class Manifest {
public:
    explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)), start_(utc_now()) {}

    void config(const std::string& path) {
        if (!path.empty()) configs_.push_back(path);
    }
    void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
    void input(const fs::path& p) { inputs_.push_back(p.string()); }
    void output(const fs::path& p) { outputs_.push_back(p.string()); }

    void write(const fs::path& path) {
        output(path);
        json j;
        j["subcommand"] = subcommand_;
        j["tool_version"] = kToolVersion;
        j["config_paths"] = configs_;
        j["seeds"] = seeds_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        j["start_time"] = start_;
        j["end_time"] = utc_now();
        csv::write_file(path, j.dump(2) + "\n");
    }

private:
    std::string subcommand_;
    std::string start_;
    std::vector<std::string> configs_;
    std::map<std::string, std::uint64_t> seeds_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
};

fs::path manifest_for(const fs::path& out_file) { return fs::path(out_file.string() + ".manifest.json"); }

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

ProfileSet resolve_profiles(const std::string& path) {
    return path.empty() ? default_profiles() : load_profiles(path);
}

/// Options shared by every command that turns RTT records into sequences.
struct SequenceOptions {
    std::string rtts;
    std::string labels;
    int n = 5;
    std::string feature = "auto";
    double iteration_gap = 25.0;
};

void add_sequence_options(CLI::App* cmd, SequenceOptions& o, bool required) {
    cmd->add_option("--rtts", o.rtts, "Extraction CSV (trace_id,message_t,rtt_sm,rtt_sr,rtt_mr)")->required(required);
    cmd->add_option("--labels", o.labels, "Receiver label CSV (receiver,label,network_type)")->required(required);
    cmd->add_option("--n", o.n, "Sequence length 1..5")->check(CLI::Range(1, 5));
    cmd->add_option("--feature", o.feature, "auto | rtt_mr | rtt_sr")->check(CLI::IsMember({"auto", "rtt_mr", "rtt_sr"}));
    cmd->add_option("--iteration-gap", o.iteration_gap, "Gap (s) separating measurement iterations");
}

std::map<std::string, std::string> load_labels(const fs::path& path) {
    std::map<std::string, std::string> out;
    for (const auto& row : csv::read(path, "receiver,label,network_type")) {
        if (row.fields[0].empty() || row.fields[1].empty()) {
            throw ParseError(path.string(), row.line, "", "receiver and label must be non-empty");
        }
        out[row.fields[0]] = row.fields[1];
    }
    return out;
}

std::vector<dataset::RecordGroup> load_groups(const SequenceOptions& o) {
    const auto labels = load_labels(o.labels);
    std::map<std::string, std::vector<NotificationRtts>> per_trace;
    for (auto& r : read_extraction_csv(o.rtts)) per_trace[r.trace_id].push_back(r.rtts);
    std::vector<dataset::RecordGroup> groups;
    for (auto& [trace_id, records] : per_trace) {
        const auto it = labels.find(trace_id);
        if (it == labels.end()) throw ConfigError("labels: no label for trace '" + trace_id + "'");
        std::stable_sort(records.begin(), records.end(),
                         [](const auto& a, const auto& b) { return a.message_t < b.message_t; });
        auto g = dataset::group_iterations(trace_id, it->second, records, o.iteration_gap);
        groups.insert(groups.end(), std::make_move_iterator(g.begin()), std::make_move_iterator(g.end()));
    }
    return groups;
}

/// Fills options not given on the command line from a JSON file with keys n, feature, iteration_gap.
void apply_sequence_config(const std::string& path, const CLI::App* cmd, SequenceOptions& o) {
    if (path.empty()) return;
    json j;
    try {
        j = json::parse(csv::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path + ": expected object");
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "n") {
                if (cmd->count("--n") == 0) o.n = val.get<int>();
            } else if (key == "feature") {
                if (cmd->count("--feature") == 0) o.feature = val.get<std::string>();
            } else if (key == "iteration_gap") {
                if (cmd->count("--iteration-gap") == 0) o.iteration_gap = val.get<double>();
            } else {
                throw ConfigError(path + ": " + key + ": unknown field");
            }
        } catch (const json::exception&) {
            throw ConfigError(path + ": " + key + ": wrong type");
        }
    }
    if (o.n < 1 || o.n > dataset::kMaxSequenceLength) throw ConfigError(path + ": n: must be in [1, 5]");
    if (o.feature != "auto") dataset::parse_feature(o.feature);
    if (!(o.iteration_gap > 0.0)) throw ConfigError(path + ": iteration_gap: must be > 0");
}

dataset::Feature resolve_feature(const SequenceOptions& o, const std::vector<dataset::RecordGroup>& groups) {
    return o.feature == "auto" ? dataset::infer_feature(groups) : dataset::parse_feature(o.feature);
}

classifier::CnnConfig load_cnn(const std::string& path) {
    if (path.empty()) return {};
    return classifier::CnnConfig::from_json(csv::read_file(path), path);
}

std::vector<dataset::TimingSequenceSample> build_balanced(const SequenceOptions& o, std::uint64_t seed,
                                                          dataset::Feature* feature_out, std::ostream& err) {
    const auto groups = load_groups(o);
    const auto feature = resolve_feature(o, groups);
    if (feature_out) *feature_out = feature;
    auto built = dataset::build_sequences(groups, o.n, feature);
    if (built.skipped) err << "dataset: skipped " << built.skipped << " iterations with fewer than " << o.n << " usable messages\n";
    if (built.samples.empty()) throw ConfigError("dataset: no usable sequences");
    return dataset::balance_classes(built.samples, seed);
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string profiles;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
    Manifest manifest("simulate");
    manifest.config(a.config);
    manifest.config(a.profiles);
    auto cfg = netsim::load_scenario(a.config, resolve_profiles(a.profiles));
    if (a.seed) cfg.rng_seed = *a.seed;
    manifest.seed("rng_seed", cfg.rng_seed);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    const auto runs = netsim::run_scenario(cfg);

    std::vector<const netsim::ReceiverRun*> order;
    for (const auto& r : runs) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](auto* x, auto* y) { return x->receiver_id < y->receiver_id; });

    std::string receivers = "receiver,label,network_type\n";
    for (const auto* run : order) {
        const fs::path trace = dir / ("trace_" + run->receiver_id + ".jsonl");
        netsim::emit_trace(run->trace, trace);
        manifest.output(trace);
        receivers += run->receiver_id + "," + run->location_label + "," + netsim::to_string(run->network_type) + "\n";
    }
    csv::write_file(dir / "truth.csv", netsim::truth_csv(runs));
    manifest.output(dir / "truth.csv");
    csv::write_file(dir / "receivers.csv", receivers);
    manifest.output(dir / "receivers.csv");
    manifest.write(dir / "manifest.json");
    out << "simulated " << runs.size() << " receiver(s) x " << cfg.iterations << " iteration(s) into " << dir.string()
        << "\n";
    return kExitOk;
}

// ---- extract --------------------------------------------------------------

struct ExtractArgs {
    std::string traces;
    std::string profile;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

std::string trace_id_for(const fs::path& file) {
    std::string stem = file.stem().string();
    if (stem.starts_with("trace_")) stem = stem.substr(6);
    return stem;
}

int cmd_extract(const ExtractArgs& a, std::ostream& out, std::ostream& err) {
    Manifest manifest("extract");
    manifest.config(a.config);
    const auto profiles = resolve_profiles(a.config);
    const auto it = profiles.find(a.profile);
    if (it == profiles.end()) throw ConfigError("--profile: unknown messenger profile '" + a.profile + "'");
    const fs::path dir(a.traces);
    if (!fs::is_directory(dir)) throw ConfigError("--traces: not a directory: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) err << "warning: no .jsonl traces in " << dir.string() << "\n";

    std::vector<ExtractedRecord> rows;
    for (const auto& f : files) {
        manifest.input(f);
        const auto result = extract_trace_file(f, it->second);
        const std::string id = trace_id_for(f);
        err << id << ": " << result.records.size() << " matched, " << result.orphaned << " orphaned, "
            << result.ambiguous << " ambiguous\n";
        for (const auto& r : result.records) rows.push_back({id, r});
    }
    const fs::path out_path(a.out);
    ensure_parent(out_path);
    csv::write_file(out_path, extraction_csv(rows));
    manifest.output(out_path);
    manifest.write(manifest_for(out_path));
    out << "extracted " << rows.size() << " record(s) from " << files.size() << " trace(s)\n";
    return kExitOk;
}

// ---- dataset --------------------------------------------------------------

struct DatasetArgs {
    SequenceOptions seq;
    std::string out;
    std::uint64_t seed = 0;
};

int cmd_dataset(const DatasetArgs& a, std::ostream& out, std::ostream& err) {
    Manifest manifest("dataset");
    manifest.seed("seed", a.seed);
    manifest.input(a.seq.rtts);
    manifest.input(a.seq.labels);
    auto balanced = build_balanced(a.seq, a.seed, nullptr, err);
    const auto ds = dataset::make_folds(balanced, a.seed);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    csv::write_file(dir / "dataset.csv", dataset::dataset_csv(ds.samples));
    csv::write_file(dir / "folds.csv", dataset::folds_csv(ds));
    manifest.output(dir / "dataset.csv");
    manifest.output(dir / "folds.csv");
    manifest.write(dir / "manifest.json");
    out << "dataset: " << ds.size() << " samples, " << ds.classes.size() << " classes, n=" << ds.sequence_length << "\n";
    return kExitOk;
}

// ---- classify -------------------------------------------------------------

struct ClassifyArgs {
    SequenceOptions seq;
    std::string dataset_dir;
    std::string config;
    std::string out;
    std::string method = "cnn";
    std::string convergence;
    std::optional<std::uint64_t> seed;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream& err) {
    Manifest manifest("classify");
    manifest.config(a.config);
    auto cnn = load_cnn(a.config);
    if (a.seed) cnn.seed = *a.seed;
    const std::uint64_t seed = cnn.seed;
    manifest.seed("seed", seed);

    dataset::FoldedDataset ds;
    std::vector<dataset::TimingSequenceSample> balanced;
    if (!a.dataset_dir.empty()) {
        const fs::path dir(a.dataset_dir);
        manifest.input(dir / "dataset.csv");
        balanced = dataset::read_dataset_csv(dir / "dataset.csv");
        if (balanced.empty()) throw ConfigError("--dataset: no samples in " + (dir / "dataset.csv").string());
        if (fs::exists(dir / "folds.csv")) {
            manifest.input(dir / "folds.csv");
            ds = dataset::with_folds(balanced, dataset::read_folds_csv(dir / "folds.csv", balanced.size()));
        } else {
            ds = dataset::make_folds(balanced, seed);
        }
    } else {
        if (a.seq.rtts.empty() || a.seq.labels.empty()) throw ConfigError("classify: give --dataset or --rtts and --labels");
        manifest.input(a.seq.rtts);
        manifest.input(a.seq.labels);
        balanced = build_balanced(a.seq, seed, nullptr, err);
        ds = dataset::make_folds(balanced, seed);
    }

    classifier::EvalReport report;
    std::string config_echo;
    if (a.method == "cnn") {
        report = classifier::cross_validate(ds, cnn);
        config_echo = cnn.to_json();
    } else {
        report = classifier::centroid_cross_validate(ds);
    }
    const fs::path out_path(a.out);
    ensure_parent(out_path);
    csv::write_file(out_path, report.to_json(a.method, config_echo, seed));
    manifest.output(out_path);

    if (!a.convergence.empty()) {
        const auto sizes = classifier::default_convergence_sizes();
        const auto curve = classifier::convergence_curve(balanced, cnn, sizes, seed);
        std::string text = "samples_per_class,overall_accuracy\n";
        char buf[64];
        for (const auto& p : curve) {
            std::snprintf(buf, sizeof buf, "%zu,%.6f\n", p.samples_per_class, p.overall_accuracy);
            text += buf;
        }
        ensure_parent(a.convergence);
        csv::write_file(a.convergence, text);
        manifest.output(a.convergence);
    }
    manifest.write(manifest_for(out_path));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", report.overall_accuracy);
    out << a.method << ": overall accuracy " << buf << " on " << report.n_samples << " samples, "
        << report.classes.size() << " classes\n";
    return kExitOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
    SequenceOptions seq;
    std::string config;
    std::string out;
    int d_min = 0;
    int d_max = 20;
    std::optional<std::uint64_t> seed;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream&) {
    Manifest manifest("sweep");
    manifest.config(a.config);
    manifest.input(a.seq.rtts);
    manifest.input(a.seq.labels);
    defense::SweepConfig cfg;
    cfg.cnn = load_cnn(a.config);
    if (a.seed) cfg.cnn.seed = *a.seed;
    cfg.seed = cfg.cnn.seed;
    cfg.sequence_length = a.seq.n;
    cfg.min_delay_s = a.d_min;
    cfg.max_delay_s = a.d_max;
    manifest.seed("seed", cfg.seed);
    const auto groups = load_groups(a.seq);
    cfg.feature = resolve_feature(a.seq, groups);
    const auto result = defense::sweep(groups, cfg);
    const fs::path out_path(a.out);
    ensure_parent(out_path);
    csv::write_file(out_path, defense::sweep_csv(result));
    manifest.output(out_path);
    manifest.write(manifest_for(out_path));
    out << "sweep: " << result.points.size() << " points, slope " << defense::trend_slope(result) << "\n";
    return kExitOk;
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
    SequenceOptions seq;
    std::string out;
    std::string hourly;
    std::int64_t start_epoch = 0;
    double utc_offset_h = 0.0;
    std::string servers;
    std::string sender;
    std::string locations;
    std::string distance_out;
    std::optional<std::uint64_t> seed;
};

int cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream&) {
    Manifest manifest("stats");
    manifest.input(a.seq.rtts);
    manifest.input(a.seq.labels);
    const auto groups = load_groups(a.seq);
    if (groups.empty()) throw ConfigError("stats: no records in " + a.seq.rtts);
    const auto feature = resolve_feature(a.seq, groups);
    std::map<std::string, std::vector<double>> by_label;
    std::vector<stats::TimedValue> timed;
    for (const auto& g : groups) {
        for (const auto& r : g.records) {
            const double v = feature == dataset::Feature::rtt_mr ? r.rtt_mr.value() : r.rtt_sr;
            by_label[g.label].push_back(v);
            timed.push_back({g.label, a.start_epoch + static_cast<std::int64_t>(std::floor(r.message_t)), v});
        }
    }
    const auto summaries = stats::summarize(by_label);
    const fs::path out_path(a.out);
    ensure_parent(out_path);
    csv::write_file(out_path, stats::summary_csv(summaries));
    manifest.output(out_path);

    if (!a.hourly.empty()) {
        const auto buckets = stats::hour_of_day_breakdown(timed, static_cast<std::int64_t>(std::llround(a.utc_offset_h * 3600)));
        ensure_parent(a.hourly);
        csv::write_file(a.hourly, stats::hourly_csv(buckets));
        manifest.output(a.hourly);
    }
    if (!a.servers.empty()) {
        if (a.sender.empty() || a.locations.empty() || a.distance_out.empty()) {
            throw ConfigError("stats: --servers needs --sender, --locations and --distance-out");
        }
        const auto iata = geo::IataTable::bundled();
        const auto servers = geo::load_server_table(a.servers, &iata);
        const auto sender = geo::parse_location(a.sender, iata);
        if (!sender) throw ConfigError("--sender: unresolvable location '" + a.sender + "'");
        std::map<std::string, geo::GeoPoint> receivers;
        for (const auto& row : csv::read(a.locations, "label,location")) {
            const auto p = geo::parse_location(row.fields[1], iata);
            if (!p) throw ConfigError("--locations: unresolvable location for '" + row.fields[0] + "': " + row.fields[1]);
            receivers[row.fields[0]] = *p;
        }
        const auto table = stats::distance_timing_table(by_label, servers, *sender, receivers);
        ensure_parent(a.distance_out);
        csv::write_file(a.distance_out, stats::distance_csv(table));
        manifest.input(a.servers);
        manifest.input(a.locations);
        manifest.output(a.distance_out);
    }
    manifest.write(manifest_for(out_path));
    out << "stats: " << summaries.size() << " class(es), feature " << dataset::to_string(feature) << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Delivery-notification timing laboratory", "dntlab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate delivery pipelines and write packet traces");
    c_sim->add_option("--config", sim.config, "Scenario JSON")->required();
    c_sim->add_option("--profiles", sim.profiles, "Messenger profile JSON (defaults built in)");
    c_sim->add_option("--seed", sim.seed, "Override the scenario rng_seed");
    c_sim->add_option("--out", sim.out, "Output directory")->required();

    ExtractArgs ext;
    auto* c_ext = app.add_subcommand("extract", "Extract notification RTTs from packet traces");
    c_ext->add_option("--traces", ext.traces, "Directory of trace JSONL files")->required();
    c_ext->add_option("--profile", ext.profile, "Messenger profile name")->required();
    c_ext->add_option("--config", ext.config, "Messenger profile JSON (defaults built in)");
    c_ext->add_option("--seed", ext.seed, "Accepted for uniformity; extraction is deterministic");
    c_ext->add_option("--out", ext.out, "Output CSV")->required();

    DatasetArgs dsa;
    std::string ds_config;
    auto* c_ds = app.add_subcommand("dataset", "Build a balanced, 5-fold timing-sequence dataset");
    add_sequence_options(c_ds, dsa.seq, true);
    c_ds->add_option("--config", ds_config, "Sequence options JSON (n, feature, iteration_gap)");
    c_ds->add_option("--seed", dsa.seed, "Balancing and folding seed");
    c_ds->add_option("--out", dsa.out, "Output directory")->required();

    ClassifyArgs cls;
    auto* c_cls = app.add_subcommand("classify", "Cross-validate a classifier on timing sequences");
    add_sequence_options(c_cls, cls.seq, false);
    c_cls->add_option("--dataset", cls.dataset_dir, "Directory written by `dataset`");
    c_cls->add_option("--config", cls.config, "CNN config JSON");
    c_cls->add_option("--seed", cls.seed, "Override the CNN/balancing seed");
    c_cls->add_option("--method", cls.method, "cnn | centroid")->check(CLI::IsMember({"cnn", "centroid"}));
    c_cls->add_option("--convergence", cls.convergence, "Also write a sample-size convergence CSV");
    c_cls->add_option("--out", cls.out, "Report JSON")->required();

    SweepArgs swp;
    auto* c_swp = app.add_subcommand("sweep", "Evaluate the random-delay countermeasure");
    add_sequence_options(c_swp, swp.seq, true);
    c_swp->add_option("--config", swp.config, "CNN config JSON");
    c_swp->add_option("--seed", swp.seed, "Override the CNN/balancing seed");
    c_swp->add_option("--d-min", swp.d_min, "Smallest maximum delay (s)")->check(CLI::NonNegativeNumber);
    c_swp->add_option("--d-max", swp.d_max, "Largest maximum delay (s)")->check(CLI::NonNegativeNumber);
    c_swp->add_option("--out", swp.out, "Sweep CSV")->required();

    StatsArgs sts;
    std::string st_config;
    auto* c_sts = app.add_subcommand("stats", "Descriptive timing statistics");
    add_sequence_options(c_sts, sts.seq, true);
    c_sts->add_option("--config", st_config, "Sequence options JSON (n, feature, iteration_gap)");
    c_sts->add_option("--seed", sts.seed, "Accepted for uniformity; statistics are deterministic");
    c_sts->add_option("--hourly", sts.hourly, "Hour-of-day CSV output");
    c_sts->add_option("--start-epoch", sts.start_epoch, "Unix time of trace t = 0");
    c_sts->add_option("--utc-offset", sts.utc_offset_h, "Local time offset in hours");
    c_sts->add_option("--servers", sts.servers, "Server table CSV (messenger,address,code,lat,lon)");
    c_sts->add_option("--sender", sts.sender, "Sender location: 'lat,lon' or a location code");
    c_sts->add_option("--locations", sts.locations, "Receiver locations CSV (label,location)");
    c_sts->add_option("--distance-out", sts.distance_out, "Distance/timing table CSV");
    c_sts->add_option("--out", sts.out, "Summary CSV")->required();

    std::vector<std::string> argv_storage;
    argv_storage.push_back("dntlab");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (c_sim->parsed()) return cmd_simulate(sim, out, err);
        if (c_ext->parsed()) return cmd_extract(ext, out, err);
        if (c_ds->parsed()) {
            apply_sequence_config(ds_config, c_ds, dsa.seq);
            return cmd_dataset(dsa, out, err);
        }
        if (c_cls->parsed()) return cmd_classify(cls, out, err);
        if (c_swp->parsed()) return cmd_sweep(swp, out, err);
        if (c_sts->parsed()) {
            apply_sequence_config(st_config, c_sts, sts.seq);
            return cmd_stats(sts, out, err);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace dnt::cli
