#include "diax/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diax/align.hpp"
#include "diax/convert.hpp"
#include "diax/csv.hpp"
#include "diax/error.hpp"
#include "diax/metrics.hpp"
#include "diax/model.hpp"
#include "diax/plot.hpp"
#include "diax/synth.hpp"
#include "diax/validate.hpp"

namespace diax {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::int64_t parse_duration_seconds(const std::string& text) {
    if (text.empty()) {
        throw UsageError("empty duration");
    }
    std::int64_t value = 0;
    auto r = std::from_chars(text.data(), text.data() + text.size(), value);
    if (r.ec != std::errc{} || value <= 0) {
        throw UsageError("bad duration '" + text + "' (use e.g. 300s, 5m, 1h, 1d)");
    }
    const std::string_view unit(r.ptr, text.data() + text.size() - r.ptr);
    if (unit.empty() || unit == "s") {
        return value;
    }
    if (unit == "m") {
        return value * 60;
    }
    if (unit == "h") {
        return value * 3600;
    }
    if (unit == "d") {
        return value * 86400;
    }
    throw UsageError("bad duration unit in '" + text + "'");
}

int parse_fallback(const std::string& spec) {
    try {
        return parse_offset_spec(spec);
    } catch (const TimestampError& e) {
        throw UsageError(std::string("--fallback-offset: ") + e.what());
    }
}

TimedInstant parse_cli_timestamp(const std::string& text, int fallback) {
    try {
        return parse_timestamp(text, fallback);
    } catch (const TimestampError& e) {
        throw UsageError(e.what());
    }
}

TimedInstant parse_cli_date(const std::string& text, int fallback) {
    if (text.size() != 10) {
        throw UsageError("expected a date (YYYY-MM-DD), got '" + text + "'");
    }
    return parse_cli_timestamp(text + " 00:00:00", fallback);
}

std::vector<std::string> subject_files(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const std::string name = entry.path().filename().string();
        try {
            (void)parse_subject_filename(name);
            names.push_back(name);
        } catch (const BadFilename&) {
            if (entry.path().extension() == ".json") {
                std::cerr << "note: skipping " << name
                          << " (does not match subj_<trial>_<id>.json)\n";
            }
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

void write_output(const std::string& path, const std::string& body) {
    if (path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoFailure("cannot open " + path + " for writing");
    }
    out << body;
    if (!out) {
        throw IoFailure("write failed: " + path);
    }
}

Policy parse_policy_expr(const std::string& expr) {
    const auto colon = expr.find(':');
    const std::string kind = expr.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : expr.substr(colon + 1);
    if (kind == "linear") {
        if (arg.empty()) {
            throw UsageError("linear policy needs a gap, e.g. linear:30m");
        }
        return Policy::linear(parse_duration_seconds(arg));
    }
    if (kind == "hold") {
        return arg.empty() ? Policy::hold() : Policy::hold_limited(parse_duration_seconds(arg));
    }
    if (kind == "sum") {
        return Policy::sum();
    }
    if (kind == "integrate") {
        return Policy::integrate_rate();
    }
    throw UsageError("unknown policy '" + expr + "' (linear:<gap>, hold[:<gap>], sum, integrate)");
}

WindowSpec parse_slice(const std::string& slice, int fallback) {
    if (slice == "day") {
        return WindowSpec::by_day();
    }
    if (slice == "week") {
        return WindowSpec::by_week();
    }
    const std::string prefix = "custom:";
    if (slice.rfind(prefix, 0) == 0) {
        const std::string rest = slice.substr(prefix.size());
        const auto sep = rest.find(':');
        if (sep == std::string::npos) {
            throw UsageError("--slice custom wants custom:<YYYY-MM-DD>:<YYYY-MM-DD>");
        }
        const auto start = parse_cli_date(rest.substr(0, sep), fallback);
        const auto end = parse_cli_date(rest.substr(sep + 1), fallback);
        if (start.epoch_millis() >= end.epoch_millis()) {
            throw UsageError("--slice custom start must precede its end");
        }
        return WindowSpec::custom(start, end);
    }
    throw UsageError("--slice takes day, week, or custom:<start>:<end>");
}

struct GlobalConfig {
    int fallback_offset_minutes = 0;
    bool lenient = false;
    unsigned threads = 0;
};

// ---- validate ----

int cmd_validate(const GlobalConfig& global, const std::string& input,
                 const std::string& report_path) {
    std::string jsonl;
    std::size_t errors = 0;
    std::size_t warnings = 0;

    if (fs::is_directory(input)) {
        const DatasetValidation result =
            validate_dataset(input, global.fallback_offset_minutes, global.threads);
        jsonl = findings_to_jsonl(result);
        errors = result.summary.errors;
        warnings = result.summary.warnings;
        std::cerr << "subjects: " << result.summary.subjects << "\n"
                  << "patient-hours (cgm): " << format_number(result.summary.patient_hours)
                  << "\n";
        for (const auto& [code, count] : result.summary.by_code) {
            std::cerr << code << ": " << count << "\n";
        }
    } else {
        const ValidationReport report =
            validate_subject_file(input, global.fallback_offset_minutes);
        jsonl = findings_to_jsonl(fs::path(input).filename().string(), report);
        errors = report.errors();
        warnings = report.warnings();
    }

    if (report_path.empty()) {
        std::cout << jsonl;
    } else {
        write_output(report_path, jsonl);
    }
    std::cerr << "errors: " << errors << ", warnings: " << warnings << "\n";
    return errors == 0 ? 0 : 1;
}

// ---- convert ----

int cmd_convert(const GlobalConfig& global, const std::string& spec_path,
                const std::string& in_dir, const std::string& out_dir, bool skip_bad_rows) {
    const MappingSpec spec = load_mapping_spec_file(spec_path);

    std::vector<fs::path> csv_paths;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            csv_paths.push_back(entry.path());
        }
    }
    std::sort(csv_paths.begin(), csv_paths.end());
    std::vector<SourceTable> tables;
    tables.reserve(csv_paths.size());
    for (const auto& p : csv_paths) {
        tables.push_back(load_csv_file(p));
    }

    ConversionOptions options;
    options.skip_bad_rows = skip_bad_rows;
    options.fallback_offset_minutes = global.fallback_offset_minutes;
    const ConversionResult result = convert_tables(tables, spec, options);

    for (const auto& warning : result.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    if (result.skipped_rows > 0) {
        std::cerr << "skipped rows: " << result.skipped_rows << "\n";
    }

    fs::create_directories(out_dir);
    const std::string prefix = spec.trial_name + "-";
    for (const auto& record : result.records) {
        const std::string id = record.unique_id.substr(prefix.size());
        const fs::path out = fs::path(out_dir) / format_subject_filename(spec.trial_name, id);
        write_subject_file(out, record);
    }
    std::cerr << "wrote " << result.records.size() << " subject files to " << out_dir << "\n";
    return 0;
}

// ---- synth ----

int cmd_synth(std::uint64_t seed, int count, int days, int step, const SyntheticProfile& profile,
              const std::string& out) {
    if (count < 1) {
        throw UsageError("--count must be >= 1");
    }
    const auto generate = [&](std::uint64_t s) {
        try {
            return generate_synthetic(s, days, step, profile);
        } catch (const BadProfile& e) {
            throw UsageError(e.what()); // bad values came from flags
        }
    };
    if (count > 1 || fs::is_directory(out)) {
        fs::create_directories(out);
        for (int i = 0; i < count; ++i) {
            const std::uint64_t s = seed + std::uint64_t(i);
            write_subject_file(fs::path(out) /
                                   format_subject_filename("Synth", std::to_string(s)),
                               generate(s));
        }
        std::cerr << "wrote " << count << " synthetic subjects to " << out << "\n";
    } else {
        write_output(out, write_subject(generate(seed)));
    }
    return 0;
}

// ---- align ----

int cmd_align(const GlobalConfig& global, const std::string& in, const std::string& start_text,
              const std::string& end_text, const std::string& step_text,
              const std::string& preset_name, const std::vector<std::string>& policy_exprs,
              const std::vector<std::string>& keys, const std::string& out) {
    const SubjectRecord record = read_subject_file(in, global.fallback_offset_minutes);

    AlignOptions options;
    options.strict = !global.lenient;
    options.keys = keys;
    std::int64_t default_step = 300;
    if (preset_name == "replay") {
        options.preset = AlignPreset::Replay;
    } else if (preset_name == "advisor") {
        options.preset = AlignPreset::Advisor;
        default_step = 900;
    } else if (preset_name == "custom" || preset_name.empty()) {
        options.preset = AlignPreset::Custom;
    } else {
        throw UsageError("--preset takes replay, advisor, or custom");
    }
    for (const auto& expr : policy_exprs) {
        const auto eq = expr.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError("--policy wants key=policy, e.g. cgm=linear:30m");
        }
        options.policies.emplace(expr.substr(0, eq), parse_policy_expr(expr.substr(eq + 1)));
    }

    const std::int64_t step =
        step_text.empty() ? default_step : parse_duration_seconds(step_text);
    const Signal* cgm = record.find_signal("cgm");
    TimedInstant start, end;
    if (!start_text.empty()) {
        start = parse_cli_timestamp(start_text, global.fallback_offset_minutes);
    } else if (cgm != nullptr && !cgm->times.empty()) {
        start = full_span(*cgm).start;
    } else {
        throw EmptySignal("no cgm samples and no --start given");
    }
    if (!end_text.empty()) {
        end = parse_cli_timestamp(end_text, global.fallback_offset_minutes);
    } else if (cgm != nullptr && !cgm->times.empty()) {
        end = advance(full_span(*cgm).end, step - 1); // include the last sample's point
    } else {
        throw EmptySignal("no cgm samples and no --end given");
    }

    const AlignedFrame frame = align_subject(record, make_grid(start, end, step), options);
    write_output(out, frame_to_csv(frame));
    return 0;
}

// ---- metrics ----

MetricsConfig metrics_config_from_flags(const RangeThresholds& thresholds, const GmiFormula& gmi,
                                        double nominal_period, bool duration_weighted) {
    MetricsConfig config;
    config.thresholds = thresholds;
    config.gmi = gmi;
    config.nominal_period_seconds = nominal_period;
    config.duration_weighted = duration_weighted;
    return config;
}

int cmd_metrics(const GlobalConfig& global, const std::string& input, const std::string& slice,
                const std::string& out, const std::string& cohort_out,
                const MetricsConfig& config) {
    const WindowSpec spec = parse_slice(slice, global.fallback_offset_minutes);

    std::string csv = reports_csv_header();
    std::vector<GlycemicReport> cohort;

    auto add_subject = [&](const fs::path& file) {
        const SubjectRecord record =
            read_subject_file(file, global.fallback_offset_minutes);
        for (const auto& report : outcomes_over_time(record, spec, config)) {
            csv += report_csv_row(record.unique_id, report);
        }
        const Signal& cgm = *record.find_signal("cgm");
        cohort.push_back(glycemic_summary(cgm, full_span(cgm), config));
    };

    if (fs::is_directory(input)) {
        for (const auto& name : subject_files(input)) {
            add_subject(fs::path(input) / name);
        }
        if (cohort.empty()) {
            throw EmptyCohort("no subject files in " + input);
        }
    } else {
        add_subject(input);
    }

    write_output(out, csv);

    if (!cohort_out.empty()) {
        std::string agg_csv = "metric,mean,median,q1,q3,n\n";
        for (const auto& [name, stat] : cohort_aggregate(cohort)) {
            agg_csv += name;
            agg_csv += ',';
            agg_csv += std::isnan(stat.mean) ? "" : format_number(stat.mean);
            agg_csv += ',';
            agg_csv += std::isnan(stat.median) ? "" : format_number(stat.median);
            agg_csv += ',';
            agg_csv += std::isnan(stat.q1) ? "" : format_number(stat.q1);
            agg_csv += ',';
            agg_csv += std::isnan(stat.q3) ? "" : format_number(stat.q3);
            agg_csv += ',';
            agg_csv += std::to_string(stat.n);
            agg_csv += '\n';
        }
        write_output(cohort_out, agg_csv);
    }
    std::cerr << "subjects: " << cohort.size() << "\n";
    return 0;
}

// ---- agp ----

int cmd_agp(const GlobalConfig& global, const std::string& in, const std::string& bin_text,
            const std::string& out) {
    const SubjectRecord record = read_subject_file(in, global.fallback_offset_minutes);
    const Signal& cgm = *record.find_signal("cgm");
    const std::int64_t bin_seconds = parse_duration_seconds(bin_text);
    if (bin_seconds % 60 != 0) {
        throw UsageError("--bin must be whole minutes");
    }
    const AgpProfile profile = agp_profile(cgm, full_span(cgm), int(bin_seconds / 60));
    write_output(out, agp_to_csv(profile));
    return 0;
}

int cmd_agp_plot(const GlobalConfig& global, const std::string& in, const std::string& weeks,
                 const std::string& bin_text, const std::string& out) {
    const SubjectRecord record = read_subject_file(in, global.fallback_offset_minutes);
    const Signal& cgm = *record.find_signal("cgm");
    const std::int64_t bin_seconds = parse_duration_seconds(bin_text);
    if (bin_seconds % 60 != 0) {
        throw UsageError("--bin must be whole minutes");
    }
    const int bin_minutes = int(bin_seconds / 60);

    std::vector<AgpProfile> profiles;
    PlotStyle style;
    if (weeks.empty()) {
        profiles.push_back(agp_profile(cgm, full_span(cgm), bin_minutes));
    } else {
        std::vector<std::string> starts;
        std::size_t pos = 0;
        while (pos <= weeks.size()) {
            const std::size_t comma = weeks.find(',', pos);
            starts.push_back(weeks.substr(pos, comma - pos));
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
        if (starts.empty() || starts.size() > 2) {
            throw UsageError("--weeks takes one or two start dates");
        }
        for (const auto& day : starts) {
            const TimedInstant start = parse_cli_date(day, global.fallback_offset_minutes);
            const Window window{start, advance(start, 7 * 86400), false};
            profiles.push_back(agp_profile(cgm, window, bin_minutes));
            style.labels.push_back("week of " + day);
        }
    }
    write_output(out, render_agp(profiles, style));
    return 0;
}

int cmd_outcomes_plot(const GlobalConfig& global, const std::string& in, const std::string& slice,
                      const std::string& metrics_text, const std::string& out,
                      const MetricsConfig& config) {
    const SubjectRecord record = read_subject_file(in, global.fallback_offset_minutes);
    const WindowSpec spec = parse_slice(slice, global.fallback_offset_minutes);

    std::vector<std::string> metrics;
    std::size_t pos = 0;
    while (pos <= metrics_text.size()) {
        const std::size_t comma = metrics_text.find(',', pos);
        const std::string name = metrics_text.substr(pos, comma - pos);
        if (!name.empty()) {
            metrics.push_back(name);
        }
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }

    const auto reports = outcomes_over_time(record, spec, config);
    write_output(out, render_outcomes(reports, metrics));
    return 0;
}

// ---- info ----

void info_one(const fs::path& file, int fallback, double& patient_hours) {
    const SubjectRecord record = read_subject_file(file, fallback);
    std::cout << record.unique_id << "\n";
    for (const auto& [key, sig] : record.signals) {
        std::cout << "  " << key << ": " << sig.size() << " samples";
        if (!sig.times.empty()) {
            const Window span = full_span(sig);
            std::cout << ", " << format_timestamp(span.start) << " .. "
                      << format_timestamp(advance_millis(span.end, -1));
        }
        std::cout << "\n";
    }
    const Signal* cgm = record.find_signal("cgm");
    if (cgm != nullptr && !cgm->times.empty()) {
        const Window span = full_span(*cgm);
        const double hours =
            double(span.end.epoch_millis() - 1 - span.start.epoch_millis()) / 3.6e6;
        patient_hours += hours;
        std::cout << "  patient-hours (cgm): " << format_number(hours) << "\n";
    }
}

int cmd_info(const GlobalConfig& global, const std::string& input) {
    double patient_hours = 0.0;
    if (fs::is_directory(input)) {
        const auto names = subject_files(input);
        for (const auto& name : names) {
            info_one(fs::path(input) / name, global.fallback_offset_minutes, patient_hours);
        }
        std::cout << "subjects: " << names.size() << "\n";
        std::cout << "total patient-hours (cgm): " << format_number(patient_hours) << "\n";
    } else {
        info_one(input, global.fallback_offset_minutes, patient_hours);
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"DIAX diabetes time-series toolkit"};
    app.require_subcommand(1);

    std::string fallback_spec = "+00:00";
    GlobalConfig global;
    app.add_option("--fallback-offset", fallback_spec,
                   "offset applied to naive timestamps (+HH:MM, -HH:MM, or Z)")
        ->capture_default_str();
    app.add_flag("--lenient", global.lenient, "tolerate unknown keys and skippable problems");
    app.add_option("--threads", global.threads, "worker threads for directory inputs (0 = auto)");

    // validate
    auto* validate = app.add_subcommand("validate", "check files against the schema");
    validate->fallthrough();
    std::string validate_input;
    std::string validate_report;
    validate->add_option("input", validate_input, "subject file or dataset directory")
        ->required();
    validate->add_option("--report", validate_report, "write findings JSONL here (default stdout)");

    // convert
    auto* convert = app.add_subcommand("convert", "convert tabular exports using a mapping spec");
    convert->fallthrough();
    std::string convert_spec, convert_in, convert_out;
    bool skip_bad_rows = false;
    convert->add_option("--spec", convert_spec, "mapping spec JSON")->required();
    convert->add_option("--in", convert_in, "directory of CSV tables")->required();
    convert->add_option("--out", convert_out, "output directory for subject files")->required();
    convert->add_flag("--skip-bad-rows", skip_bad_rows, "skip unparseable rows and report counts");

    // synth
    auto* synth = app.add_subcommand("synth", "generate deterministic synthetic subjects");
    synth->fallthrough();
    std::uint64_t seed = 1;
    int synth_count = 1;
    int synth_days = 14;
    int synth_step = 5;
    SyntheticProfile profile;
    std::string synth_out;
    synth->add_option("--seed", seed, "generator seed")->required();
    synth->add_option("--days", synth_days, "days of data")->required();
    synth->add_option("--step", synth_step, "cgm cadence in minutes (1, 5, or 15)")
        ->capture_default_str();
    synth->add_option("--count", synth_count, "number of subjects (seeds seed..seed+count-1)")
        ->capture_default_str();
    synth->add_option("--basal", profile.basal_u_per_h, "basal rate level (U/h)")
        ->capture_default_str();
    synth->add_option("--meals", profile.meals_per_day, "meals per day")->capture_default_str();
    synth->add_option("--cgm-mean", profile.cgm_mean, "cgm mean (mg/dL)")->capture_default_str();
    synth->add_option("--cgm-amplitude", profile.cgm_amplitude, "cgm daily swing (mg/dL)")
        ->capture_default_str();
    synth->add_option("--out", synth_out, "output file, directory, or - for stdout")->required();

    // align
    auto* align = app.add_subcommand("align", "resample signals onto a uniform grid");
    align->fallthrough();
    std::string align_in, align_start, align_end, align_step, align_preset = "custom", align_out;
    std::vector<std::string> align_policies, align_keys;
    align->add_option("--in", align_in, "subject file")->required();
    align->add_option("--start", align_start, "grid start (defaults to first cgm sample)");
    align->add_option("--end", align_end, "grid end, exclusive (defaults past last cgm sample)");
    align->add_option("--step", align_step, "grid step (e.g. 5m; preset default otherwise)");
    align->add_option("--preset", align_preset, "replay, advisor, or custom")
        ->capture_default_str();
    align->add_option("--policy", align_policies,
                      "per-key policy override, e.g. cgm=linear:30m (repeatable)");
    align->add_option("--key", align_keys, "limit to these signal keys (repeatable)");
    align->add_option("--out", align_out, "frame CSV path or -")->required();

    // shared metric configuration
    RangeThresholds thresholds;
    GmiFormula gmi;
    double nominal_period = 0.0;
    bool duration_weighted = false;
    const auto add_metric_flags = [&](CLI::App* cmd) {
        cmd->add_option("--very-low", thresholds.very_low, "very-low threshold (mg/dL)")
            ->capture_default_str();
        cmd->add_option("--low", thresholds.low, "low threshold (mg/dL)")->capture_default_str();
        cmd->add_option("--high", thresholds.high, "high threshold (mg/dL)")
            ->capture_default_str();
        cmd->add_option("--very-high", thresholds.very_high, "very-high threshold (mg/dL)")
            ->capture_default_str();
        cmd->add_option("--gmi-intercept", gmi.intercept, "gmi formula intercept")
            ->capture_default_str();
        cmd->add_option("--gmi-slope", gmi.slope, "gmi formula slope")->capture_default_str();
        cmd->add_option("--nominal-period", nominal_period,
                        "sampling period in seconds for wear time (0 = median gap)")
            ->capture_default_str();
        cmd->add_flag("--duration-weighted", duration_weighted,
                      "weight ranges by sample-to-next time instead of counting");
    };

    // metrics
    auto* metrics = app.add_subcommand("metrics", "windowed glycemic metrics as CSV");
    metrics->fallthrough();
    std::string metrics_in, metrics_slice = "day", metrics_out, metrics_cohort;
    metrics->add_option("--in", metrics_in, "subject file or dataset directory")->required();
    metrics->add_option("--slice", metrics_slice, "day, week, or custom:<date>:<date>")
        ->capture_default_str();
    metrics->add_option("--out", metrics_out, "report CSV path or -")->required();
    metrics->add_option("--cohort", metrics_cohort, "also write cohort aggregate CSV here");
    add_metric_flags(metrics);

    // agp
    auto* agp = app.add_subcommand("agp", "time-of-day percentile profile as CSV");
    agp->fallthrough();
    std::string agp_in, agp_bin = "5m", agp_out;
    agp->add_option("--in", agp_in, "subject file")->required();
    agp->add_option("--bin", agp_bin, "bin width (divides 24h)")->capture_default_str();
    agp->add_option("--out", agp_out, "profile CSV path or -")->required();

    // agp-plot
    auto* agp_plot = app.add_subcommand("agp-plot", "AGP figure as standalone SVG");
    agp_plot->fallthrough();
    std::string plot_in, plot_weeks, plot_bin = "5m", plot_out;
    agp_plot->add_option("--in", plot_in, "subject file")->required();
    agp_plot->add_option("--weeks", plot_weeks,
                         "one or two week-start dates to compare (YYYY-MM-DD[,YYYY-MM-DD])");
    agp_plot->add_option("--bin", plot_bin, "bin width")->capture_default_str();
    agp_plot->add_option("--out", plot_out, "SVG path or -")->required();

    // outcomes-plot
    auto* outcomes_plot = app.add_subcommand("outcomes-plot", "metric series as standalone SVG");
    outcomes_plot->fallthrough();
    std::string oplot_in, oplot_slice = "day", oplot_metrics = "tir", oplot_out;
    outcomes_plot->add_option("--in", oplot_in, "subject file")->required();
    outcomes_plot->add_option("--slice", oplot_slice, "day, week, or custom:<date>:<date>")
        ->capture_default_str();
    outcomes_plot->add_option("--metrics", oplot_metrics, "comma-separated metric names")
        ->capture_default_str();
    outcomes_plot->add_option("--out", oplot_out, "SVG path or -")->required();
    add_metric_flags(outcomes_plot);

    // info
    auto* info = app.add_subcommand("info", "summarize subject files");
    info->fallthrough();
    std::string info_in;
    info->add_option("input", info_in, "subject file or dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return 2;
    }

    try {
        global.fallback_offset_minutes = parse_fallback(fallback_spec);
        const MetricsConfig metrics_config =
            metrics_config_from_flags(thresholds, gmi, nominal_period, duration_weighted);

        if (app.got_subcommand(validate)) {
            return cmd_validate(global, validate_input, validate_report);
        }
        if (app.got_subcommand(convert)) {
            return cmd_convert(global, convert_spec, convert_in, convert_out, skip_bad_rows);
        }
        if (app.got_subcommand(synth)) {
            return cmd_synth(seed, synth_count, synth_days, synth_step, profile, synth_out);
        }
        if (app.got_subcommand(align)) {
            return cmd_align(global, align_in, align_start, align_end, align_step, align_preset,
                             align_policies, align_keys, align_out);
        }
        if (app.got_subcommand(metrics)) {
            return cmd_metrics(global, metrics_in, metrics_slice, metrics_out, metrics_cohort,
                               metrics_config);
        }
        if (app.got_subcommand(agp)) {
            return cmd_agp(global, agp_in, agp_bin, agp_out);
        }
        if (app.got_subcommand(agp_plot)) {
            return cmd_agp_plot(global, plot_in, plot_weeks, plot_bin, plot_out);
        }
        if (app.got_subcommand(outcomes_plot)) {
            return cmd_outcomes_plot(global, oplot_in, oplot_slice, oplot_metrics, oplot_out,
                                     metrics_config);
        }
        if (app.got_subcommand(info)) {
            return cmd_info(global, info_in);
        }
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace diax
