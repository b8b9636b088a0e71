#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "diax/error.hpp"
#include "diax/validate.hpp"
#include "helpers.hpp"

using namespace diax;

namespace {

SubjectRecord minimal_record() {
    SubjectRecord r;
    r.unique_id = "V-1";
    std::vector<TimedInstant> times;
    std::vector<double> values;
    for (int i = 0; i < 12; ++i) {
        times.push_back(make_instant(2021, 3, 1, i, 0, 0, 0, true));
        values.push_back(100.0 + i);
    }
    r.signals.emplace("cgm", make_numeric_signal(times, values));
    SignalMetadata m;
    m.unit = "mg/dL";
    m.description = "CGM values";
    r.metadata.emplace("cgm", m);
    return r;
}

void add_bolus(SubjectRecord& r, double units) {
    r.signals.emplace("bolus",
                      make_numeric_signal({make_instant(2021, 3, 1, 8, 0, 0, 0, true)}, {units}));
    SignalMetadata m;
    m.unit = "U";
    m.description = "insulin boluses";
    r.metadata.emplace("bolus", m);
}

bool has_finding(const ValidationReport& rep, std::string_view code,
                 std::optional<std::string> key = {}, std::optional<std::size_t> index = {}) {
    for (const auto& f : rep.findings) {
        if (f.code == code && (!key || f.key == key) && (!index || f.sample_index == index)) {
            return true;
        }
    }
    return false;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("diax_test_" + tag);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("a clean record passes with only the no-insulin warning") {
    const auto rep = validate_subject(minimal_record());
    CHECK(rep.passing());
    CHECK(rep.errors() == 0);
    CHECK(rep.warnings() == 1);
    CHECK(has_finding(rep, codes::kNoInsulin));

    SubjectRecord with_insulin = minimal_record();
    add_bolus(with_insulin, 2.0);
    const auto rep2 = validate_subject(with_insulin);
    CHECK(rep2.findings.empty());
}

TEST_CASE("missing cgm is an error") {
    SubjectRecord r = minimal_record();
    r.signals.erase("cgm");
    r.metadata.erase("cgm");
    const auto rep = validate_subject(r);
    CHECK_FALSE(rep.passing());
    CHECK(has_finding(rep, codes::kMissingCgm, std::string("cgm")));
}

TEST_CASE("registry unit mismatches are errors for every registry key") {
    for (const auto& [key, entry] : key_registry()) {
        if (entry.unit.empty()) {
            continue;
        }
        SubjectRecord r = minimal_record();
        if (key != "cgm") {
            Signal s;
            s.kind = entry.kind;
            s.times = {make_instant(2021, 3, 1, 0, 0, 0, 0, true)};
            s.numbers = {1.0};
            r.signals.emplace(key, s);
        }
        SignalMetadata m;
        m.unit = "furlongs";
        m.description = "d";
        r.metadata.insert_or_assign(key, m);
        const auto rep = validate_subject(r);
        CHECK_MESSAGE(has_finding(rep, codes::kUnitMismatch, key), "key = ", key);
    }

    // the canonical unit passes
    SubjectRecord ok = minimal_record();
    CHECK_FALSE(has_finding(validate_subject(ok), codes::kUnitMismatch));
}

TEST_CASE("implausible values warn with their sample index") {
    SubjectRecord r = minimal_record();
    r.signals.at("cgm").numbers[3] = 1000.0;
    const auto rep = validate_subject(r);
    CHECK(rep.passing()); // warning, not error
    CHECK(has_finding(rep, codes::kImplausibleValue, std::string("cgm"), std::size_t{3}));

    SubjectRecord b = minimal_record();
    add_bolus(b, 150.0);
    CHECK(has_finding(validate_subject(b), codes::kImplausibleValue, std::string("bolus"),
                      std::size_t{0}));

    SubjectRecord low = minimal_record();
    low.signals.at("cgm").numbers[0] = 5.5; // mmol/L contamination
    CHECK(has_finding(validate_subject(low), codes::kImplausibleValue, std::string("cgm"),
                      std::size_t{0}));
}

TEST_CASE("unsorted times and mixed awareness warn") {
    SubjectRecord r = minimal_record();
    std::swap(r.signals.at("cgm").times[0], r.signals.at("cgm").times[5]);
    const auto rep = validate_subject(r);
    CHECK(rep.passing());
    CHECK(has_finding(rep, codes::kUnsortedTimes, std::string("cgm")));

    SubjectRecord mixed = minimal_record();
    mixed.signals.at("cgm").times[2].zone_aware = false;
    CHECK(has_finding(validate_subject(mixed), codes::kMixedZoneAwareness, std::string("cgm")));
}

TEST_CASE("validate_dataset summarizes a directory") {
    TempDir dir("dataset");
    testutil::Rng rng(11);

    // three valid subjects
    for (int i = 1; i <= 3; ++i) {
        SubjectRecord r = minimal_record();
        add_bolus(r, 2.0);
        r.unique_id = "Trial-" + std::to_string(i);
        write_subject_file(dir.path / ("subj_Trial_" + std::to_string(i) + ".json"), r);
    }
    // one spans 10 days of cgm
    {
        SubjectRecord r;
        r.unique_id = "Trial-10d";
        std::vector<TimedInstant> times;
        std::vector<double> values;
        const auto t0 = make_instant(2021, 3, 1, 0, 0, 0, 0, true);
        times.push_back(t0);
        values.push_back(100);
        times.push_back(advance(t0, 10 * 86400));
        values.push_back(120);
        r.signals.emplace("cgm", make_numeric_signal(times, values));
        SignalMetadata m;
        m.unit = "mg/dL";
        m.description = "CGM values";
        r.metadata.emplace("cgm", m);
        add_bolus(r, 1.0);
        write_subject_file(dir.path / "subj_Trial_10d.json", r);
    }
    // one malformed file, one badly named json, one ignored extension
    write_text(dir.path / "subj_Trial_broken.json", "{ not json");
    write_text(dir.path / "notes.json", "{}");
    write_text(dir.path / "readme.txt", "ignored");

    const auto result = validate_dataset(dir.path, 0, 2);
    CHECK(result.reports.size() == 6); // 5 json files + 1 bad-name warning entry
    CHECK(result.summary.subjects == 4);
    CHECK(result.summary.patient_hours ==
          doctest::Approx(3 * 11.0 + 240.0)); // 3 x 11h spans + 10 days
    CHECK(result.summary.by_code.at(std::string(codes::kMalformed)) == 1);
    CHECK(result.summary.by_code.at(std::string(codes::kBadFilename)) == 1);
    CHECK_FALSE(result.passing());

    // broken file is isolated: the other reports still pass
    for (const auto& [name, rep] : result.reports) {
        if (name.find("broken") == std::string::npos && name != "notes.json") {
            CHECK(rep.passing());
        }
    }

    // deterministic regardless of thread count
    const auto serial = validate_dataset(dir.path, 0, 1);
    REQUIRE(serial.reports.size() == result.reports.size());
    for (std::size_t i = 0; i < serial.reports.size(); ++i) {
        CHECK(serial.reports[i].first == result.reports[i].first);
        CHECK(serial.reports[i].second.findings == result.reports[i].second.findings);
    }
    CHECK(serial.summary.patient_hours == result.summary.patient_hours);

    CHECK_THROWS_AS(validate_dataset(dir.path / "missing_subdir"), IoFailure);
}

TEST_CASE("findings export as JSON lines and round-trip") {
    SubjectRecord r = minimal_record();
    r.signals.at("cgm").numbers[3] = 1000.0;
    r.metadata.at("cgm").unit = "mmol/L";
    const auto rep = validate_subject(r);
    REQUIRE_FALSE(rep.findings.empty());

    const std::string jsonl = findings_to_jsonl("subj_Trial_1.json", rep);
    const auto back = findings_from_jsonl(jsonl);
    REQUIRE(back.size() == rep.findings.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].first == "subj_Trial_1.json");
        CHECK(back[i].second == rep.findings[i]);
    }

    CHECK_THROWS_AS(findings_from_jsonl("{oops\n"), MalformedDocument);
}

TEST_CASE("validation is deterministic") {
    testutil::Rng rng(123);
    for (int i = 0; i < 20; ++i) {
        const SubjectRecord r = testutil::random_record(rng, 0);
        const auto a = validate_subject(r);
        const auto b = validate_subject(r);
        CHECK(a.findings == b.findings);
    }
}
