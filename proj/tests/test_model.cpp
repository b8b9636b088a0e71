#include <doctest.h>

#include "diax/error.hpp"
#include "diax/model.hpp"
#include "helpers.hpp"

using namespace diax;

namespace {

const char* kMinimalDoc = R"({
  "unique_id": "MyTrial-001",
  "cgm": {
    "time": ["2021-03-05 14:30:00 +00:00", "2021-03-05 14:35:00 +00:00"],
    "value": [120.0, 125.5]
  },
  "metadata": {
    "cgm": {"unit": "mg/dL", "description": "CGM values"}
  }
})";

std::string with_replacement(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

} // namespace

TEST_CASE("reads the minimal subject document") {
    const SubjectRecord r = read_subject(kMinimalDoc);
    CHECK(r.unique_id == "MyTrial-001");
    CHECK(r.signals.size() == 1);
    REQUIRE(r.find_signal("cgm") != nullptr);
    const Signal& cgm = *r.find_signal("cgm");
    CHECK(cgm.kind == ValueKind::Numeric);
    REQUIRE(cgm.size() == 2);
    CHECK(cgm.numbers[0] == 120.0);
    CHECK(cgm.numbers[1] == 125.5);
    CHECK(cgm.times[1].epoch_seconds - cgm.times[0].epoch_seconds == 300);
    CHECK(r.metadata.at("cgm").unit == "mg/dL");
}

TEST_CASE("rejects documents that are not JSON") {
    CHECK_THROWS_AS(read_subject("this is not json"), MalformedDocument);
    CHECK_THROWS_AS(read_subject("[1,2,3]"), MalformedDocument);
}

TEST_CASE("rejects parallel-array length mismatch at the offending key") {
    const std::string doc =
        with_replacement(kMinimalDoc, "[120.0, 125.5]", "[120.0, 125.5, 130.0]");
    try {
        read_subject(doc);
        FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
        CHECK(e.path() == "cgm");
    }
}

TEST_CASE("rejects unknown carb categories") {
    const std::string doc = R"({
      "unique_id": "x",
      "cgm": {"time": ["2021-03-05 14:30:00"], "value": [120]},
      "carb_category": {"time": ["2021-03-05 14:30:00"], "value": ["Huge"]},
      "metadata": {
        "cgm": {"unit": "mg/dL", "description": "CGM values"},
        "carb_category": {"unit": "category", "description": "meal type"}
      }
    })";
    try {
        read_subject(doc);
        FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
        CHECK(e.path() == "carb_category");
    }

    for (const auto& ok : kCarbCategories) {
        const std::string good =
            with_replacement(doc, "\"Huge\"", "\"" + std::string(ok) + "\"");
        CHECK_NOTHROW(read_subject(good));
    }
}

TEST_CASE("requires cgm and two-way metadata coverage") {
    CHECK_THROWS_AS(read_subject(R"({"unique_id":"x","metadata":{}})"), SchemaViolation);

    // signal without metadata
    CHECK_THROWS_AS(
        read_subject(
            R"({"unique_id":"x","cgm":{"time":["2021-01-01 00:00:00"],"value":[100]},"metadata":{}})"),
        SchemaViolation);

    // metadata without signal
    CHECK_THROWS_AS(
        read_subject(
            R"({"unique_id":"x","cgm":{"time":["2021-01-01 00:00:00"],"value":[100]},
            "metadata":{"cgm":{"unit":"mg/dL","description":"d"},
                        "bolus":{"unit":"U","description":"d"}}})"),
        SchemaViolation);
}

TEST_CASE("rejects malformed members") {
    // bad timestamp string
    CHECK_THROWS_AS(
        read_subject(
            R"({"unique_id":"x","cgm":{"time":["2021-13-01 00:00:00"],"value":[100]},
            "metadata":{"cgm":{"unit":"mg/dL","description":"d"}}})"),
        TimestampError);
    // uppercase signal key
    CHECK_THROWS_AS(
        read_subject(
            R"({"unique_id":"x","CGM":{"time":[],"value":[]},
            "cgm":{"time":[],"value":[]},
            "metadata":{"cgm":{"unit":"mg/dL","description":"d"}}})"),
        SchemaViolation);
    // unknown metadata field
    CHECK_THROWS_AS(
        read_subject(
            R"({"unique_id":"x","cgm":{"time":[],"value":[]},
            "metadata":{"cgm":{"unit":"mg/dL","description":"d","color":"red"}}})"),
        SchemaViolation);
    // string value in a numeric signal
    CHECK_THROWS_AS(
        read_subject(
            R"({"unique_id":"x","cgm":{"time":["2021-01-01 00:00:00"],"value":["high"]},
            "metadata":{"cgm":{"unit":"mg/dL","description":"d"}}})"),
        SchemaViolation);
}

TEST_CASE("canonical write is a read/write fixed point") {
    const SubjectRecord r = read_subject(kMinimalDoc);
    const std::string canonical = write_subject(r);
    CHECK(read_subject(canonical) == r);
    CHECK(write_subject(read_subject(canonical)) == canonical);
}

TEST_CASE("write orders keys canonically") {
    testutil::Rng rng(7);
    SubjectRecord r = testutil::random_record(rng, 0);
    // make sure both an s-key and cgm exist regardless of the random draw
    if (r.find_signal("smbg") == nullptr) {
        r.signals.emplace("smbg",
                          make_numeric_signal({make_instant(2021, 1, 1, 0, 0, 0, 0, true)}, {99}));
        SignalMetadata m;
        m.unit = "mg/dL";
        m.description = "fingerstick";
        r.metadata.emplace("smbg", m);
    }
    const std::string doc = write_subject(r);
    const auto pos_id = doc.find("\"unique_id\"");
    const auto pos_cgm = doc.find("\"cgm\"");
    const auto pos_smbg = doc.find("\"smbg\"");
    const auto pos_meta = doc.find("\"metadata\"");
    REQUIRE(pos_id != std::string::npos);
    REQUIRE(pos_cgm != std::string::npos);
    REQUIRE(pos_smbg != std::string::npos);
    REQUIRE(pos_meta != std::string::npos);
    CHECK(pos_id < pos_cgm);
    CHECK(pos_cgm < pos_smbg);
    CHECK(pos_smbg < pos_meta);
}

TEST_CASE("zone-aware times render with their offset") {
    SubjectRecord r;
    r.unique_id = "x";
    r.signals.emplace(
        "cgm", make_numeric_signal({parse_timestamp("2021-03-05T14:30:00+00:00", 0)}, {100}));
    SignalMetadata m;
    m.unit = "mg/dL";
    m.description = "CGM values";
    r.metadata.emplace("cgm", m);
    const std::string doc = write_subject(r);
    CHECK(doc.find("\"2021-03-05 14:30:00 +00:00\"") != std::string::npos);
}

TEST_CASE("the canonical writer sorts unsorted signals stably") {
    SubjectRecord r;
    r.unique_id = "x";
    const auto t0 = make_instant(2021, 1, 1, 8, 0, 0, 0, true);
    const auto t1 = make_instant(2021, 1, 1, 9, 0, 0, 0, true);
    r.signals.emplace("cgm", make_numeric_signal({t1, t0}, {2, 1}));
    SignalMetadata m;
    m.unit = "mg/dL";
    m.description = "d";
    r.metadata.emplace("cgm", m);
    const SubjectRecord back = read_subject(write_subject(r));
    CHECK(back.find_signal("cgm")->numbers == std::vector<double>{1, 2});
    CHECK(back.find_signal("cgm")->times_sorted());
}

TEST_CASE("unknown signal keys survive round-trips") {
    testutil::Rng rng(42);
    for (int i = 0; i < 40; ++i) {
        const int fb = testutil::random_fallback(rng);
        const SubjectRecord r = testutil::random_record(rng, fb);
        const std::string doc = write_subject(r);
        const SubjectRecord back = read_subject(doc, fb);
        CHECK(back == r);
        CHECK(write_subject(back) == doc);
    }
}

TEST_CASE("write rejects inconsistent records") {
    SubjectRecord r;
    r.unique_id = "x";
    r.signals.emplace("cgm",
                      make_numeric_signal({make_instant(2021, 1, 1, 0, 0, 0, 0, true)}, {100}));
    SignalMetadata m;
    m.unit = "mmol/L"; // wrong registry unit
    m.description = "d";
    r.metadata.emplace("cgm", m);
    CHECK_THROWS_AS(write_subject(r), InvariantViolation);

    m.unit = "mg/dL";
    r.metadata.at("cgm") = m;
    CHECK_NOTHROW(write_subject(r));

    r.unique_id.clear();
    CHECK_THROWS_AS(write_subject(r), InvariantViolation);
    r.unique_id = "x";

    SubjectRecord no_cgm;
    no_cgm.unique_id = "x";
    CHECK_THROWS_AS(write_subject(no_cgm), InvariantViolation);

    // mismatched parallel arrays built by hand
    Signal broken;
    broken.kind = ValueKind::Numeric;
    broken.times = {make_instant(2021, 1, 1, 0, 0, 0, 0, true)};
    broken.numbers = {1.0, 2.0};
    SubjectRecord bad = r;
    bad.signals.at("cgm") = broken;
    CHECK_THROWS_AS(write_subject(bad), InvariantViolation);
}

TEST_CASE("lenient reads collect findings instead of throwing") {
    const auto nojson = read_subject_lenient("not json");
    CHECK_FALSE(nojson.usable);
    REQUIRE(nojson.findings.size() == 1);
    CHECK(nojson.findings[0].code == codes::kMalformed);

    const auto missing = read_subject_lenient(R"({"unique_id":"x","metadata":{}})");
    CHECK(missing.usable);
    REQUIRE(missing.findings.size() == 1);
    CHECK(missing.findings[0].code == codes::kMissingCgm);

    const std::string mismatch =
        with_replacement(kMinimalDoc, "[120.0, 125.5]", "[120.0, 125.5, 130.0]");
    const auto lp = read_subject_lenient(mismatch);
    CHECK(lp.usable);
    REQUIRE(lp.findings.size() == 1);
    CHECK(lp.findings[0].code == codes::kLengthMismatch);
    CHECK(lp.findings[0].key == "cgm");
    CHECK(lp.record.find_signal("cgm")->size() == 2); // salvaged the pairs that exist
}

TEST_CASE("subject filename convention") {
    const auto f = parse_subject_filename("subj_MyTrial_001-001.json");
    CHECK(f.trial == "MyTrial");
    CHECK(f.subject_id == "001-001");

    const auto g = parse_subject_filename("subj_DCLP3_42.json");
    CHECK(g.trial == "DCLP3");
    CHECK(g.subject_id == "42");

    CHECK_THROWS_AS(parse_subject_filename("data.json"), BadFilename);
    CHECK_THROWS_AS(parse_subject_filename("subj_.json"), BadFilename);
    CHECK_THROWS_AS(parse_subject_filename("subj_A_B_C.json"), BadFilename);
    CHECK_THROWS_AS(parse_subject_filename("subj_Trial_001.txt"), BadFilename);

    CHECK(format_subject_filename("MyTrial", "001-001") == "subj_MyTrial_001-001.json");
    CHECK_THROWS_AS(format_subject_filename("My_Trial", "1"), BadComponent);
    CHECK_THROWS_AS(format_subject_filename("", "1"), BadComponent);
    CHECK_THROWS_AS(format_subject_filename("T", ""), BadComponent);

    // inverse property over valid components
    testutil::Rng rng(5);
    const char* alphabet = "abcXYZ019-";
    for (int i = 0; i < 200; ++i) {
        std::string trial, id;
        for (int k = rng.range(1, 8); k > 0; --k) {
            trial += alphabet[rng.range(0, 9)];
        }
        for (int k = rng.range(1, 8); k > 0; --k) {
            id += alphabet[rng.range(0, 9)];
        }
        const auto parsed = parse_subject_filename(format_subject_filename(trial, id));
        CHECK(parsed.trial == trial);
        CHECK(parsed.subject_id == id);
    }
}
