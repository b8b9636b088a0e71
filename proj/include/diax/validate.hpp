#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diax/findings.hpp"
#include "diax/model.hpp"

namespace diax {

/// Plausibility bounds used by the IMPLAUSIBLE_VALUE check. A glucose value
/// of 5.5 almost certainly means mmol/L crept in; warn rather than reject.
struct PlausibilityBounds {
    double glucose_lo = 10.0, glucose_hi = 600.0; // cgm, smbg (mg/dL)
    double bolus_lo = 0.0, bolus_hi = 100.0;      // U
    double basal_lo = 0.0, basal_hi = 40.0;       // U/h
    double carbs_lo = 0.0, carbs_hi = 500.0;      // g
};

struct ValidationReport {
    std::vector<Finding> findings;

    std::size_t errors() const;
    std::size_t warnings() const;
    bool passing() const { return errors() == 0; }
};

/// Schema and plausibility checks over an in-memory record. Deterministic
/// and side-effect free; every problem becomes a finding, never a throw.
ValidationReport validate_subject(const SubjectRecord& record,
                                  const PlausibilityBounds& bounds = {});

/// Lenient parse of one file merged with validate_subject over whatever was
/// salvaged. Unreadable or non-JSON files yield a MALFORMED finding.
ValidationReport validate_subject_file(const std::filesystem::path& file,
                                       int fallback_offset_minutes = 0);

struct DatasetSummary {
    std::size_t subjects = 0;   ///< readable files following the naming convention
    double patient_hours = 0.0; ///< sum over subjects of (last - first cgm stamp)
    std::size_t errors = 0;
    std::size_t warnings = 0;
    std::map<std::string, std::size_t> by_code;
};

struct DatasetValidation {
    std::vector<std::pair<std::string, ValidationReport>> reports; ///< sorted by filename
    DatasetSummary summary;

    bool passing() const { return summary.errors == 0; }
};

/// Validates every "subj_*.json" in a directory. Other .json files get a
/// BAD_FILENAME warning entry; non-JSON files are ignored. Files may be
/// checked concurrently; the result is independent of completion order.
DatasetValidation validate_dataset(const std::filesystem::path& dir,
                                   int fallback_offset_minutes = 0, unsigned threads = 0);

/// One JSON object per finding: {"file","severity","code","key","index","message"}.
std::string findings_to_jsonl(std::string_view file, const ValidationReport& report);
std::string findings_to_jsonl(const DatasetValidation& dataset);
std::vector<std::pair<std::string, Finding>> findings_from_jsonl(std::string_view text);

} // namespace diax
