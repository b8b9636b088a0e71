#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diax/csv.hpp"
#include "diax/model.hpp"

namespace diax {

/// How one source column pair becomes one DIAX signal. Numeric rules apply
/// value*scale + offset and must land in the target key's canonical unit;
/// categorical rules translate raw labels through category_map.
struct MappingRule {
    std::string target;
    std::string source_table;
    std::string time_column;
    std::optional<std::string> time_format; ///< parse_timestamp_format pattern
    std::string value_column;
    std::string unit_in;
    double scale = 1.0;
    double offset = 0.0;
    std::map<std::string, std::string> category_map;
    SignalMetadata metadata;

    bool categorical() const;
};

struct MappingSpec {
    std::string trial_name;
    std::string subject_id_column;
    std::vector<MappingRule> rules;
};

/// Parses and fully validates a mapping-spec document; unknown fields are
/// rejected. Throws SpecError with the offending path.
MappingSpec load_mapping_spec(std::string_view document);
MappingSpec load_mapping_spec_file(const std::filesystem::path& path);

struct ConversionOptions {
    bool skip_bad_rows = false; ///< default: fail on the first bad row
    int fallback_offset_minutes = 0;
};

struct ConversionResult {
    std::vector<SubjectRecord> records; ///< sorted by unique_id
    std::vector<std::string> warnings;  ///< e.g. no rule targets cgm
    std::size_t skipped_rows = 0;       ///< only under skip_bad_rows
};

/// Groups rows by the subject id column and emits one record per subject;
/// subjects present in only some tables still produce records with the
/// streams they have. unique_id is "<trial_name>-<subject id>".
ConversionResult convert_tables(const std::vector<SourceTable>& tables, const MappingSpec& spec,
                                const ConversionOptions& options = {});

} // namespace diax
