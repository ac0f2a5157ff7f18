#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "json.hpp"

#include "subfair/cohort.hpp"
#include "subfair/types.hpp"

namespace subfair::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Delimited text with a header row. Fields may be double-quoted.
struct Table {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;  // 1-based source line of each row

    std::optional<std::size_t> find(const std::string& column) const;
    std::size_t column(const std::string& column) const;  // throws InputError naming the file
    std::string where(std::size_t row) const;             // "file:line"
};

/// Comma-separated unless the extension is .tsv/.tab or `delimiter` says otherwise.
Table read_table(const fs::path& path, std::optional<char> delimiter = std::nullopt);
Table parse_table(const std::string& text, char delimiter, const std::string& source = "<memory>");
std::string quote_field(const std::string& field, char delimiter);

json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// FNV-1a 64-bit, hex encoded. Used for provenance and config hashes.
std::string fnv1a_hex(const std::string& bytes);
std::string file_hash(const fs::path& path);

/// Shortest decimal form of a double that parses back to the same value.
std::string format_real(double v);

// ---- raw metadata manifests --------------------------------------------------

/// Column reference with optional regex extraction and value translation.
struct FieldSpec {
    std::string column;
    std::optional<std::regex> pattern;  // first match (or first capture group) is used
    std::map<std::string, std::string> values;

    std::string extract(const std::string& raw) const;
};

/// Dataset-specific layout of a metadata manifest.
struct ManifestColumns {
    std::optional<char> delimiter;
    FieldSpec image_id;
    FieldSpec patient_id;
    std::optional<FieldSpec> view;  // absent: every image frontal
    std::vector<std::string> frontal_values{"PA", "AP", "Frontal", "frontal"};
    std::optional<std::string> support_devices;  // absent: no devices recorded
    enum class FindingMode { columns, list } finding_mode = FindingMode::columns;
    std::vector<std::string> finding_columns;   // columns mode
    std::optional<std::string> no_finding;      // columns mode
    std::string finding_list_column;            // list mode
    std::string finding_separator = "|";        // list mode
    std::string no_finding_token = "No Finding";  // list mode
    std::vector<std::string> positive_values{"1", "1.0"};
    std::vector<std::string> negative_values{"0", "0.0"};
    std::vector<std::string> uncertain_values{"-1", "-1.0"};
    std::optional<FieldSpec> age;
    std::optional<FieldSpec> sex;
    std::optional<FieldSpec> race;

    static ManifestColumns from_json(const json& j);
};

std::vector<MetadataRow> read_manifest(const fs::path& path, const ManifestColumns& columns);

// ---- evaluation cohorts ------------------------------------------------------

/// Columns of a prepared cohort file (one row per image with its class).
struct CohortColumns {
    std::string image_id = "image_id";
    std::string patient_id = "patient_id";
    std::string label = "label";
    std::optional<std::vector<std::string>> attributes;  // default: every other column
    std::optional<char> delimiter;

    static CohortColumns from_json(const json& j);
};

/// Writes image_id, patient_id, label and the given attributes.
void write_cohort(const fs::path& path, const std::vector<MetadataRow>& rows, const std::vector<std::string>& attributes);

struct ScoreFile {
    std::vector<std::pair<std::string, double>> scores;
};

/// Two columns (image_id, score); an "image_id,score" header line is optional.
ScoreFile read_scores(const fs::path& path);
void write_scores(const fs::path& path, const std::vector<std::pair<std::string, double>>& scores);

struct IngestOptions {
    std::size_t max_unmatched = 0;  // score rows without metadata tolerated (and dropped)
};

/// Inner join of scores onto cohort metadata by image_id.
Cohort ingest(const fs::path& metadata_path, const fs::path& scores_path, const CohortColumns& columns,
              const IngestOptions& options = {});
Cohort ingest(const Table& metadata, const ScoreFile& scores, const std::string& scores_source,
              const CohortColumns& columns, const IngestOptions& options = {});

// ---- split manifests ---------------------------------------------------------

json to_json(const SplitManifest& m);
SplitManifest manifest_from_json(const json& j);
void write_list(const fs::path& path, const std::vector<std::string>& ids);
std::vector<std::string> read_list(const fs::path& path);

}  // namespace subfair::io
