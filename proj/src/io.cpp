#include "subfair/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace subfair::io {

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

char delimiter_for(const fs::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".tsv" || ext == ".tab") ? '\t' : ',';
}

std::optional<char> delimiter_from_json(const json& j) {
    if (!j.contains("delimiter")) return std::nullopt;
    const auto d = j.at("delimiter").get<std::string>();
    if (d == "tab" || d == "\t") return '\t';
    if (d.size() != 1) throw InputError("delimiter must be a single character or \"tab\"");
    return d[0];
}

bool contains(const std::vector<std::string>& values, const std::string& v) {
    return std::find(values.begin(), values.end(), v) != values.end();
}

std::optional<double> parse_real(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) return std::nullopt;
    return v;
}

FieldSpec field_from_json(const json& j) {
    FieldSpec f;
    if (j.is_string()) {
        f.column = j.get<std::string>();
        return f;
    }
    f.column = j.at("column").get<std::string>();
    if (j.contains("pattern")) f.pattern = std::regex(j.at("pattern").get<std::string>());
    if (j.contains("values")) {
        for (const auto& [raw, mapped] : j.at("values").items()) f.values[raw] = mapped.get<std::string>();
    }
    return f;
}

std::vector<std::string> strings(const json& j) { return j.get<std::vector<std::string>>(); }

}  // namespace

// ---- tables -----------------------------------------------------------------

std::optional<std::size_t> Table::find(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::size_t Table::column(const std::string& name) const {
    if (auto c = find(name)) return *c;
    throw InputError(source + ": missing column '" + name + "'");
}

std::string Table::where(std::size_t row) const { return source + ":" + std::to_string(lines.at(row)); }

Table parse_table(const std::string& text, char delimiter, const std::string& source) {
    Table t;
    t.source = source;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool row_has_content = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    const auto end_row = [&] {
        if (row_has_content || !field.empty() || !fields.empty()) {
            fields.push_back(field);
            if (t.header.empty()) {
                for (auto& h : fields) h = trim(h);
                t.header = std::move(fields);
            } else {
                if (fields.size() != t.header.size()) {
                    throw InputError(source + ":" + std::to_string(row_line) + ": expected " +
                                     std::to_string(t.header.size()) + " fields, found " +
                                     std::to_string(fields.size()));
                }
                t.rows.push_back(std::move(fields));
                t.lines.push_back(row_line);
            }
        }
        fields.clear();
        field.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            row_has_content = true;
        } else if (c == delimiter) {
            fields.push_back(field);
            field.clear();
            row_has_content = true;
        } else if (c == '\n') {
            end_row();
            row_line = ++line;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) throw InputError(source + ": unterminated quoted field");
    end_row();
    if (t.header.empty()) throw InputError(source + ": empty file");
    return t;
}

Table read_table(const fs::path& path, std::optional<char> delimiter) {
    return parse_table(slurp(path), delimiter.value_or(delimiter_for(path)), path.string());
}

std::string quote_field(const std::string& field, char delimiter) {
    if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

json read_json(const fs::path& path) {
    try {
        return json::parse(slurp(path));
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash(const fs::path& path) { return fnv1a_hex(slurp(path)); }

std::string format_real(double v) {
    char buf[32];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// ---- raw manifests ----------------------------------------------------------

std::string FieldSpec::extract(const std::string& raw) const {
    std::string v = trim(raw);
    if (pattern) {
        std::smatch m;
        if (!std::regex_search(v, m, *pattern)) return {};
        v = m.size() > 1 ? m[1].str() : m[0].str();
    }
    if (!values.empty()) {
        const auto it = values.find(v);
        if (it != values.end()) return it->second;
    }
    return v;
}

ManifestColumns ManifestColumns::from_json(const json& j) {
    try {
        ManifestColumns c;
        c.delimiter = delimiter_from_json(j);
        c.image_id = field_from_json(j.at("image_id"));
        c.patient_id = field_from_json(j.at("patient_id"));
        if (j.contains("view")) c.view = field_from_json(j.at("view"));
        if (j.contains("frontal_values")) c.frontal_values = strings(j.at("frontal_values"));
        if (j.contains("support_devices")) c.support_devices = j.at("support_devices").get<std::string>();
        const auto& f = j.at("findings");
        const auto mode = f.value("mode", std::string("columns"));
        if (mode == "columns") {
            c.finding_mode = FindingMode::columns;
            c.finding_columns = strings(f.at("columns"));
            if (f.contains("no_finding")) c.no_finding = f.at("no_finding").get<std::string>();
        } else if (mode == "list") {
            c.finding_mode = FindingMode::list;
            c.finding_list_column = f.at("column").get<std::string>();
            c.finding_separator = f.value("separator", std::string("|"));
            c.no_finding_token = f.value("no_finding", std::string("No Finding"));
        } else {
            throw InputError("findings.mode must be \"columns\" or \"list\"");
        }
        if (j.contains("positive_values")) c.positive_values = strings(j.at("positive_values"));
        if (j.contains("negative_values")) c.negative_values = strings(j.at("negative_values"));
        if (j.contains("uncertain_values")) c.uncertain_values = strings(j.at("uncertain_values"));
        if (j.contains("age")) c.age = field_from_json(j.at("age"));
        if (j.contains("sex")) c.sex = field_from_json(j.at("sex"));
        if (j.contains("race")) c.race = field_from_json(j.at("race"));
        return c;
    } catch (const json::exception& e) {
        throw InputError(std::string("column map: ") + e.what());
    } catch (const std::regex_error& e) {
        throw InputError(std::string("column map pattern: ") + e.what());
    }
}

std::vector<MetadataRow> read_manifest(const fs::path& path, const ManifestColumns& columns) {
    const Table t = read_table(path, columns.delimiter);
    const auto col = [&t](const FieldSpec& f) { return t.column(f.column); };
    const std::size_t c_image = col(columns.image_id);
    const std::size_t c_patient = col(columns.patient_id);
    const auto c_view = columns.view ? std::optional(col(*columns.view)) : std::nullopt;
    const auto c_devices = columns.support_devices ? std::optional(t.column(*columns.support_devices)) : std::nullopt;
    const auto c_age = columns.age ? std::optional(col(*columns.age)) : std::nullopt;
    const auto c_sex = columns.sex ? std::optional(col(*columns.sex)) : std::nullopt;
    const auto c_race = columns.race ? std::optional(col(*columns.race)) : std::nullopt;
    std::vector<std::pair<std::string, std::size_t>> finding_cols;
    std::optional<std::size_t> c_no_finding;
    std::optional<std::size_t> c_list;
    if (columns.finding_mode == ManifestColumns::FindingMode::columns) {
        for (const auto& name : columns.finding_columns) finding_cols.emplace_back(name, t.column(name));
        if (columns.no_finding) c_no_finding = t.column(*columns.no_finding);
    } else {
        c_list = t.column(columns.finding_list_column);
    }

    std::vector<MetadataRow> rows;
    rows.reserve(t.rows.size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        MetadataRow r;
        r.image_id = columns.image_id.extract(f[c_image]);
        r.patient_id = columns.patient_id.extract(f[c_patient]);
        if (r.image_id.empty()) throw InputError(t.where(i) + ": empty image id");
        if (r.patient_id.empty()) throw InputError(t.where(i) + ": empty patient id");
        if (!seen.insert(r.image_id).second) throw InputError(t.where(i) + ": duplicate image id '" + r.image_id + "'");
        if (c_view) {
            const std::string v = columns.view->extract(f[*c_view]);
            r.view = contains(columns.frontal_values, v) ? View::frontal : (v.empty() ? View::other : View::lateral);
        }
        if (c_devices) r.support_devices = contains(columns.positive_values, trim(f[*c_devices]));
        if (c_list) {
            std::string list = f[*c_list];
            std::size_t start = 0;
            while (start <= list.size()) {
                auto end = list.find(columns.finding_separator, start);
                if (end == std::string::npos) end = list.size();
                const std::string token = trim(list.substr(start, end - start));
                if (token == columns.no_finding_token) r.no_finding = true;
                else if (!token.empty()) r.labels[token] = LabelState::positive;
                start = end + columns.finding_separator.size();
            }
        } else {
            for (const auto& [name, c] : finding_cols) {
                const std::string v = trim(f[c]);
                LabelState s = LabelState::absent;
                if (contains(columns.positive_values, v)) s = LabelState::positive;
                else if (contains(columns.negative_values, v)) s = LabelState::negative;
                else if (contains(columns.uncertain_values, v)) s = LabelState::uncertain;
                r.labels[name] = s;
            }
            if (c_no_finding) r.no_finding = contains(columns.positive_values, trim(f[*c_no_finding]));
        }
        if (c_age) {
            if (auto a = parse_real(columns.age->extract(f[*c_age])); a && std::isfinite(*a) && *a >= 0) {
                r.age = static_cast<int>(std::floor(*a));
            }
        }
        if (c_sex) r.sex = columns.sex->extract(f[*c_sex]);
        if (c_race) {
            const std::string race = columns.race->extract(f[*c_race]);
            if (!race.empty()) r.race = race;
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- cohorts and scores -----------------------------------------------------

CohortColumns CohortColumns::from_json(const json& j) {
    try {
        CohortColumns c;
        c.image_id = j.value("image_id", c.image_id);
        c.patient_id = j.value("patient_id", c.patient_id);
        c.label = j.value("label", c.label);
        if (j.contains("attributes")) c.attributes = strings(j.at("attributes"));
        c.delimiter = delimiter_from_json(j);
        return c;
    } catch (const json::exception& e) {
        throw InputError(std::string("column map: ") + e.what());
    }
}

void write_cohort(const fs::path& path, const std::vector<MetadataRow>& rows, const std::vector<std::string>& attributes) {
    std::ostringstream out;
    out << "image_id,patient_id,label";
    for (const auto& a : attributes) out << ',' << quote_field(a, ',');
    out << '\n';
    for (const auto& r : rows) {
        const auto dx = r.diagnosis();
        if (!dx) throw InputError("write_cohort: image '" + r.image_id + "' has no class");
        out << quote_field(r.image_id, ',') << ',' << quote_field(r.patient_id, ',') << ','
            << static_cast<int>(*dx);
        for (const auto& a : attributes) {
            const auto it = r.attributes.find(a);
            out << ',' << (it == r.attributes.end() ? std::string() : quote_field(it->second, ','));
        }
        out << '\n';
    }
    write_text(path, out.str());
}

ScoreFile read_scores(const fs::path& path) {
    const std::string text = slurp(path);
    // Header is optional, so parse with a synthetic one and drop a literal header row.
    Table t = parse_table("image_id" + std::string(1, delimiter_for(path)) + "score\n" + text, delimiter_for(path),
                          path.string());
    ScoreFile out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string id = trim(t.rows[i][0]);
        const std::string raw = trim(t.rows[i][1]);
        const std::string where = path.string() + ":" + std::to_string(t.lines[i] - 1);
        if (i == 0 && id == "image_id" && raw == "score") continue;
        const auto v = parse_real(raw);
        if (!v) throw InputError(where + ": non-numeric score '" + raw + "'");
        if (!std::isfinite(*v)) throw InputError(where + ": non-finite score");
        if (id.empty()) throw InputError(where + ": empty image id");
        if (!seen.insert(id).second) throw InputError(where + ": duplicate image id '" + id + "'");
        out.scores.emplace_back(id, *v);
    }
    return out;
}

void write_scores(const fs::path& path, const std::vector<std::pair<std::string, double>>& scores) {
    std::ostringstream out;
    out << "image_id,score\n";
    char buf[40];
    for (const auto& [id, s] : scores) {
        std::snprintf(buf, sizeof buf, "%.17g", s);
        out << quote_field(id, ',') << ',' << buf << '\n';
    }
    write_text(path, out.str());
}

Cohort ingest(const Table& metadata, const ScoreFile& scores, const std::string& scores_source,
              const CohortColumns& columns, const IngestOptions& options) {
    const std::size_t c_image = metadata.column(columns.image_id);
    const std::size_t c_patient = metadata.column(columns.patient_id);
    const std::size_t c_label = metadata.column(columns.label);
    std::vector<std::string> attrs;
    if (columns.attributes) {
        attrs = *columns.attributes;
    } else {
        for (const auto& h : metadata.header) {
            if (h != columns.image_id && h != columns.patient_id && h != columns.label) attrs.push_back(h);
        }
    }
    std::vector<std::size_t> c_attrs;
    for (const auto& a : attrs) c_attrs.push_back(metadata.column(a));

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < metadata.rows.size(); ++i) {
        const std::string id = trim(metadata.rows[i][c_image]);
        if (!index.emplace(id, i).second) throw InputError(metadata.where(i) + ": duplicate image id '" + id + "'");
    }

    Cohort cohort;
    cohort.schema = attrs;
    std::vector<std::string> unmatched;
    for (const auto& [id, score] : scores.scores) {
        const auto it = index.find(id);
        if (it == index.end()) {
            unmatched.push_back(id);
            continue;
        }
        const std::size_t i = it->second;
        const auto& f = metadata.rows[i];
        ScoreRecord r;
        r.image_id = id;
        r.patient_id = trim(f[c_patient]);
        r.score = score;
        const std::string label = trim(f[c_label]);
        if (label == "1" || label == "1.0" || label == "diseased") r.label = Label::diseased;
        else if (label == "0" || label == "0.0" || label == "normal") r.label = Label::normal;
        else throw InputError(metadata.where(i) + ": label '" + label + "' is not 0/1");
        for (std::size_t a = 0; a < attrs.size(); ++a) {
            const std::string v = trim(f[c_attrs[a]]);
            if (v.empty()) throw InputError(metadata.where(i) + ": missing value for attribute '" + attrs[a] + "'");
            r.attributes[attrs[a]] = v;
        }
        cohort.records.push_back(std::move(r));
    }
    if (unmatched.size() > options.max_unmatched) {
        std::ostringstream msg;
        msg << scores_source << ": " << unmatched.size() << " score rows have no metadata:";
        for (std::size_t k = 0; k < std::min<std::size_t>(unmatched.size(), 20); ++k) msg << ' ' << unmatched[k];
        if (unmatched.size() > 20) msg << " ...";
        throw InputError(msg.str());
    }
    if (cohort.empty()) throw InputError(scores_source + ": no scores matched the metadata");
    cohort.validate();
    return cohort;
}

Cohort ingest(const fs::path& metadata_path, const fs::path& scores_path, const CohortColumns& columns,
              const IngestOptions& options) {
    return ingest(read_table(metadata_path, columns.delimiter), read_scores(scores_path), scores_path.string(),
                  columns, options);
}

// ---- manifests --------------------------------------------------------------

json to_json(const SplitManifest& m) {
    json j;
    j["schema_version"] = 1;
    j["seed"] = m.seed;
    if (m.composition) {
        json ratios = json::object();
        for (const auto& [cat, share] : m.composition->ratios) ratios[cat] = share;
        j["composition"] = {{"attribute", m.composition->attribute},
                            {"ratios", ratios},
                            {"budget", m.composition->budget}};
    } else {
        j["composition"] = nullptr;
    }
    j["provenance"] = json::object();
    for (const auto& [k, v] : m.provenance) j["provenance"][k] = v;
    j["train"] = m.train;
    j["val"] = m.val;
    j["test"] = m.test;
    return j;
}

SplitManifest manifest_from_json(const json& j) {
    try {
        SplitManifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("composition") && !j.at("composition").is_null()) {
            const auto& c = j.at("composition");
            CompositionSpec spec;
            spec.attribute = c.at("attribute").get<std::string>();
            spec.budget = c.at("budget").get<std::size_t>();
            for (const auto& [cat, share] : c.at("ratios").items()) spec.ratios.emplace_back(cat, share.get<double>());
            m.composition = spec;
        }
        if (j.contains("provenance")) {
            for (const auto& [k, v] : j.at("provenance").items()) m.provenance[k] = v.get<std::string>();
        }
        m.train = j.value("train", std::vector<std::string>{});
        m.val = j.value("val", std::vector<std::string>{});
        m.test = j.value("test", std::vector<std::string>{});
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("split manifest: ") + e.what());
    }
}

void write_list(const fs::path& path, const std::vector<std::string>& ids) {
    std::string text;
    for (const auto& id : ids) text += id + '\n';
    write_text(path, text);
}

std::vector<std::string> read_list(const fs::path& path) {
    std::istringstream in(slurp(path));
    std::vector<std::string> ids;
    for (std::string line; std::getline(in, line);) {
        line = trim(line);
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

}  // namespace subfair::io
