#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace subfair {

// Error hierarchy. InputError covers malformed files/configs, MetricError
// covers degenerate metric inputs; the CLI maps them to distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

/// A group selection matched zero records of a class the metric needs.
class EmptyGroupError : public MetricError {
public:
    using MetricError::MetricError;
};

class DegenerateFitError : public MetricError {
public:
    using MetricError::MetricError;
};

enum class Label : int { normal = 0, diseased = 1 };

struct ScoreRecord {
    std::string image_id;
    std::string patient_id;
    double score = 0.0;
    Label label = Label::normal;
    std::map<std::string, std::string> attributes;

    bool positive() const { return label == Label::diseased; }
};

/// Conjunction of (attribute, category) constraints. Never empty; the whole
/// population is the separate `Population` alternative of `GroupRef`.
class SubgroupKey {
public:
    using Constraint = std::pair<std::string, std::string>;

    explicit SubgroupKey(std::vector<Constraint> constraints);
    SubgroupKey(std::string attribute, std::string category);

    /// Parses "sex=F" or "sex=F&race=white".
    static SubgroupKey parse(const std::string& text);

    const std::vector<Constraint>& constraints() const { return constraints_; }
    bool matches(const std::map<std::string, std::string>& attributes) const;
    bool matches(const ScoreRecord& r) const { return matches(r.attributes); }

    /// Category required for `attribute`, or nullptr when unconstrained.
    const std::string* category_of(const std::string& attribute) const;

    std::string str() const;

    friend bool operator==(const SubgroupKey&, const SubgroupKey&) = default;
    friend auto operator<=>(const SubgroupKey&, const SubgroupKey&) = default;

private:
    std::vector<Constraint> constraints_;  // sorted by attribute name
};

struct Population {
    friend bool operator==(Population, Population) { return true; }
    friend auto operator<=>(Population, Population) = default;
};

using GroupRef = std::variant<Population, SubgroupKey>;

/// "population" or "*" parse to Population; anything else to a SubgroupKey.
GroupRef parse_group(const std::string& text);
std::string to_string(const GroupRef& g);
bool matches(const GroupRef& g, const ScoreRecord& r);

/// Evaluation cohort: score records plus the attribute schema they share.
struct Cohort {
    std::vector<ScoreRecord> records;
    std::vector<std::string> schema;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    /// Throws InputError on non-finite scores or attributes missing from a record.
    void validate() const;
};

}  // namespace subfair
