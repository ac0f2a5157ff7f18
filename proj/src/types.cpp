#include "subfair/types.hpp"

#include <algorithm>
#include <cmath>

namespace subfair {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

}  // namespace

SubgroupKey::SubgroupKey(std::vector<Constraint> constraints) : constraints_(std::move(constraints)) {
    if (constraints_.empty()) {
        throw std::invalid_argument("SubgroupKey needs at least one constraint; use Population for the whole cohort");
    }
    std::sort(constraints_.begin(), constraints_.end());
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
        if (constraints_[i].first.empty()) throw std::invalid_argument("SubgroupKey: empty attribute name");
        if (i > 0 && constraints_[i].first == constraints_[i - 1].first) {
            throw std::invalid_argument("SubgroupKey: attribute '" + constraints_[i].first + "' constrained twice");
        }
    }
}

SubgroupKey::SubgroupKey(std::string attribute, std::string category)
    : SubgroupKey(std::vector<Constraint>{{std::move(attribute), std::move(category)}}) {}

SubgroupKey SubgroupKey::parse(const std::string& text) {
    std::vector<Constraint> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('&', start);
        if (end == std::string::npos) end = text.size();
        const std::string part = text.substr(start, end - start);
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("bad subgroup term '" + part + "' in '" + text + "'");
        out.emplace_back(trim(part.substr(0, eq)), trim(part.substr(eq + 1)));
        start = end + 1;
    }
    return SubgroupKey(std::move(out));
}

bool SubgroupKey::matches(const std::map<std::string, std::string>& attributes) const {
    for (const auto& [attr, cat] : constraints_) {
        auto it = attributes.find(attr);
        if (it == attributes.end() || it->second != cat) return false;
    }
    return true;
}

const std::string* SubgroupKey::category_of(const std::string& attribute) const {
    for (const auto& [attr, cat] : constraints_) {
        if (attr == attribute) return &cat;
    }
    return nullptr;
}

std::string SubgroupKey::str() const {
    std::string out;
    for (const auto& [attr, cat] : constraints_) {
        if (!out.empty()) out += '&';
        out += attr + '=' + cat;
    }
    return out;
}

GroupRef parse_group(const std::string& text) {
    const std::string t = trim(text);
    if (t == "population" || t == "*") return Population{};
    return SubgroupKey::parse(t);
}

std::string to_string(const GroupRef& g) {
    if (std::holds_alternative<Population>(g)) return "population";
    return std::get<SubgroupKey>(g).str();
}

bool matches(const GroupRef& g, const ScoreRecord& r) {
    if (const auto* key = std::get_if<SubgroupKey>(&g)) return key->matches(r);
    return true;
}

void Cohort::validate() const {
    for (const auto& r : records) {
        if (!std::isfinite(r.score)) throw InputError("non-finite score for image '" + r.image_id + "'");
        for (const auto& attr : schema) {
            if (!r.attributes.count(attr)) {
                throw InputError("image '" + r.image_id + "' lacks attribute '" + attr + "'");
            }
        }
    }
}

}  // namespace subfair
