#include "cbfl/ir/constraint.hpp"

#include "cbfl/ir/safety.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <set>

namespace cbfl::ir {

namespace {

constexpr std::array<Category, 9> kCategories = {
    Category::Precondition,         Category::Postcondition,           Category::ValueRange,
    Category::Relation,             Category::DerivedConsistency,      Category::InvariantLoop,
    Category::TemporalCallSnapshot, Category::TemporalUntilOverwritten, Category::TemporalResourceLifetime,
};

constexpr std::array<std::string_view, 9> kCategoryNames = {
    "PRECONDITION",           "POSTCONDITION",
    "VALUE_RANGE",            "RELATION",
    "DERIVED_CONSISTENCY",    "INVARIANT_LOOP",
    "TEMPORAL_CALL_SNAPSHOT", "TEMPORAL_UNTIL_OVERWRITTEN",
    "TEMPORAL_RESOURCE_LIFETIME",
};

constexpr std::array<Region, 8> kRegions = {
    Region::Entry,    Region::AnyReturn, Region::AfterDef,    Region::BeforeUse,
    Region::LoopHead, Region::LoopTail,  Region::AfterBranch, Region::Line,
};

constexpr std::array<std::string_view, 8> kRegionNames = {
    "ENTRY", "ANY_RETURN", "AFTER_DEF", "BEFORE_USE", "LOOP_HEAD", "LOOP_TAIL", "AFTER_BRANCH", "LINE",
};

constexpr std::array<double, 8> kRegionWeights = {1.0, 0.3, 1.0, 1.0, 0.9, 0.9, 1.0, 0.6};

struct Rejection {
    std::string field;
    std::string reason;
};

std::optional<int> positive_int(const nlohmann::json &v) {
    if (!v.is_number_integer()) {
        return std::nullopt;
    }
    long long n = v.get<long long>();
    if (n < 1 || n > 1000000000) {
        return std::nullopt;
    }
    return static_cast<int>(n);
}

std::optional<Rejection> parse_anchor(const nlohmann::json &anchor, Region region, Anchor &out) {
    if (!anchor.is_object()) {
        return Rejection{"instrument.anchor", "anchor-not-object"};
    }
    std::string_view wanted;
    switch (region) {
    case Region::AfterDef:
    case Region::BeforeUse:
        wanted = "var";
        break;
    case Region::LoopHead:
    case Region::LoopTail:
        wanted = "loop_id";
        break;
    case Region::Line:
    case Region::AfterBranch:
        wanted = "line";
        break;
    case Region::Entry:
    case Region::AnyReturn:
        break;
    }
    for (const auto &[key, value] : anchor.items()) {
        if (key != wanted) {
            return Rejection{"instrument.anchor." + key, "anchor-shape"};
        }
    }
    if (wanted.empty()) {
        return std::nullopt;
    }
    auto it = anchor.find(std::string(wanted));
    if (it == anchor.end()) {
        return Rejection{"instrument.anchor." + std::string(wanted), "anchor-shape"};
    }
    if (wanted == "var") {
        if (!it->is_string() || !ssa::split_versioned(it->get<std::string>())) {
            return Rejection{"instrument.anchor.var", "anchor-var-not-ssa"};
        }
        out.var = it->get<std::string>();
    } else {
        std::optional<int> n = positive_int(*it);
        if (!n) {
            return Rejection{"instrument.anchor." + std::string(wanted), "anchor-not-positive-integer"};
        }
        if (wanted == "loop_id") {
            out.loop_id = n;
        } else {
            out.line = n;
        }
    }
    return std::nullopt;
}

std::optional<Rejection> parse_constraint(const nlohmann::json &obj, Constraint &c) {
    if (!obj.is_object()) {
        return Rejection{"", "constraint-not-object"};
    }
    static const std::set<std::string> kKeys = {"id", "category", "instrument", "spec", "intent", "meta"};
    for (const auto &[key, value] : obj.items()) {
        if (kKeys.count(key) == 0) {
            return Rejection{key, "unknown-field"};
        }
    }
    auto meta = obj.find("meta");
    if (meta != obj.end() && !meta->is_object()) {
        return Rejection{"meta", "meta-not-object"};
    }
    auto cat = obj.find("category");
    if (cat == obj.end() || !cat->is_string()) {
        return Rejection{"category", "missing-category"};
    }
    std::optional<Category> category = parse_category(cat->get<std::string>());
    if (!category) {
        return Rejection{"category", "unknown-category"};
    }
    c.category = *category;

    auto inst = obj.find("instrument");
    if (inst == obj.end() || !inst->is_object()) {
        return Rejection{"instrument", "missing-instrument"};
    }
    for (const auto &[key, value] : inst->items()) {
        if (key != "region" && key != "anchor") {
            return Rejection{"instrument." + key, "unknown-field"};
        }
    }
    auto reg = inst->find("region");
    if (reg == inst->end() || !reg->is_string()) {
        return Rejection{"instrument.region", "missing-region"};
    }
    std::optional<Region> region = parse_region(reg->get<std::string>());
    if (!region) {
        return Rejection{"instrument.region", "unknown-region"};
    }
    c.region = *region;
    auto anchor = inst->find("anchor");
    if (anchor == inst->end()) {
        if (*region != Region::Entry && *region != Region::AnyReturn) {
            return Rejection{"instrument.anchor", "anchor-shape"};
        }
    } else if (auto bad = parse_anchor(*anchor, *region, c.anchor)) {
        return bad;
    }

    auto spec = obj.find("spec");
    if (spec == obj.end() || !spec->is_object()) {
        return Rejection{"spec", "missing-spec"};
    }
    for (const auto &[key, value] : spec->items()) {
        if (key != "expr") {
            return Rejection{"spec." + key, "unknown-field"};
        }
    }
    auto expr = spec->find("expr");
    if (expr == spec->end() || !expr->is_string() || expr->get<std::string>().find_first_not_of(" \t") ==
                                                          std::string::npos) {
        return Rejection{"spec.expr", "empty-spec"};
    }
    c.expr = expr->get<std::string>();

    auto intent = obj.find("intent");
    if (intent != obj.end()) {
        if (!intent->is_string()) {
            return Rejection{"intent", "intent-not-string"};
        }
        c.intent = intent->get<std::string>();
    }

    std::vector<SafetyViolation> unsafe = check_expr_safety(c.expr, c.region);
    if (!unsafe.empty()) {
        return Rejection{"spec.expr", unsafe.front().reason};
    }
    return std::nullopt;
}

} // namespace

const std::array<Category, 9> &all_categories() { return kCategories; }
const std::array<Region, 8> &all_regions() { return kRegions; }

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Region r) { return kRegionNames[static_cast<std::size_t>(r)]; }

std::optional<Category> parse_category(std::string_view s) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == s) {
            return kCategories[i];
        }
    }
    return std::nullopt;
}

std::optional<Region> parse_region(std::string_view s) {
    for (std::size_t i = 0; i < kRegionNames.size(); ++i) {
        if (kRegionNames[i] == s) {
            return kRegions[i];
        }
    }
    return std::nullopt;
}

bool is_temporal(Category c) {
    return c == Category::TemporalCallSnapshot || c == Category::TemporalUntilOverwritten ||
           c == Category::TemporalResourceLifetime;
}

double region_weight(Region r) { return kRegionWeights[static_cast<std::size_t>(r)]; }

ValidationResult validate_ir(std::string_view document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error &e) {
        throw DocumentUnparseable(std::string("not JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw DocumentUnparseable("document is not a JSON object");
    }
    auto version = doc.find("version");
    if (version != doc.end() && (!version->is_string() || version->get<std::string>() != "cbfl-ir")) {
        throw DocumentUnparseable("unsupported document version");
    }
    auto list = doc.find("constraints");
    if (list == doc.end() || !list->is_array()) {
        throw DocumentUnparseable("document has no constraints array");
    }

    ValidationResult result;
    std::set<std::string> seen;
    std::size_t ordinal = 0;
    for (const nlohmann::json &item : *list) {
        ++ordinal;
        Constraint c;
        std::string id = "c" + std::to_string(ordinal);
        if (item.is_object()) {
            auto it = item.find("id");
            if (it != item.end() && it->is_string() && !it->get<std::string>().empty()) {
                id = it->get<std::string>();
            } else if (it != item.end()) {
                result.rejected.push_back({ordinal, id, "id", "id-not-string"});
                continue;
            }
        }
        c.id = id;
        if (std::optional<Rejection> bad = parse_constraint(item, c)) {
            result.rejected.push_back({ordinal, id, bad->field, bad->reason});
            continue;
        }
        if (!seen.insert(id).second) {
            result.rejected.push_back({ordinal, id, "id", "duplicate-id"});
            continue;
        }
        result.accepted.push_back(std::move(c));
    }
    return result;
}

nlohmann::json to_json(const Constraint &c) {
    nlohmann::json anchor = nlohmann::json::object();
    if (c.anchor.var) {
        anchor["var"] = *c.anchor.var;
    }
    if (c.anchor.loop_id) {
        anchor["loop_id"] = *c.anchor.loop_id;
    }
    if (c.anchor.line) {
        anchor["line"] = *c.anchor.line;
    }
    return {
        {"id", c.id},
        {"category", std::string(to_string(c.category))},
        {"instrument", {{"region", std::string(to_string(c.region))}, {"anchor", anchor}}},
        {"spec", {{"expr", c.expr}}},
        {"intent", c.intent},
    };
}

nlohmann::json to_json(const Reject &r) {
    return {{"ordinal", r.ordinal}, {"id", r.id}, {"field", r.field}, {"reason", r.reason}};
}

} // namespace cbfl::ir
