#pragma once

#include "cbfl/error.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cbfl::ir {

enum class Category {
    Precondition,
    Postcondition,
    ValueRange,
    Relation,
    DerivedConsistency,
    InvariantLoop,
    TemporalCallSnapshot,
    TemporalUntilOverwritten,
    TemporalResourceLifetime,
};

enum class Region { Entry, AnyReturn, AfterDef, BeforeUse, LoopHead, LoopTail, AfterBranch, Line };

const std::array<Category, 9> &all_categories();
const std::array<Region, 8> &all_regions();

std::string_view to_string(Category c);
std::string_view to_string(Region r);
std::optional<Category> parse_category(std::string_view s);
std::optional<Region> parse_region(std::string_view s);

bool is_temporal(Category c);
double region_weight(Region r);

struct Anchor {
    std::optional<std::string> var;
    std::optional<int> loop_id;
    std::optional<int> line;
};

struct Constraint {
    std::string id;
    Category category = Category::Precondition;
    Region region = Region::Entry;
    Anchor anchor;
    std::string expr;
    std::string intent;
};

struct Reject {
    std::size_t ordinal = 0; // 1-based position in the document
    std::string id;
    std::string field;
    std::string reason;
};

struct ValidationResult {
    std::vector<Constraint> accepted;
    std::vector<Reject> rejected;
};

class DocumentUnparseable : public Error {
public:
    using Error::Error;
};

ValidationResult validate_ir(std::string_view document);

nlohmann::json to_json(const Constraint &c);
nlohmann::json to_json(const Reject &r);

} // namespace cbfl::ir
