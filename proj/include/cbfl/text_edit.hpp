#pragma once

#include "cbfl/error.hpp"
#include "cbfl/source_text.hpp"

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace cbfl {

struct Edit {
    SourceRange range;
    std::string replacement;
};

class OverlapError : public Error {
public:
    using Error::Error;
};

inline constexpr std::size_t kNoOrigin = std::numeric_limits<std::size_t>::max();

struct EditedText {
    std::string text;
    // origin[i] is the input offset that produced output byte i, or kNoOrigin
    // for bytes introduced by a zero-width insertion.
    std::vector<std::size_t> origin;
};

// Throws OverlapError if two edits share bytes or an insertion falls strictly
// inside a replaced range. Insertions at the same offset keep their relative
// order from the input list.
void check_non_overlapping(const std::vector<Edit> &edits);

// Applies edits from the highest start offset down so earlier offsets stay
// valid.
std::string apply_edits(std::string_view text, std::vector<Edit> edits);

EditedText apply_edits_tracked(std::string_view text, std::vector<Edit> edits);

} // namespace cbfl
