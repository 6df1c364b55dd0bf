#include "cbfl/text_edit.hpp"

#include <algorithm>

namespace cbfl {

namespace {

void sort_edits(std::vector<Edit> &edits) {
    std::stable_sort(edits.begin(), edits.end(), [](const Edit &a, const Edit &b) {
        if (a.range.begin != b.range.begin) {
            return a.range.begin < b.range.begin;
        }
        return a.range.size() < b.range.size();
    });
}

void validate_sorted(std::string_view text, const std::vector<Edit> &edits) {
    std::size_t reach = 0;
    for (const Edit &e : edits) {
        if (e.range.end < e.range.begin || e.range.end > text.size()) {
            throw OverlapError("edit range [" + std::to_string(e.range.begin) + ", " + std::to_string(e.range.end) +
                               ") outside text of size " + std::to_string(text.size()));
        }
        if (e.range.begin < reach) {
            throw OverlapError("overlapping edits at offset " + std::to_string(e.range.begin));
        }
        reach = std::max(reach, e.range.end);
    }
}

} // namespace

void check_non_overlapping(const std::vector<Edit> &edits) {
    std::vector<Edit> sorted = edits;
    sort_edits(sorted);
    std::size_t reach = 0;
    for (const Edit &e : sorted) {
        if (e.range.begin < reach) {
            throw OverlapError("overlapping edits at offset " + std::to_string(e.range.begin));
        }
        reach = std::max(reach, e.range.end);
    }
}

std::string apply_edits(std::string_view text, std::vector<Edit> edits) {
    sort_edits(edits);
    validate_sorted(text, edits);
    std::string out(text);
    for (auto it = edits.rbegin(); it != edits.rend(); ++it) {
        out.replace(it->range.begin, it->range.size(), it->replacement);
    }
    return out;
}

EditedText apply_edits_tracked(std::string_view text, std::vector<Edit> edits) {
    sort_edits(edits);
    validate_sorted(text, edits);
    EditedText result;
    result.text.reserve(text.size());
    result.origin.reserve(text.size());
    std::size_t pos = 0;
    for (const Edit &e : edits) {
        for (; pos < e.range.begin; ++pos) {
            result.text.push_back(text[pos]);
            result.origin.push_back(pos);
        }
        std::size_t src = e.range.size() == 0 ? kNoOrigin : e.range.begin;
        result.text += e.replacement;
        result.origin.insert(result.origin.end(), e.replacement.size(), src);
        pos = e.range.end;
    }
    for (; pos < text.size(); ++pos) {
        result.text.push_back(text[pos]);
        result.origin.push_back(pos);
    }
    return result;
}

} // namespace cbfl
