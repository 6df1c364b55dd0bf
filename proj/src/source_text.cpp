#include "cbfl/source_text.hpp"

#include <algorithm>

namespace cbfl {

LineTable::LineTable(std::string_view text) : text_(text) {
    starts_.push_back(0);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n' && i + 1 < text.size()) {
            starts_.push_back(i + 1);
        }
    }
}

int LineTable::line_of(std::size_t offset) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
    return static_cast<int>(it - starts_.begin());
}

std::size_t LineTable::line_start(int line) const {
    if (line < 1) {
        return 0;
    }
    if (line > line_count()) {
        return text_.size();
    }
    return starts_[static_cast<std::size_t>(line - 1)];
}

std::size_t LineTable::line_end(int line) const {
    std::size_t start = line_start(line);
    std::size_t nl = text_.find('\n', start);
    return nl == std::string_view::npos ? text_.size() : nl;
}

std::string_view LineTable::line_text(int line) const {
    std::size_t start = line_start(line);
    return text_.substr(start, line_end(line) - start);
}

std::string_view LineTable::indentation(int line) const {
    std::string_view text = line_text(line);
    std::size_t n = text.find_first_not_of(" \t");
    return n == std::string_view::npos ? text : text.substr(0, n);
}

} // namespace cbfl
