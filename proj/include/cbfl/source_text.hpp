#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cbfl {

// Half-open byte range [begin, end) into a UTF-8 buffer.
struct SourceRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(std::size_t offset) const { return offset >= begin && offset < end; }
    friend bool operator==(const SourceRange &, const SourceRange &) = default;
};

// Line table over a text buffer. Lines are 1-based, offsets 0-based bytes.
class LineTable {
public:
    explicit LineTable(std::string_view text);

    int line_count() const { return static_cast<int>(starts_.size()); }
    int line_of(std::size_t offset) const;
    std::size_t line_start(int line) const;
    // Offset of the '\n' terminating `line`, or the buffer size for the last
    // unterminated line.
    std::size_t line_end(int line) const;
    std::string_view line_text(int line) const;
    // Leading whitespace of `line`.
    std::string_view indentation(int line) const;

private:
    std::string_view text_;
    std::vector<std::size_t> starts_;
};

} // namespace cbfl
