#include "cbfl/instrument/instrument.hpp"

#include "cbfl/python/parser.hpp"
#include "cbfl/python/visit.hpp"
#include "cbfl/ssa/view.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace cbfl::instrument {

using ir::Category;
using ir::GroundedCheck;
using ir::InsertionSite;
using ir::Placement;

namespace {

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '\\' || c == '"') {
            out += '\\';
        }
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

std::string shim_call(std::string_view fn, std::string_view cid, std::string_view body) {
    std::string out(kShimAlias);
    out += '.';
    out += fn;
    out += '(';
    out += quote(cid);
    out += ", lambda: ";
    out += body;
    out += ')';
    return out;
}

struct Line {
    std::string text;
    int priority = 1;
    bool is_check = false;
    CheckSite site;
};

// All text destined for one insertion point.
struct Slot {
    InsertionSite site;
    std::vector<Line> lines;
};

struct SlotKey {
    std::size_t offset;
    Placement placement;
    std::string indent;
    friend auto operator<=>(const SlotKey &, const SlotKey &) = default;
};

class Planner {
public:
    Planner(const ssa::SsaProgram &ssa) : ssa_(ssa), view_(ssa) {}

    std::vector<PlannedEdit> run(const std::vector<GroundedCheck> &checks) {
        if (checks.empty()) {
            return {};
        }
        std::set<std::string> audited;
        std::set<std::string> snapshotted;
        for (const GroundedCheck &c : checks) {
            switch (c.category) {
            case Category::TemporalCallSnapshot:
                if (snapshotted.insert(c.constraint_id).second) {
                    add(ir::entry_site(view_), {shim_call("snapshot", c.constraint_id, c.expr), 0, false, {}});
                }
                add(c.site, check_line(c, "__cbfl.snapshot_of(" + quote(c.constraint_id) + ") == (" + c.expr + ")"));
                break;
            case Category::TemporalUntilOverwritten:
            case Category::TemporalResourceLifetime:
                add(c.site, {shim_call("track", c.constraint_id, c.expr), 1, false, {}});
                if (audited.insert(c.constraint_id).second) {
                    Line audit = check_line(c, "__cbfl.tracked(" + quote(c.constraint_id) + ")");
                    audit.priority = 2;
                    for (const InsertionSite &site : ir::return_sites(view_)) {
                        add(site, audit);
                    }
                }
                break;
            default:
                add(c.site, check_line(c, c.expr));
                break;
            }
        }
        std::vector<PlannedEdit> edits;
        edits.push_back(import_edit());
        merge(edits);
        return edits;
    }

private:
    static Line check_line(const GroundedCheck &c, const std::string &expr) {
        return {check_call(c.constraint_id, expr), 1, true, {c.constraint_id, c.site_line}};
    }

    void add(const InsertionSite &site, Line line) {
        Slot &slot = slots_[{site.offset, site.placement, site.indent}];
        slot.site = site;
        slot.lines.push_back(std::move(line));
    }

    PlannedEdit import_edit() const {
        py::Module module = py::parse_module(ssa_.ssa_text);
        std::size_t offset = 0;
        int last_line = 0;
        for (std::size_t i = 0; i < module.body.size(); ++i) {
            const py::Stmt &s = module.body[i];
            std::string_view text = module.source.substr(s.range.begin, s.range.size());
            bool future = s.kind == py::StmtKind::ImportFrom && text.substr(0, 4) == "from" &&
                          text.find("__future__") != std::string_view::npos;
            if (future || (i == 0 && py::is_docstring(s))) {
                last_line = s.end_line;
                continue;
            }
            break;
        }
        PlannedEdit e;
        std::string line = "import " + std::string(kShimModule) + " as " + std::string(kShimAlias);
        if (last_line == 0) {
            e.edit = {{offset, offset}, line + "\n"};
        } else {
            offset = view_.lines().line_end(last_line);
            e.edit = {{offset, offset}, "\n" + line};
        }
        return e;
    }

    // Text bound for one offset. Chunks at the same offset are composed into
    // a single edit: import first, then deeper indents, then the replacement.
    struct Chunk {
        std::size_t width = 0;
        int rank = 1; // 0 import, 1 insertion, 2 replacement
        std::string indent;
        PlannedEdit edit;
    };

    void merge(std::vector<PlannedEdit> &out) {
        std::map<std::size_t, std::vector<Chunk>> chunks;
        PlannedEdit import = out.front();
        out.clear();
        chunks[import.edit.range.begin].push_back({0, 0, {}, std::move(import)});
        for (auto &[key, slot] : slots_) {
            std::sort(slot.lines.begin(), slot.lines.end(), [](const Line &a, const Line &b) {
                return std::tie(a.priority, a.text, a.site.site_line) < std::tie(b.priority, b.text, b.site.site_line);
            });
            slot.lines.erase(std::unique(slot.lines.begin(), slot.lines.end(),
                                         [](const Line &a, const Line &b) {
                                             return a.priority == b.priority && a.text == b.text &&
                                                    a.site.site_line == b.site.site_line;
                                         }),
                             slot.lines.end());
            if (key.placement == Placement::Return) {
                emit_return(slot, chunks);
                continue;
            }
            Chunk c;
            c.indent = slot.site.indent;
            append_insert(slot, c.edit);
            chunks[key.offset].push_back(std::move(c));
        }
        for (auto &[offset, group] : chunks) {
            std::stable_sort(group.begin(), group.end(), [](const Chunk &a, const Chunk &b) {
                if (a.rank != b.rank) {
                    return a.rank < b.rank;
                }
                return a.indent.size() > b.indent.size();
            });
            PlannedEdit e;
            e.edit.range = {offset, offset};
            for (const Chunk &c : group) {
                for (const auto &[pos, site] : c.edit.checks) {
                    e.checks.emplace_back(e.edit.replacement.size() + pos, site);
                }
                e.edit.replacement += c.edit.edit.replacement;
                e.edit.range.end = std::max(e.edit.range.end, offset + c.width);
            }
            out.push_back(std::move(e));
        }
    }

    static void push_line(PlannedEdit &e, const Line &line) {
        if (line.is_check) {
            e.checks.emplace_back(e.edit.replacement.size(), line.site);
        }
        e.edit.replacement += line.text;
    }

    static void append_insert(const Slot &slot, PlannedEdit &e) {
        const std::string &indent = slot.site.indent;
        std::string &r = e.edit.replacement;
        switch (slot.site.placement) {
        case Placement::Before:
            for (const Line &line : slot.lines) {
                push_line(e, line);
                r += "\n" + indent;
            }
            break;
        case Placement::After:
            for (const Line &line : slot.lines) {
                r += "\n" + indent;
                push_line(e, line);
            }
            break;
        case Placement::ImplicitReturn:
            r += "\n" + indent + "result = None  # " + std::string(kMarker);
            for (const Line &line : slot.lines) {
                r += "\n" + indent;
                push_line(e, line);
            }
            break;
        case Placement::Return:
            break;
        }
    }

    void emit_return(const Slot &slot, std::map<std::size_t, std::vector<Chunk>> &chunks) const {
        const InsertionSite &site = slot.site;
        std::string_view stmt = std::string_view(ssa_.ssa_text).substr(site.offset, site.end - site.offset);
        const std::string &indent = site.indent;
        if (stmt == "return") {
            Chunk c;
            c.indent = indent;
            c.edit.edit.replacement = "result = None  # " + std::string(kMarker) + "\n" + indent;
            for (const Line &line : slot.lines) {
                push_line(c.edit, line);
                c.edit.edit.replacement += "\n" + indent;
            }
            chunks[site.offset].push_back(std::move(c));
            return;
        }
        Chunk keyword;
        keyword.width = 6;
        keyword.rank = 2;
        keyword.indent = indent;
        keyword.edit.edit.replacement = "result =";
        chunks[site.offset].push_back(std::move(keyword));
        Chunk tail;
        tail.indent = indent;
        std::size_t end_offset = view_.lines().line_end(view_.lines().line_of(site.end - 1));
        for (const Line &line : slot.lines) {
            tail.edit.edit.replacement += "\n" + indent;
            push_line(tail.edit, line);
        }
        tail.edit.edit.replacement += "\n" + indent + "return result  " + std::string(kReturnTag);
        chunks[end_offset].push_back(std::move(tail));
    }

    const ssa::SsaProgram &ssa_;
    ssa::SsaView view_;
    std::map<SlotKey, Slot> slots_;
};

} // namespace

std::string check_call(std::string_view cid, std::string_view expr) { return shim_call("check", cid, expr); }

std::string rewrite_result_binding(std::string_view return_stmt_text, std::string_view indent,
                                   const std::vector<std::string> &check_lines) {
    std::string in(indent);
    std::string out;
    std::string_view rest = return_stmt_text.substr(6);
    if (rest.find_first_not_of(" \t") == std::string_view::npos) {
        out = "result = None  # " + std::string(kMarker);
        for (const std::string &line : check_lines) {
            out += "\n" + in + line;
        }
        return out + "\n" + in + "return";
    }
    out = "result =" + std::string(rest);
    for (const std::string &line : check_lines) {
        out += "\n" + in + line;
    }
    return out + "\n" + in + "return result  " + std::string(kReturnTag);
}

std::vector<PlannedEdit> plan_edits(const std::vector<GroundedCheck> &checks, const ssa::SsaProgram &ssa) {
    return Planner(ssa).run(checks);
}

InstrumentedProgram apply_edits(std::string_view ssa_text, std::vector<PlannedEdit> edits) {
    std::stable_sort(edits.begin(), edits.end(), [](const PlannedEdit &a, const PlannedEdit &b) {
        return a.edit.range.begin < b.edit.range.begin;
    });
    std::vector<Edit> plain;
    plain.reserve(edits.size());
    for (const PlannedEdit &e : edits) {
        plain.push_back(e.edit);
    }
    check_non_overlapping(plain);

    InstrumentedProgram out;
    out.text = cbfl::apply_edits(ssa_text, plain);
    std::vector<std::pair<std::size_t, CheckSite>> positions;
    std::ptrdiff_t delta = 0;
    for (const PlannedEdit &e : edits) {
        std::size_t start = e.edit.range.begin + delta;
        for (const auto &[pos, site] : e.checks) {
            positions.emplace_back(start + pos, site);
        }
        delta += static_cast<std::ptrdiff_t>(e.edit.replacement.size()) -
                 static_cast<std::ptrdiff_t>(e.edit.range.size());
    }
    LineTable lines(out.text);
    for (const auto &[pos, site] : positions) {
        out.check_index[lines.line_of(pos)] = site;
    }
    return out;
}

InstrumentedProgram instrument(const std::vector<GroundedCheck> &checks, const ssa::SsaProgram &ssa) {
    return apply_edits(ssa.ssa_text, plan_edits(checks, ssa));
}

std::string strip_instrumentation(std::string_view text) {
    std::vector<std::string_view> kept;
    std::size_t pos = 0;
    bool trailing_newline = !text.empty() && text.back() == '\n';
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        kept.push_back(line);
    }
    std::vector<std::string> out;
    for (std::string_view line : kept) {
        if (line.find(kMarker) == std::string_view::npos) {
            out.emplace_back(line);
            continue;
        }
        if (line.find(kReturnTag) == std::string_view::npos) {
            continue;
        }
        std::string_view indent = line.substr(0, line.find_first_not_of(" \t"));
        for (auto it = out.rbegin(); it != out.rend(); ++it) {
            std::string_view prior = *it;
            if (prior.substr(0, indent.size()) != indent) {
                continue;
            }
            std::string_view body = prior.substr(indent.size());
            if (body.substr(0, 8) == "result =" && body.substr(8, 1) != "=") {
                *it = std::string(indent) + "return" + std::string(body.substr(8));
                break;
            }
        }
    }
    std::string result;
    for (std::size_t i = 0; i < out.size(); ++i) {
        result += out[i];
        if (i + 1 < out.size() || trailing_newline) {
            result += '\n';
        }
    }
    return result;
}

} // namespace cbfl::instrument
