#include "cbfl/inference/inference.hpp"

#include "cbfl/ir/constraint.hpp"
#include "cbfl/ir/safety.hpp"

#include <openssl/evp.h>

#include <cstdio>

namespace cbfl::inference {

namespace {

constexpr std::string_view kTask = R"(You are given one buggy function and a few passing/failing tests.
Your task: propose semantic constraints that (a) reflect intended
behavior and (b) discriminate failing tests from passing tests.

Output format (STRICT): Output only valid JSON matching this schema:
{ "version": "cbfl-ir",
  "constraints": [{
    "id": "<unique id>",
    "category": "<CATEGORY>",
    "instrument": {
      "region": "<REGION>",
      "anchor": { ... } },
    "spec": { "expr": "<boolean expression>" },
    "intent": "<one sentence>"
  }]
}
)";

std::string numbered(std::string_view text) {
    std::string out;
    int line = 1;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view l = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        char prefix[16];
        std::snprintf(prefix, sizeof prefix, "%4d | ", line++);
        out += prefix;
        out += l;
        out += '\n';
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
    }
    return out;
}

std::string ensure_newline(std::string s) {
    if (!s.empty() && s.back() != '\n') {
        s += '\n';
    }
    return s;
}

} // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &size, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < size; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string PromptBundle::text() const {
    return task_and_schema + "\n" + anchor_rules + "\n" + program_section + "\n" + tests_section;
}

std::string PromptBundle::hash() const { return sha256_hex(text()); }

std::string fixture_key(Namespace ns, std::string_view prompt_text) {
    std::string digest = sha256_hex(prompt_text);
    return ns == Namespace::Patches ? "patch:" + digest : digest;
}

PromptBundle build_prompt(const ssa::SourceUnit &unit, const ssa::SsaProgram &ssa,
                          const std::vector<TestCaseDoc> &tests) {
    if (tests.empty()) {
        throw EmptyTests();
    }
    PromptBundle p;

    p.task_and_schema = std::string(kTask);
    p.task_and_schema += "\nCATEGORY is one of:";
    for (ir::Category c : ir::all_categories()) {
        p.task_and_schema += " ";
        p.task_and_schema += ir::to_string(c);
    }
    p.task_and_schema += "\nREGION is one of:";
    for (ir::Region r : ir::all_regions()) {
        p.task_and_schema += " ";
        p.task_and_schema += ir::to_string(r);
    }
    p.task_and_schema += "\n";

    p.anchor_rules = "Anchor rules (grounded to SSA form):\n"
                     "  ENTRY:         anchor = {}  (checked before the first statement)\n"
                     "  ANY_RETURN:    anchor = {}  (checked at every return; `result` is the returned value)\n"
                     "  AFTER_DEF:     anchor = {\"var\": \"<ssa_name>\"}  (e.g. \"x__2\")\n"
                     "  BEFORE_USE:    anchor = {\"var\": \"<ssa_name>\"}  (one check per use site)\n"
                     "  LOOP_HEAD:     anchor = {\"loop_id\": <int>}  (start of each iteration)\n"
                     "  LOOP_TAIL:     anchor = {\"loop_id\": <int>}  (end of each iteration)\n"
                     "  AFTER_BRANCH:  anchor = {\"line\": <int>}  (after the conditional ending at that line)\n"
                     "  LINE:          anchor = {\"line\": <int>}  (after the given source line)\n"
                     "For AFTER_DEF and BEFORE_USE, anchor.var must be the SSA-versioned name from the\n"
                     "SSA form, not the original variable name, and spec.expr must use SSA-versioned names.\n"
                     "For LOOP_HEAD and LOOP_TAIL, loop_id must be the integer from the `# loop__id: N`\n"
                     "annotation in the SSA form.\n"
                     "ENTRY constraints use the original parameter names.\n"
                     "Expressions are a safe subset of Python: comparisons, boolean operators, arithmetic,\n"
                     "subscripts, comprehensions, and calls to";
    bool first = true;
    for (std::string_view fn : ir::kAllowedCalls) {
        p.anchor_rules += first ? " " : ", ";
        p.anchor_rules += fn;
        first = false;
    }
    p.anchor_rules += ".\nNo assignments, attribute access, imports, lambdas or other calls.\n";

    p.program_section = "### Program:\n" + numbered(unit.text) + "\n### SSA Form\n" +
                        "# SSA variable -> original name (defined at source byte)\n" + ssa::render_def_map(ssa) +
                        ensure_newline(ssa.ssa_text);

    std::string passing = "### Passing Tests:\n";
    std::string failing = "### Failing Tests with Errors:\n";
    bool any_passing = false;
    bool any_failing = false;
    for (const TestCaseDoc &t : tests) {
        std::string entry = "## " + t.test_id + "\n" + ensure_newline(t.input_repr);
        if (t.kind == TestKind::Passing) {
            passing += entry + "# expected: " + ensure_newline(t.expected_or_traceback);
            any_passing = true;
        } else {
            failing += entry + "# error:\n" + ensure_newline(t.expected_or_traceback);
            any_failing = true;
        }
    }
    p.tests_section = passing + (any_passing ? "" : "none\n") + "\n" + failing + (any_failing ? "" : "none\n");
    return p;
}

} // namespace cbfl::inference
