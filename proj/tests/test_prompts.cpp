#include <catch2/catch_amalgamated.hpp>

#include "genrank/prompts.hpp"

#include <random>

using namespace genrank;

namespace {

const std::string& user_content(const PromptBundle& b) {
    REQUIRE(b.messages.size() == 2);
    REQUIRE(b.messages[0].role == Role::system);
    REQUIRE(b.messages[1].role == Role::user);
    return b.messages[1].content;
}

}  // namespace

TEST_CASE("truncate_doc is the identity under budget", "[prompts]") {
    TruncationPolicy policy{10};
    CHECK(truncate_doc("a b", policy) == "a b");
    CHECK(truncate_doc("", policy) == "");
}

TEST_CASE("truncate_doc hard-cuts when there is no whitespace", "[prompts]") {
    std::string text(100, 'x');
    CHECK(truncate_doc(text, TruncationPolicy{1}) == "xxxx…");
}

TEST_CASE("truncate_doc cuts at a whitespace boundary", "[prompts]") {
    // budget 2 -> 8 chars; last whitespace at or before index 8 is after "one"
    std::string out = truncate_doc("one two three four", TruncationPolicy{2});
    CHECK(out == "one two…");
}

TEST_CASE("truncated docs stay within budget + 1", "[prompts][property]") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> len(0, 400);
    std::uniform_int_distribution<int> budget(1, 20);
    std::uniform_int_distribution<int> chr(0, 15);
    const char alphabet[] = "abcd efg  hi\njk\t";
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        int n = len(rng);
        for (int i = 0; i < n; ++i) text += alphabet[chr(rng)];
        TruncationPolicy policy{static_cast<std::size_t>(budget(rng))};
        std::string out = truncate_doc(text, policy);
        CHECK(estimate_tokens(out) <= policy.max_doc_tokens + 1);
        if (estimate_tokens(text) <= policy.max_doc_tokens) CHECK(out == text);
    }
}

TEST_CASE("pointwise prompt carries query, document and the 0-3 instruction", "[prompts]") {
    auto bundle = build_pointwise_prompt(Query{"q1", "cats"}, Document{"d1", "cats purr", {}},
                                         TruncationPolicy{300});
    const std::string& user = user_content(bundle);
    CHECK_THAT(user, Catch::Matchers::ContainsSubstring("Query: cats"));
    CHECK_THAT(user, Catch::Matchers::ContainsSubstring("Document: cats purr"));
    CHECK_THAT(user, Catch::Matchers::ContainsSubstring("Output only an integer from 0 to 3."));
    CHECK(bundle.window_doc_ids.empty());

    auto again = build_pointwise_prompt(Query{"q1", "cats"}, Document{"d1", "cats purr", {}},
                                        TruncationPolicy{300});
    CHECK(again.messages[0].content == bundle.messages[0].content);
    CHECK(again.messages[1].content == bundle.messages[1].content);
}

TEST_CASE("pairwise prompt presents A before B", "[prompts]") {
    Query q{"q1", "cats"};
    Document a{"d1", "text one", {}}, b{"d2", "text two", {}};
    auto bundle = build_pairwise_prompt(q, a, b, TruncationPolicy{300});
    const std::string& user = user_content(bundle);
    auto pos_a = user.find("Passage A:");
    auto pos_b = user.find("Passage B:");
    REQUIRE(pos_a != std::string::npos);
    REQUIRE(pos_b != std::string::npos);
    CHECK(pos_a < pos_b);
    CHECK_THAT(user, Catch::Matchers::ContainsSubstring("Output only the letter A or B."));

    // swapping swaps passage texts but not the instruction
    auto swapped = build_pairwise_prompt(q, b, a, TruncationPolicy{300});
    CHECK_THAT(user_content(swapped), Catch::Matchers::ContainsSubstring("Passage A: text two"));
    CHECK_THAT(user_content(swapped), Catch::Matchers::ContainsSubstring("Output only the letter A or B."));

    CHECK_THROWS_AS(build_pairwise_prompt(q, a, a, TruncationPolicy{300}), ConfigError);
}

TEST_CASE("listwise prompt enumerates 1-based consecutive identifiers", "[prompts]") {
    auto bundle = build_listwise_prompt(Query{"q1", "x"}, {{"d9", "t1"}, {"d4", "t2"}},
                                        TruncationPolicy{300});
    const std::string& user = user_content(bundle);
    CHECK_THAT(user, Catch::Matchers::ContainsSubstring("[1] t1"));
    CHECK_THAT(user, Catch::Matchers::ContainsSubstring("[2] t2"));
    CHECK(bundle.window_doc_ids == std::vector<std::string>{"d9", "d4"});

    CHECK_THROWS_AS(build_listwise_prompt(Query{"q1", "x"}, {{"d9", "t1"}}, TruncationPolicy{300}),
                    ConfigError);

    std::vector<std::pair<std::string, std::string>> big(101, {"d", "t"});
    CHECK_THROWS_AS(build_listwise_prompt(Query{"q1", "x"}, big, TruncationPolicy{300}),
                    ConfigError);
}

TEST_CASE("multi-line document text is flattened onto one prompt line", "[prompts]") {
    auto bundle = build_listwise_prompt(Query{"q1", "x"},
                                        {{"d1", "line one\nline two"}, {"d2", "t"}},
                                        TruncationPolicy{300});
    CHECK_THAT(user_content(bundle), Catch::Matchers::ContainsSubstring("[1] line one line two"));
}

TEST_CASE("shipped template files match the embedded defaults", "[prompts]") {
    PromptTemplateSet shipped = load_templates(GENRANK_TEMPLATES_DIR);
    const PromptTemplateSet& builtin = default_templates();
    CHECK(shipped.version == builtin.version);
    CHECK(shipped.pointwise_system == builtin.pointwise_system);
    CHECK(shipped.pointwise_user == builtin.pointwise_user);
    CHECK(shipped.pairwise_system == builtin.pairwise_system);
    CHECK(shipped.pairwise_user == builtin.pairwise_user);
    CHECK(shipped.listwise_system == builtin.listwise_system);
    CHECK(shipped.listwise_user == builtin.listwise_user);
}
