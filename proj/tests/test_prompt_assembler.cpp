#include "courseassist/prompt_assembler.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace courseassist;
using namespace testing_support;

namespace {

PromptSections full_sections() {
    PromptSections s;
    s.developer_instructions = kDeveloperInstructions;
    s.course_description = "Intro to programming in Python.";
    s.educator_rules = render_educator_rules({"Cite the lecture notes.", "No full solutions."});
    s.active_time_guidance = "Midterm week: keep answers short.";
    s.retrieved_contexts = {{"Lecture 3", "Loops repeat a block of code."}, {"Lecture 4", "Functions group code."}};
    s.history = {{MessageRole::user, "What is a loop?"},
                 {MessageRole::assistant, "A loop repeats code."},
                 {MessageRole::user, "And a function?"},
                 {MessageRole::assistant, "A named block of code."}};
    s.mode_instruction = "Answer general questions about the course.";
    s.follow_up_directive = follow_up_directive_for(FollowUpPolicy::model_decides);
    s.user_question = "How do loops and functions combine? \xE2\x9C\x93";
    return s;
}

constexpr std::size_t kUnbounded = 1u << 30;

} // namespace

TEST_CASE("sections render in fixed order with exact spans") {
    const auto s = full_sections();
    const auto p = assemble(s, kUnbounded);
    const std::vector<std::string> order{"developer_instructions", "course_description", "educator_rules",
                                         "active_time_guidance",   "mode_instruction",   "retrieved_contexts",
                                         "history",                "follow_up_directive", "user_question"};
    REQUIRE(p.section_spans.size() == order.size());
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(p.section_spans[i].first == order[i]);
    CHECK(p.total_chars == count_code_points(p.rendered));
    CHECK(p.dropped_sections.empty());

    // spans are code point ranges; slicing them out yields the section text
    const auto slice = [&](const CharRange& r) {
        const auto b = utf8::byte_offset(p.rendered, r.start);
        return p.rendered.substr(b, utf8::byte_offset(p.rendered, r.end) - b);
    };
    CHECK(slice(*p.span("user_question")) == "## Student question\n" + s.user_question);
    CHECK(slice(*p.span("mode_instruction")) == "## Mode\n" + s.mode_instruction);
    CHECK(p.span("history")->end <= p.span("user_question")->start);
    CHECK(p.rendered.find("[1] Lecture 3\nLoops repeat") != std::string::npos);
    CHECK(p.rendered.find("Student: What is a loop?\nAssistant: A loop repeats code.") != std::string::npos);
    CHECK(p.rendered.size() >= s.user_question.size());
    CHECK(p.rendered.substr(p.rendered.size() - s.user_question.size()) == s.user_question);
}

TEST_CASE("empty optional sections are omitted") {
    PromptSections s;
    s.developer_instructions = "Be helpful.";
    s.mode_instruction = "General.";
    s.user_question = "Why?";
    const auto p = assemble(s, kUnbounded);
    CHECK(p.rendered == "## Instructions\nBe helpful.\n\n## Mode\nGeneral.\n\n## Student question\nWhy?");
    CHECK(p.total_chars == p.rendered.size());
}

TEST_CASE("assembly is byte-deterministic") {
    const auto s = full_sections();
    const auto first = assemble(s, 400);
    for (int i = 0; i < 100; ++i) {
        const auto again = assemble(s, 400);
        CHECK(again.rendered == first.rendered);
        CHECK(again.section_spans == first.section_spans);
    }
}

TEST_CASE("truncation drops exactly the minimal prefix of the drop order") {
    const auto s = full_sections();
    const std::size_t elements = s.history.size() / 2 + s.retrieved_contexts.size() + 4;
    const auto full = assemble(s, kUnbounded).total_chars;
    const auto floor = assemble(without_first(s, elements), kUnbounded).total_chars;

    std::vector<std::size_t> budgets;
    for (std::size_t b = floor; b <= full + 5; b += std::max<std::size_t>(1, (full - floor) / 40)) budgets.push_back(b);
    budgets.push_back(full);
    budgets.push_back(full - 1);
    for (const auto budget : budgets) {
        std::size_t expect = 0;
        while (assemble(without_first(s, expect), kUnbounded).total_chars > budget) ++expect;
        const auto got = assemble(s, budget);
        const auto want = assemble(without_first(s, expect), kUnbounded);
        CAPTURE(budget);
        CHECK(got.total_chars <= budget);
        CHECK(got.rendered == want.rendered);
        CHECK(got.dropped_history_rounds + got.dropped_contexts + got.dropped_sections.size() == expect);
        CHECK(got.rendered.find(s.user_question) != std::string::npos);
        CHECK(got.rendered.find(s.mode_instruction) != std::string::npos);
        CHECK(got.rendered.find(kDeveloperInstructions) != std::string::npos);
    }
}

TEST_CASE("drop order: history oldest first, then lowest-ranked context, then sections") {
    const auto s = full_sections();
    const auto full = assemble(s, kUnbounded).total_chars;
    auto p = assemble(s, full - 1);
    CHECK(p.dropped_history_rounds == 1);
    CHECK(p.rendered.find("What is a loop?") == std::string::npos);
    CHECK(p.rendered.find("And a function?") != std::string::npos);

    const auto no_history = assemble(without_first(s, 2), kUnbounded).total_chars;
    p = assemble(s, no_history - 1);
    CHECK(p.dropped_contexts == 1);
    CHECK(p.rendered.find("Lecture 4") == std::string::npos);
    CHECK(p.rendered.find("Lecture 3") != std::string::npos);

    const auto no_context = assemble(without_first(s, 4), kUnbounded).total_chars;
    p = assemble(s, no_context - 1);
    REQUIRE(p.dropped_sections.size() == 1);
    CHECK(p.dropped_sections[0] == "follow_up_directive");
}

TEST_CASE("budget too small for the fixed sections") {
    const auto s = full_sections();
    const auto floor = assemble(without_first(s, 100), kUnbounded).total_chars;
    CHECK_NOTHROW(assemble(s, floor));
    try {
        assemble(s, floor - 1);
        FAIL("expected budget_too_small");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::budget_too_small);
    }
    auto empty = s;
    empty.user_question = "  ";
    CHECK_THROWS_AS(assemble(empty, kUnbounded), Error);
}

TEST_CASE("budget counts code points, not bytes") {
    PromptSections s;
    s.developer_instructions = "x";
    s.mode_instruction = "y";
    s.user_question = "\xC3\xA9\xC3\xA9\xC3\xA9";  // 3 code points, 6 bytes
    const auto p = assemble(s, kUnbounded);
    CHECK(p.total_chars == p.rendered.size() - 3);
    CHECK_NOTHROW(assemble(s, p.total_chars));
}

namespace {

Message msg(MessageRole role, std::string text, bool error = false) {
    Message m;
    m.role = role;
    m.text = std::move(text);
    if (role == MessageRole::assistant) {
        if (error) m.metadata.error = "deadline_exceeded";
        else m.metadata.dispatch = DispatchDecision{};
    }
    return m;
}

} // namespace

TEST_CASE("history selection keeps the last complete rounds and skips error turns") {
    Conversation c;
    c.messages = {msg(MessageRole::user, "q1"), msg(MessageRole::assistant, "a1"),
                  msg(MessageRole::user, "q2"), msg(MessageRole::assistant, "", true),
                  msg(MessageRole::user, "q3"), msg(MessageRole::assistant, "a3"),
                  msg(MessageRole::user, "q4"), msg(MessageRole::assistant, "a4")};
    auto h = select_history(c, 6);
    REQUIRE(h.size() == 6);
    CHECK(h[0].text == "q1");
    CHECK(h[2].text == "q3");
    h = select_history(c, 2);
    REQUIRE(h.size() == 4);
    CHECK(h[0].text == "q3");
    CHECK(h[3].text == "a4");
    CHECK(select_history(c, 0).empty());
}

TEST_CASE("time guidance is active inside its half-open window") {
    CourseConfig cfg = basic_course("c");
    cfg.time_guidance = {{parse_timestamp("2024-03-01"), parse_timestamp("2024-03-08"), "Exam week."},
                         {parse_timestamp("2024-03-05"), parse_timestamp("2024-03-06"), "Quiz day."}};
    CHECK(active_guidance(cfg, parse_timestamp("2024-02-29T23:59:59Z")).empty());
    CHECK(active_guidance(cfg, parse_timestamp("2024-03-01")) == "Exam week.");
    CHECK(active_guidance(cfg, parse_timestamp("2024-03-05T12:00:00Z")) == "Exam week.\nQuiz day.");
    CHECK(active_guidance(cfg, parse_timestamp("2024-03-08")).empty());
}

TEST_CASE("mode instruction clauses") {
    const auto cfg = basic_course("c");
    DispatchDecision d;
    d.mode = ConversationMode::homework;
    auto text = mode_instruction_for(d, cfg);
    CHECK(text.find(kHintOnlyClause) != std::string::npos);
    CHECK(text.find(kAdvisoryClause) == std::string::npos);

    d.mode = ConversationMode::practice;
    text = mode_instruction_for(d, cfg);
    CHECK(text.find(kExerciseClause) != std::string::npos);
    CHECK(text.find(kHintOnlyClause) == std::string::npos);

    d.mode = ConversationMode::general;
    d.advisory = true;
    text = mode_instruction_for(d, cfg);
    CHECK(text.find(kHintOnlyClause) != std::string::npos);
    CHECK(text.find(kAdvisoryClause) != std::string::npos);

    d.advisory = false;
    text = mode_instruction_for(d, cfg);
    CHECK(text.find(kHintOnlyClause) == std::string::npos);
    CHECK_FALSE(follow_up_directive_for(FollowUpPolicy::never).has_value());
    CHECK(follow_up_directive_for(FollowUpPolicy::always).has_value());
}
