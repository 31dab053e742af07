#include "courseassist/response_processor.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace courseassist;
using namespace testing_support;

TEST_CASE("fenced blocks become code or diagram segments") {
    const std::string raw = "Intro line\n```python\nfor i in range(3):\n    print(i)\n```\nMiddle\n```mermaid\ngraph TD; A-->B\n```\nEnd";
    const auto s = segment(raw);
    REQUIRE(s.size() == 5);
    CHECK(s[0].kind == SegmentKind::text);
    CHECK(s[0].content == "Intro line");
    CHECK(s[1].kind == SegmentKind::code);
    CHECK(s[1].language == "python");
    CHECK(s[1].content == "for i in range(3):\n    print(i)");
    CHECK(s[2].content == "Middle");
    CHECK(s[3].kind == SegmentKind::diagram_placeholder);
    CHECK(s[3].language == "mermaid");
    CHECK(s[4].content == "End");
    CHECK(reassemble(s) == raw);
}

TEST_CASE("unbalanced and empty fences stay text") {
    auto s = segment("before\n```js\nlet x = 1;");
    REQUIRE(s.size() == 2);
    CHECK(s[1].kind == SegmentKind::text);
    CHECK(s[1].content == "```js\nlet x = 1;");

    s = segment("```\n```");
    REQUIRE(s.size() == 1);
    CHECK(s[0].kind == SegmentKind::text);

    s = segment("");
    REQUIRE(s.size() == 1);
    CHECK(s[0].content.empty());
}

TEST_CASE("diagram languages") {
    for (auto l : {"mermaid", "PlantUML", "graphviz", "dot", "diagram"}) CHECK(is_diagram_language(l));
    for (auto l : {"python", "", "mermaidx"}) CHECK_FALSE(is_diagram_language(l));
}

TEST_CASE("segmentation round-trips arbitrary fence soup") {
    SeededRng rng(17);
    const std::vector<std::string> pieces{"```", "```py", "```mermaid", "``` ", "text", "x = 1", "", "  ```",
                                          "````", "\xC3\xA9t\xC3\xA9", "```dot extra"};
    for (int i = 0; i < 2000; ++i) {
        std::string raw;
        const auto lines = rng.below(12);
        for (std::uint64_t l = 0; l < lines; ++l) {
            if (l) raw += '\n';
            raw += pieces[rng.below(pieces.size())];
        }
        if (rng.below(4) == 0) raw += '\n';
        const auto segs = segment(raw);
        CHECK(reassemble(segs) == raw);
        for (const auto& s : segs) {
            if (s.kind != SegmentKind::text) CHECK_FALSE(s.content.empty());
        }
    }
}

TEST_CASE("follow-up extraction takes the final question sentence") {
    const auto f = [](std::string_view raw) { return extract_follow_up(raw, FollowUpPolicy::model_decides); };
    CHECK(f("Loops repeat code.\nWhat would happen if the condition never became false?") ==
          "What would happen if the condition never became false?");
    CHECK(f("Good work. Can you try n = 5?\n\n") == "Can you try n = 5?");
    CHECK(f("Is this a question? No, it is a statement.") == std::nullopt);
    CHECK(f("What is recursion?\nIt calls itself.") == std::nullopt);
    CHECK(f("") == std::nullopt);
    CHECK(f("Why?") == "Why?");
    CHECK(extract_follow_up("Ready to try?", FollowUpPolicy::never) == std::nullopt);
    CHECK(extract_follow_up("Ready to try?", FollowUpPolicy::always) == "Ready to try?");
}

TEST_CASE("references: one per document in rank order, links into the course") {
    KnowledgeStore store(std::make_shared<HashEmbedder>(), 10);
    store.add_course("cs1");
    DocumentInput a{"cs1", "Lecture 1", DocumentKind::lecture, "alpha beta gamma delta epsilon", {}, {}};
    DocumentInput b{"cs1", "Homework 1", DocumentKind::homework, "zeta eta theta", {}, {}};
    const auto da = store.ingest_document(a);
    const auto db = store.ingest_document(b);
    const std::vector<RetrievalResult> results{{db + ":0", db, 0.9, 1}, {da + ":1", da, 0.8, 2},
                                               {da + ":0", da, 0.7, 3}, {"doc-404:0", "doc-404", 0.6, 4}};
    std::vector<std::string> warnings;
    static std::vector<std::string>* sink = nullptr;
    sink = &warnings;
    set_log_sink([](std::string_view m) { sink->emplace_back(m); });
    const auto refs = attach_references(results, store);
    set_log_sink(nullptr);
    REQUIRE(refs.size() == 2);
    CHECK(refs[0].document_id == db);
    CHECK(refs[0].title == "Homework 1");
    CHECK(refs[0].link == "/courses/cs1/documents/" + db);
    CHECK(refs[1].chunk_id == da + ":1");
    CHECK(warnings.size() == 1);

    const auto r = process_response("See the notes.\nWhich part is unclear?", results, store, FollowUpPolicy::model_decides);
    CHECK(r.disclaimer == "The responses may contain incorrect information");
    CHECK(r.follow_up_question == "Which part is unclear?");
    CHECK(r.references.size() == 2);
}
