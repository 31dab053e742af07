#include "courseassist/annotation.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace courseassist;
using namespace testing_support;

namespace {

const std::string kHeader =
    "conversation_id,course_id,mode,question_index,bloom,correctness,grammatical_error,polite,off_topic,"
    "has_example,llm_question_present,llm_question_answered,annotator_id\n";

Annotation row(const std::string& course, Correctness c, BloomLevel b = BloomLevel::understand) {
    Annotation a;
    a.conversation_id = "c-" + course;
    a.course_id = course;
    a.correctness = c;
    a.bloom = b;
    return a;
}

std::string to_csv(const std::vector<Annotation>& rows) {
    std::ostringstream out;
    write_annotations_csv(out, rows);
    return out.str();
}

} // namespace

TEST_CASE("31 grammatical errors in 200 give 15.5 percent") {
    std::vector<Annotation> rows;
    for (int i = 0; i < 200; ++i) {
        auto a = row("cs1", i % 8 == 0 ? Correctness::unhelpful : Correctness::correct_helpful);
        a.grammatical_error = i < 31;
        rows.push_back(a);
    }
    const auto t = aggregate_annotations(rows);
    CHECK(t.total == 200);
    CHECK(t.linguistic.at("grammatical_error").at("yes") == doctest::Approx(0.155).epsilon(1e-12));
    CHECK(t.linguistic.at("grammatical_error").at("no") == doctest::Approx(0.845).epsilon(1e-12));
    CHECK(t.correctness.at("cs1").at("unhelpful") == doctest::Approx(25.0 / 200).epsilon(1e-12));
    CHECK(t.correctness.at("all").at("erroneous_conceptual") == 0.0);
    CHECK(t.correctness_counts.at("cs1").at("unhelpful") == 25);
}

TEST_CASE("a single bloom level takes the whole row") {
    std::vector<Annotation> rows(7, row("os", Correctness::correct_helpful, BloomLevel::apply));
    const auto t = aggregate_annotations(rows);
    CHECK(t.bloom_by_course.at("os").at("Apply") == 1.0);
    CHECK(t.bloom_by_course.at("os").at("Create") == 0.0);
    CHECK(t.bloom_by_course.at("os").size() == 6);
    CHECK(t.bloom_by_mode.empty());
}

TEST_CASE("share rows sum to one") {
    std::vector<Annotation> rows;
    SeededRng rng(5);
    for (int i = 0; i < 300; ++i) {
        auto a = row(i % 2 ? "a" : "b", kAllCorrectness[rng.below(4)], kAllBloomLevels[rng.below(6)]);
        a.mode = kAllModes[rng.below(3)];
        a.polite = rng.below(2);
        a.llm_question_present = rng.below(2);
        a.llm_question_answered = a.llm_question_present && rng.below(2);
        rows.push_back(a);
    }
    const auto t = aggregate_annotations(rows);
    for (const auto* table : {&t.bloom_by_course, &t.bloom_by_mode, &t.correctness, &t.linguistic, &t.follow_up}) {
        for (const auto& [label, cols] : *table) {
            double sum = 0;
            for (const auto& [_, v] : cols) sum += v;
            INFO(label);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("empty input gives empty tables") {
    const auto t = aggregate_annotations({});
    CHECK(t.total == 0);
    CHECK(t.correctness.empty());
    CHECK(annotation_tables_to_json(t).find("\"total\": 0") != std::string::npos);
}

TEST_CASE("CSV write and import round-trip, including quoted fields") {
    auto a = row("cs,1", Correctness::erroneous_computational, BloomLevel::evaluate);
    a.conversation_id = "c \"quoted\"";
    a.mode = ConversationMode::practice;
    a.question_index = 3;
    a.has_example = true;
    a.llm_question_present = true;
    a.llm_question_answered = true;
    a.annotator_id = "ann\n2";
    auto b = row("os", Correctness::correct_helpful);
    std::istringstream in(to_csv({a, b}));
    const auto imported = import_annotations_csv(in);
    CHECK(imported.rejected.empty());
    REQUIRE(imported.accepted.size() == 2);
    CHECK(imported.accepted[0] == a);
    CHECK(imported.accepted[1] == b);
}

TEST_CASE("invalid rows are rejected with their line numbers") {
    std::istringstream in(kHeader +
                          "c1,cs1,general,0,Apply,correct_helpful,no,yes,no,no,yes,yes,a1\n"
                          "c2,cs1,,0,Apply,correct_helpful,no,yes,no,no,no,yes,a1\n"
                          "c3,cs1,,0,Synthesize,correct_helpful,no,yes,no,no,no,no,a1\n"
                          "c4,cs1,,x,Apply,correct_helpful,no,yes,no,no,no,no,a1\n"
                          "c5,cs1,,0,Apply,wrong,no,yes,no,no,no,no,a1\n"
                          "c6,cs1,,0,Apply,unhelpful,maybe,yes,no,no,no,no,a1\n"
                          "c7,cs1,,0,Apply,unhelpful\n"
                          ",cs1,,0,Apply,unhelpful,no,yes,no,no,no,no,a1\n"
                          "\n"
                          "c9,cs1,chat,0,Apply,unhelpful,no,yes,no,no,no,no,a1\n");
    const auto r = import_annotations_csv(in);
    CHECK(r.accepted.size() == 1);
    REQUIRE(r.rejected.size() == 8);
    CHECK(r.rejected[0].rfind("line 3:", 0) == 0);
    CHECK(r.rejected[0].find("llm_question_answered") != std::string::npos);
    CHECK(r.rejected[7].rfind("line 11:", 0) == 0);
}

TEST_CASE("a wrong header is malformed input") {
    std::istringstream in("id,course\nx,y\n");
    try {
        import_annotations_csv(in);
        FAIL("expected malformed_input");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::malformed_input);
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(import_annotations_csv(empty), Error);
}

TEST_CASE("follow-up table counts only present questions") {
    auto a = row("cs1", Correctness::correct_helpful);
    a.llm_question_present = true;
    a.llm_question_answered = true;
    auto b = a;
    b.llm_question_answered = false;
    auto c = row("cs1", Correctness::correct_helpful);
    const auto t = aggregate_annotations({a, b, b, c});
    CHECK(t.follow_up.at("cs1").at("answered") == doctest::Approx(1.0 / 3.0));
    CHECK(t.follow_up.at("all").at("ignored") == doctest::Approx(2.0 / 3.0));
    CHECK(t.linguistic.at("polite").at("no") == 1.0);
}
