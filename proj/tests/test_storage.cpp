#include "courseassist/storage.hpp"
#include "courseassist/synthetic.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace courseassist;
using namespace testing_support;

namespace {

Conversation make(const std::string& id, const std::string& start, UserKind kind = UserKind::student,
                  const std::string& course = "cs1") {
    Conversation c;
    c.id = id;
    c.course_id = course;
    c.user_ref = "u-00000000000000" + id.substr(id.size() - 2);
    c.user_kind = kind;
    c.started_at = parse_timestamp(start);
    c.last_activity_at = c.started_at;
    return c;
}

} // namespace

TEST_CASE("course configs and documents survive a reopen") {
    TempDir dir;
    const auto db = (dir / "store.db").string();
    auto config = basic_course("cs1");
    config.educator_rules = {"No full solutions."};
    Document doc;
    doc.id = "doc-00000001";
    doc.course_id = "cs1";
    doc.title = "Lecture 1";
    doc.kind = DocumentKind::lecture;
    doc.raw_text = "alpha beta";
    doc.uploaded_at = parse_timestamp("2024-01-10");
    Chunk chunk{"doc-00000001:0", doc.id, 0, {0, 10}, "alpha beta", {0.6, 0.8}};
    {
        Storage s(db);
        s.save_course_config(config);
        s.save_document(doc, {chunk}, {});
    }
    Storage s(db);
    const auto configs = s.load_course_configs();
    REQUIRE(configs.size() == 1);
    CHECK(configs[0] == config);
    const auto docs = s.load_documents();
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].first.title == "Lecture 1");
    CHECK(docs[0].first.active);
    REQUIRE(docs[0].second.size() == 1);
    CHECK(docs[0].second[0].embedding == chunk.embedding);
    CHECK(docs[0].second[0].range == chunk.range);

    auto v2 = doc;
    v2.id = "doc-00000002";
    v2.version = 2;
    s.save_document(v2, {}, {doc.id});
    const auto after = s.load_documents();
    REQUIRE(after.size() == 2);
    for (const auto& [d, _] : after) CHECK(d.active == (d.id == v2.id));
}

TEST_CASE("turns append atomically and conversations load in order") {
    Storage s(":memory:");
    s.insert_conversation(make("c-02", "2024-02-02T00:00:00Z"));
    s.insert_conversation(make("c-01", "2024-02-02T00:00:00Z"));
    s.insert_conversation(make("c-03", "2024-02-01T00:00:00Z"));
    Message u;
    u.id = "m1";
    u.text = "q";
    u.created_at = parse_timestamp("2024-02-02T00:00:10Z");
    Message a;
    a.id = "m2";
    a.role = MessageRole::assistant;
    a.text = "a";
    a.created_at = parse_timestamp("2024-02-02T00:00:12Z");
    a.metadata.dispatch = DispatchDecision{};
    s.append_turn("c-01", u, a, a.created_at);
    s.set_shared("c-01", true);

    const auto loaded = s.load_conversation("c-01");
    REQUIRE(loaded);
    CHECK(loaded->messages.size() == 2);
    CHECK(loaded->shared);
    CHECK(loaded->last_activity_at == a.created_at);
    CHECK_FALSE(s.load_conversation("missing"));

    const auto all = s.load_conversations("cs1", {});
    REQUIRE(all.size() == 3);
    CHECK(all[0].id == "c-03");
    CHECK(all[1].id == "c-01");
    CHECK(all[2].id == "c-02");
}

TEST_CASE("export filter bounds are inclusive-exclusive and developers opt in") {
    Storage s(":memory:");
    s.insert_conversation(make("c-01", "2024-02-01T00:00:00Z"));
    s.insert_conversation(make("c-02", "2024-02-02T00:00:00Z"));
    s.insert_conversation(make("c-03", "2024-02-03T00:00:00Z", UserKind::developer));
    s.insert_conversation(make("c-04", "2024-02-03T00:00:00Z", UserKind::student, "other"));

    ExportFilter f;
    f.from = parse_timestamp("2024-02-02");
    f.to = parse_timestamp("2024-02-03");
    auto got = s.load_conversations("cs1", f);
    REQUIRE(got.size() == 1);
    CHECK(got[0].id == "c-02");

    f = {};
    CHECK(s.load_conversations("cs1", f).size() == 2);
    f.include_developers = true;
    CHECK(s.load_conversations("cs1", f).size() == 3);
}

TEST_CASE("import replaces conversations with the same id") {
    Storage s(":memory:");
    SimulationSpec spec;
    spec.total = 50;
    spec.within_ten_minutes = 30;
    spec.zero_rounds = 10;
    spec.single_round = 15;
    spec.within_three_rounds = 40;
    spec.courses = {"cs1"};
    const auto convs = generate_synthetic_logs(spec, 3);
    s.import_conversations(convs);
    s.import_conversations(convs);
    ExportFilter all;
    all.include_developers = true;
    CHECK(s.load_conversations("cs1", all) == convs);
}
