#include "courseassist/analytics.hpp"
#include "courseassist/synthetic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace courseassist;
using namespace testing_support;
using namespace std::chrono_literals;

namespace {

Conversation conv(const std::string& id, const std::string& start, std::chrono::seconds duration,
                  std::size_t n_rounds, const std::string& course = "cs1", UserKind kind = UserKind::student,
                  ConversationMode mode = ConversationMode::general) {
    Conversation c;
    c.id = id;
    c.course_id = course;
    c.user_ref = "u-" + id;
    c.user_kind = kind;
    c.started_at = parse_timestamp(start);
    c.last_activity_at = c.started_at + duration;
    for (std::size_t r = 0; r < n_rounds; ++r) {
        Message u;
        u.id = id + "-u" + std::to_string(r);
        u.created_at = c.started_at;
        u.metadata.mode = mode;
        Message a;
        a.id = id + "-a" + std::to_string(r);
        a.role = MessageRole::assistant;
        a.created_at = c.started_at;
        a.metadata.mode = mode;
        a.metadata.dispatch = DispatchDecision{};
        c.messages.push_back(u);
        c.messages.push_back(a);
    }
    return c;
}

ReportOptions options() {
    ReportOptions o;
    o.semester_start = parse_timestamp("2024-01-08");
    return o;
}

SimulationSpec small_spec() {
    SimulationSpec s;
    s.total = 600;
    s.within_ten_minutes = 400;
    s.zero_rounds = 120;
    s.single_round = 200;
    s.within_three_rounds = 500;
    s.homework_mode = 250;
    s.practice_mode = 60;
    s.follow_up_emitted = 90;
    s.follow_up_answered = 30;
    s.developer_total = 40;
    s.developer_zero_rounds = 10;
    s.courses = {"a", "b", "c"};
    s.users_per_course = 50;
    s.semester_start = parse_timestamp("2024-01-08");
    s.tz_offset_minutes = -420;
    return s;
}

} // namespace

TEST_CASE("durations of 4, 9 and 25 minutes give two of three within ten minutes") {
    const std::vector<Conversation> convs{conv("c1", "2024-01-10T10:00:00Z", 4min, 1),
                                          conv("c2", "2024-01-10T11:00:00Z", 9min, 1),
                                          conv("c3", "2024-01-10T12:00:00Z", 25min, 1)};
    const auto r = compute_report(convs, options());
    CHECK(r.overall.within_ten_minutes == 2);
    CHECK(r.overall.within_ten_minutes_ratio == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.overall.durations.counts[0] == 1);
    CHECK(r.overall.durations.counts[1] == 1);
    CHECK(r.overall.durations.counts[3] == 1);
}

TEST_CASE("exactly ten minutes is not within ten minutes") {
    const std::vector<Conversation> convs{conv("c1", "2024-01-10T10:00:00Z", 599s, 0),
                                          conv("c2", "2024-01-10T10:00:00Z", 600s, 0)};
    CHECK(compute_report(convs, options()).overall.within_ten_minutes == 1);
}

TEST_CASE("an empty input yields an empty report with zero ratios") {
    const auto r = compute_report({}, options());
    CHECK(r.empty);
    CHECK(r.overall.conversations == 0);
    CHECK(r.overall.within_ten_minutes_ratio == 0.0);
    CHECK_FALSE(r.overall.follow_up.answered_ratio);
    CHECK(r.per_course.empty());
    const auto j = report_to_json(r);
    CHECK(j.find("\"empty\": true") != std::string::npos);
}

TEST_CASE("developers are excluded unless asked for") {
    const std::vector<Conversation> convs{conv("c1", "2024-01-10T10:00:00Z", 1min, 0),
                                          conv("d1", "2024-01-10T10:00:00Z", 1min, 0, "cs1", UserKind::developer)};
    auto o = options();
    auto r = compute_report(convs, o);
    CHECK(r.overall.conversations == 1);
    CHECK(r.excluded_developer_conversations == 1);
    o.exclude_developers = false;
    r = compute_report(convs, o);
    CHECK(r.overall.conversations == 2);
    CHECK(r.excluded_developer_conversations == 0);
}

TEST_CASE("semester weeks and hours follow the course timezone") {
    const auto start = parse_timestamp("2024-01-08");
    // 2024-01-08T03:00Z is still Jan 7 at UTC-7
    CHECK(semester_week(parse_timestamp("2024-01-08T03:00:00Z"), start, -420) == -1);
    CHECK(semester_week(parse_timestamp("2024-01-08T07:00:00Z"), start, -420) == 0);
    CHECK(semester_week(parse_timestamp("2024-01-15T06:59:59Z"), start, -420) == 0);
    CHECK(semester_week(parse_timestamp("2024-01-15T07:00:00Z"), start, -420) == 1);
    CHECK(local_hour(parse_timestamp("2024-01-08T03:00:00Z"), -420) == 20);
    CHECK(local_hour(parse_timestamp("2024-01-08T03:00:00Z"), 330) == 8);
}

TEST_CASE("report matches an independent recount, overall and per course") {
    const auto spec = small_spec();
    const auto convs = generate_synthetic_logs(spec, 11);
    ReportOptions o;
    o.semester_start = spec.semester_start;
    o.tz_offset_minutes = spec.tz_offset_minutes;
    const auto r = compute_report(convs, o);
    auto oracle = recount(convs, spec.semester_start, spec.tz_offset_minutes);

    CHECK(r.excluded_developer_conversations == oracle.excluded);
    CHECK(r.overall.conversations == oracle.conversations);
    CHECK(r.overall.within_ten_minutes == oracle.within_ten);
    CHECK(r.overall.zero_rounds == oracle.zero);
    CHECK(r.overall.single_round == oracle.single);
    CHECK(r.overall.within_three_rounds == oracle.within_three);
    CHECK(r.overall.questions == oracle.questions);
    CHECK(r.overall.follow_up.emitted == oracle.emitted);
    CHECK(r.overall.follow_up.answered == oracle.answered);
    for (auto m : kAllModes) CHECK(r.overall.mode_counts.at(m) == oracle.modes[m]);
    CHECK(r.overall.hourly == oracle.hourly);
    std::map<long long, std::size_t> weekly(r.overall.weekly.begin(), r.overall.weekly.end());
    CHECK(weekly == oracle.weekly);

    std::size_t per_course_total = 0;
    for (const auto& [course, stats] : r.per_course) {
        std::vector<Conversation> mine;
        for (const auto& c : convs) {
            if (c.course_id == course) mine.push_back(c);
        }
        const auto o2 = recount(mine, spec.semester_start, spec.tz_offset_minutes);
        CHECK(stats.conversations == o2.conversations);
        CHECK(stats.within_ten_minutes == o2.within_ten);
        CHECK(stats.zero_rounds == o2.zero);
        per_course_total += stats.conversations;
    }
    CHECK(per_course_total == r.overall.conversations);
}

TEST_CASE("distribution invariants") {
    const auto convs = generate_synthetic_logs(small_spec(), 5);
    const auto r = compute_report(convs, options());
    const auto& s = r.overall;

    std::size_t sum = 0;
    for (auto n : s.durations.counts) sum += n;
    CHECK(sum == s.conversations);
    for (std::size_t i = 1; i < s.durations.cumulative.size(); ++i) {
        CHECK(s.durations.cumulative[i] >= s.durations.cumulative[i - 1]);
    }
    CHECK(s.durations.cumulative.back() == 1.0);
    CHECK(s.hourly_cdf.back() == 1.0);
    CHECK(s.hourly_questions_cdf.back() == 1.0);
    for (std::size_t h = 1; h < 24; ++h) CHECK(s.hourly_cdf[h] >= s.hourly_cdf[h - 1]);

    sum = 0;
    for (auto [_, n] : s.rounds_histogram) sum += n;
    CHECK(sum == s.conversations);
    CHECK(s.zero_rounds <= s.within_three_rounds);
    CHECK(s.zero_rounds + s.single_round <= s.within_three_rounds);
    double shares = 0;
    for (auto [_, v] : s.mode_shares) shares += v;
    CHECK(shares == doctest::Approx(1.0));
    CHECK(s.follow_up.answered <= s.follow_up.emitted);
}

TEST_CASE("restricting the input never increases any count") {
    const auto convs = generate_synthetic_logs(small_spec(), 8);
    const auto full = compute_report(convs, options());
    std::vector<Conversation> half(convs.begin(), convs.begin() + static_cast<std::ptrdiff_t>(convs.size() / 2));
    const auto part = compute_report(half, options());
    CHECK(part.overall.conversations <= full.overall.conversations);
    CHECK(part.overall.within_ten_minutes <= full.overall.within_ten_minutes);
    CHECK(part.overall.zero_rounds <= full.overall.zero_rounds);
    CHECK(part.overall.follow_up.emitted <= full.overall.follow_up.emitted);
    for (auto [w, n] : part.overall.weekly) CHECK(n <= full.overall.weekly.at(w));
}

TEST_CASE("follow-up report has every course plus all") {
    auto a = conv("c1", "2024-01-10T10:00:00Z", 1min, 2, "x");
    a.messages[1].metadata.has_follow_up = true;
    auto b = conv("c2", "2024-01-10T10:00:00Z", 1min, 1, "y");
    b.messages[1].metadata.has_follow_up = true;
    auto c = conv("c3", "2024-01-10T10:00:00Z", 1min, 1, "y");
    const auto f = follow_up_report({a, b, c});
    CHECK(f.at("x").emitted == 1);
    CHECK(f.at("x").answered == 1);
    CHECK(f.at("y").emitted == 1);
    CHECK(f.at("y").answered == 0);
    CHECK(f.at("all").emitted_ratio == doctest::Approx(2.0 / 3.0));
    CHECK(*f.at("all").answered_ratio == doctest::Approx(0.5));
}

TEST_CASE("bad bucket edges are rejected") {
    auto o = options();
    o.duration_edges_minutes = {0, 10, 5};
    CHECK_THROWS_AS(compute_report({}, o), Error);
    o.duration_edges_minutes = {1, 5};
    CHECK_THROWS_AS(compute_report({}, o), Error);
}

TEST_CASE("report CSVs are written with overall rows") {
    TempDir dir;
    const auto r = compute_report(generate_synthetic_logs(small_spec(), 2), options());
    const auto paths = write_report_csvs(r, dir.path());
    CHECK(paths.size() == 6);
    for (const auto& p : paths) {
        const auto text = read_text(p);
        CHECK(text.rfind("course,", 0) == 0);
        CHECK(text.find("\nall,") != std::string::npos);
    }
}

TEST_CASE("sampler is deterministic, order independent and without replacement") {
    const auto convs = generate_synthetic_logs(small_spec(), 4);
    const auto first = sample_for_annotation(convs, 50, 123);
    CHECK(first.ids.size() == 50);
    CHECK_FALSE(first.shortfall);
    CHECK(std::set<std::string>(first.ids.begin(), first.ids.end()).size() == 50);
    auto reversed = convs;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(sample_for_annotation(reversed, 50, 123).ids == first.ids);
    CHECK(sample_for_annotation(convs, 50, 124).ids != first.ids);
}

TEST_CASE("sampler edge cases") {
    std::vector<Conversation> ten;
    for (int i = 0; i < 10; ++i) ten.push_back(conv("c" + std::to_string(i), "2024-01-10T10:00:00Z", 1min, 1));
    const auto zero = sample_for_annotation(ten, 0, 1);
    CHECK(zero.ids.empty());
    CHECK_FALSE(zero.shortfall);
    const auto more = sample_for_annotation(ten, 200, 1);
    CHECK(more.shortfall);
    CHECK(more.eligible == 10);
    CHECK(more.ids.size() == 10);
    const auto filtered = sample_for_annotation(ten, 5, 1, [](const Conversation& c) { return c.id < "c3"; });
    CHECK(filtered.eligible == 3);
    CHECK(filtered.shortfall);
}

TEST_CASE("sampler inclusion frequencies are uniform") {
    std::vector<Conversation> pop;
    for (int i = 0; i < 10; ++i) pop.push_back(conv("c" + std::to_string(i), "2024-01-10T10:00:00Z", 1min, 1));
    const std::size_t n = 1, seeds = 10000;
    std::map<std::string, std::size_t> hits;
    for (std::size_t seed = 0; seed < seeds; ++seed) {
        for (const auto& id : sample_for_annotation(pop, n, seed).ids) ++hits[id];
    }
    const double p = 1.0 / static_cast<double>(pop.size());
    const double mean = p * seeds;
    const double se = std::sqrt(seeds * p * (1 - p));
    REQUIRE(hits.size() == pop.size());
    for (const auto& [id, k] : hits) {
        INFO(id);
        CHECK(std::abs(static_cast<double>(k) - mean) <= 3.0 * se);
    }
}
