#include "courseassist/analytics.hpp"

#include "courseassist/random.hpp"
#include "json_codec.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace courseassist {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    auto q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

template <std::size_t N>
std::array<double, N> cdf_of(const std::array<std::size_t, N>& counts) {
    std::array<double, N> out{};
    std::size_t total = 0;
    for (auto c : counts) total += c;
    std::size_t run = 0;
    for (std::size_t i = 0; i < N; ++i) {
        run += counts[i];
        out[i] = total == 0 ? 0.0 : (run == total ? 1.0 : ratio(run, total));
    }
    return out;
}

} // namespace

std::chrono::seconds conversation_duration(const Conversation& c) {
    return std::max(std::chrono::seconds{0}, c.last_activity_at - c.started_at);
}

int semester_week(Timestamp t, Timestamp semester_start, int tz_offset_minutes) {
    using namespace std::chrono;
    const auto local = t + minutes{tz_offset_minutes};
    const auto start_day = floor<days>(semester_start);
    const auto day = floor<days>(local);
    return static_cast<int>(floor_div((day - start_day).count(), 7));
}

int local_hour(Timestamp t, int tz_offset_minutes) {
    using namespace std::chrono;
    const auto local = t + minutes{tz_offset_minutes};
    return static_cast<int>(duration_cast<hours>(local - floor<days>(local)).count());
}

bool emitted_follow_up(const Conversation& c) {
    return std::any_of(c.messages.begin(), c.messages.end(), [](const Message& m) {
        return m.role == MessageRole::assistant && m.metadata.has_follow_up;
    });
}

bool answered_follow_up(const Conversation& c) {
    bool flagged = false;
    for (const auto& m : c.messages) {
        if (m.role == MessageRole::assistant && m.metadata.has_follow_up) flagged = true;
        else if (m.role == MessageRole::user && flagged) return true;
    }
    return false;
}

namespace {

FollowUpStats follow_up_of(const std::vector<const Conversation*>& group) {
    FollowUpStats f;
    f.conversations = group.size();
    for (auto* c : group) {
        if (!emitted_follow_up(*c)) continue;
        ++f.emitted;
        f.answered += answered_follow_up(*c);
    }
    f.emitted_ratio = ratio(f.emitted, f.conversations);
    if (f.emitted > 0) f.answered_ratio = ratio(f.answered, f.emitted);
    return f;
}

UsageStats stats_of(const std::vector<const Conversation*>& group, const ReportOptions& options) {
    UsageStats s;
    s.conversations = group.size();
    s.durations.edges_minutes = options.duration_edges_minutes;
    s.durations.counts.assign(options.duration_edges_minutes.size(), 0);
    for (auto m : kAllModes) s.mode_counts[m] = 0;

    std::set<std::string> users;
    for (const auto* c : group) {
        users.insert(c->user_ref);

        const auto secs = static_cast<double>(conversation_duration(*c).count());
        const auto& edges = options.duration_edges_minutes;
        for (std::size_t i = edges.size(); i-- > 0;) {
            if (secs >= edges[i] * 60.0) {
                ++s.durations.counts[i];
                break;
            }
        }
        s.within_ten_minutes += conversation_duration(*c) < kTenMinutes;

        const auto r = rounds(*c);
        ++s.rounds_histogram[r];
        s.zero_rounds += r == 0;
        s.single_round += r == 1;
        s.within_three_rounds += r <= 3;

        ++s.weekly[semester_week(c->started_at, options.semester_start, options.tz_offset_minutes)];
        ++s.hourly[static_cast<std::size_t>(local_hour(c->started_at, options.tz_offset_minutes))];
        for (const auto& m : c->messages) {
            if (m.role != MessageRole::user) continue;
            ++s.questions;
            ++s.hourly_questions[static_cast<std::size_t>(local_hour(m.created_at, options.tz_offset_minutes))];
        }
        ++s.mode_counts[conversation_mode(*c)];
    }

    s.users = users.size();
    s.conversations_per_user = ratio(s.conversations, s.users);
    std::size_t run = 0;
    for (auto count : s.durations.counts) {
        run += count;
        s.durations.cumulative.push_back(run == s.conversations && run > 0 ? 1.0 : ratio(run, s.conversations));
    }
    s.within_ten_minutes_ratio = ratio(s.within_ten_minutes, s.conversations);
    s.no_question_ratio = ratio(s.zero_rounds, s.conversations);
    s.single_round_ratio = ratio(s.single_round, s.conversations);
    s.within_three_rounds_ratio = ratio(s.within_three_rounds, s.conversations);
    s.hourly_cdf = cdf_of(s.hourly);
    s.hourly_questions_cdf = cdf_of(s.hourly_questions);
    for (auto& [m, n] : s.mode_counts) s.mode_shares[m] = ratio(n, s.conversations);
    s.follow_up = follow_up_of(group);
    return s;
}

} // namespace

UsageReport compute_report(const std::vector<Conversation>& conversations, const ReportOptions& options) {
    if (!std::is_sorted(options.duration_edges_minutes.begin(), options.duration_edges_minutes.end()) ||
        options.duration_edges_minutes.empty() || options.duration_edges_minutes.front() != 0.0) {
        throw Error(ErrorCode::validation, "duration edges must be ascending and start at 0");
    }
    UsageReport report;
    std::vector<const Conversation*> included;
    std::map<std::string, std::vector<const Conversation*>> by_course;
    for (const auto& c : conversations) {
        if (options.exclude_developers && c.user_kind == UserKind::developer) {
            ++report.excluded_developer_conversations;
            continue;
        }
        included.push_back(&c);
        by_course[c.course_id].push_back(&c);
    }
    report.empty = included.empty();
    report.overall = stats_of(included, options);
    for (const auto& [course, group] : by_course) report.per_course[course] = stats_of(group, options);
    return report;
}

std::map<std::string, FollowUpStats> follow_up_report(const std::vector<Conversation>& conversations) {
    std::vector<const Conversation*> all;
    std::map<std::string, std::vector<const Conversation*>> by_course;
    for (const auto& c : conversations) {
        all.push_back(&c);
        by_course[c.course_id].push_back(&c);
    }
    std::map<std::string, FollowUpStats> out;
    for (const auto& [course, group] : by_course) out[course] = follow_up_of(group);
    out["all"] = follow_up_of(all);
    return out;
}

namespace {

json follow_up_json(const FollowUpStats& f) {
    return {{"conversations", f.conversations},
            {"emitted", f.emitted},
            {"answered", f.answered},
            {"emitted_ratio", f.emitted_ratio},
            {"answered_ratio", f.answered_ratio ? json(*f.answered_ratio) : json(nullptr)}};
}

json stats_json(const UsageStats& s) {
    json rounds = json::object();
    for (auto [r, n] : s.rounds_histogram) rounds[std::to_string(r)] = n;
    json weekly = json::object();
    for (auto [w, n] : s.weekly) weekly[std::to_string(w)] = n;
    json modes = json::object();
    json shares = json::object();
    for (auto [m, n] : s.mode_counts) modes[std::string(to_string(m))] = n;
    for (auto [m, v] : s.mode_shares) shares[std::string(to_string(m))] = v;
    return {
        {"conversations", s.conversations},
        {"users", s.users},
        {"questions", s.questions},
        {"conversations_per_user", s.conversations_per_user},
        {"durations",
         {{"edges_minutes", s.durations.edges_minutes},
          {"counts", s.durations.counts},
          {"cumulative", s.durations.cumulative}}},
        {"within_ten_minutes", s.within_ten_minutes},
        {"within_ten_minutes_ratio", s.within_ten_minutes_ratio},
        {"rounds_histogram", rounds},
        {"zero_rounds", s.zero_rounds},
        {"single_round", s.single_round},
        {"within_three_rounds", s.within_three_rounds},
        {"no_question_ratio", s.no_question_ratio},
        {"single_round_ratio", s.single_round_ratio},
        {"within_three_rounds_ratio", s.within_three_rounds_ratio},
        {"weekly", weekly},
        {"hourly", s.hourly},
        {"hourly_cdf", s.hourly_cdf},
        {"hourly_questions", s.hourly_questions},
        {"hourly_questions_cdf", s.hourly_questions_cdf},
        {"mode_counts", modes},
        {"mode_shares", shares},
        {"follow_up", follow_up_json(s.follow_up)},
    };
}

} // namespace

std::string report_to_json(const UsageReport& report, int indent) {
    json courses = json::object();
    for (const auto& [id, s] : report.per_course) courses[id] = stats_json(s);
    json j = {{"schema_version", 1},
              {"empty", report.empty},
              {"excluded_developer_conversations", report.excluded_developer_conversations},
              {"overall", stats_json(report.overall)},
              {"courses", courses}};
    return j.dump(indent);
}

std::vector<std::filesystem::path> write_report_csvs(const UsageReport& report,
                                                     const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    std::vector<std::pair<std::string, const UsageStats*>> groups{{"all", &report.overall}};
    for (const auto& [id, s] : report.per_course) groups.emplace_back(id, &s);

    std::vector<std::filesystem::path> written;
    const auto open = [&](const char* name) {
        auto path = directory / name;
        std::ofstream out(path);
        if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
        written.push_back(path);
        return out;
    };
    const auto num = [](double v) { return json(v).dump(); };

    {
        auto out = open("durations.csv");
        out << "course,bucket_start_min,bucket_end_min,count,cumulative_fraction\n";
        for (auto& [course, s] : groups) {
            const auto& e = s->durations.edges_minutes;
            for (std::size_t i = 0; i < e.size(); ++i) {
                out << course << ',' << num(e[i]) << ',' << (i + 1 < e.size() ? num(e[i + 1]) : "inf") << ','
                    << s->durations.counts[i] << ',' << num(s->durations.cumulative[i]) << '\n';
            }
        }
    }
    {
        auto out = open("rounds.csv");
        out << "course,rounds,count,fraction\n";
        for (auto& [course, s] : groups) {
            for (auto [r, n] : s->rounds_histogram) {
                out << course << ',' << r << ',' << n << ',' << num(ratio(n, s->conversations)) << '\n';
            }
        }
    }
    {
        auto out = open("weekly.csv");
        out << "course,week,conversations\n";
        for (auto& [course, s] : groups) {
            for (auto [w, n] : s->weekly) out << course << ',' << w << ',' << n << '\n';
        }
    }
    {
        auto out = open("hourly.csv");
        out << "course,hour,conversations,cdf,questions,questions_cdf\n";
        for (auto& [course, s] : groups) {
            for (std::size_t h = 0; h < 24; ++h) {
                out << course << ',' << h << ',' << s->hourly[h] << ',' << num(s->hourly_cdf[h]) << ','
                    << s->hourly_questions[h] << ',' << num(s->hourly_questions_cdf[h]) << '\n';
            }
        }
    }
    {
        auto out = open("modes.csv");
        out << "course,mode,conversations,share\n";
        for (auto& [course, s] : groups) {
            for (auto [m, n] : s->mode_counts) {
                out << course << ',' << to_string(m) << ',' << n << ',' << num(s->mode_shares.at(m)) << '\n';
            }
        }
    }
    {
        auto out = open("follow_up.csv");
        out << "course,conversations,emitted,answered,emitted_ratio,answered_ratio\n";
        for (auto& [course, s] : groups) {
            const auto& f = s->follow_up;
            out << course << ',' << f.conversations << ',' << f.emitted << ',' << f.answered << ','
                << num(f.emitted_ratio) << ',' << (f.answered_ratio ? num(*f.answered_ratio) : "") << '\n';
        }
    }
    return written;
}

SampleResult sample_for_annotation(const std::vector<Conversation>& conversations, std::size_t n,
                                   std::uint64_t seed, const ConversationPredicate& predicate) {
    std::vector<std::string> eligible;
    for (const auto& c : conversations) {
        if (!predicate || predicate(c)) eligible.push_back(c.id);
    }
    std::sort(eligible.begin(), eligible.end());
    eligible.erase(std::unique(eligible.begin(), eligible.end()), eligible.end());

    SampleResult result;
    result.eligible = eligible.size();
    result.shortfall = eligible.size() < n;
    const auto take = std::min(n, eligible.size());

    // partial Fisher-Yates: the first `take` slots are the sample
    SeededRng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }
    eligible.resize(take);
    result.ids = std::move(eligible);
    return result;
}

} // namespace courseassist
