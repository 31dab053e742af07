#include "courseassist/synthetic.hpp"

#include "courseassist/random.hpp"
#include "json_codec.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace courseassist {

namespace {

[[noreturn]] void inconsistent(const std::string& what) { throw Error(ErrorCode::inconsistent_spec, what); }

// Relative weight of each local hour; evenings and nights dominate.
constexpr std::array<int, 24> kHourWeights{6, 4, 2, 1, 1, 1, 1, 2, 4, 6, 8, 9,
                                           8, 9, 10, 11, 11, 12, 13, 15, 17, 18, 16, 10};

struct Plan {
    std::size_t rounds = 0;
    bool within_ten = false;
    ConversationMode mode = ConversationMode::general;
    bool emitted = false;
    bool answered = false;
    bool developer = false;
};

std::vector<std::size_t> iota_range(std::size_t from, std::size_t to) {
    std::vector<std::size_t> v(to - from);
    std::iota(v.begin(), v.end(), from);
    return v;
}

std::string hex_ref(SeededRng& rng) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "u-%016llx", static_cast<unsigned long long>(rng.next()));
    return buf;
}

const char* kTopics[] = {"recursion", "pointers", "loops", "hash tables", "sorting",
                         "graphs",    "functions", "classes", "big-O",   "linked lists"};

Message user_message(const std::string& conv_id, std::size_t seq, ConversationMode mode, Timestamp at,
                     SeededRng& rng) {
    Message m;
    m.id = conv_id + "-" + std::to_string(seq);
    m.role = MessageRole::user;
    m.text = std::string("How do I approach ") + kTopics[rng.below(std::size(kTopics))] + " in this problem?";
    m.created_at = at;
    m.metadata.mode = mode;
    return m;
}

Message assistant_message(const std::string& conv_id, std::size_t seq, ConversationMode mode, Timestamp at,
                          bool follow_up) {
    Message m;
    m.id = conv_id + "-" + std::to_string(seq);
    m.role = MessageRole::assistant;
    m.text = "Start by writing down the inputs and the expected output, then trace a small example.";
    if (follow_up) m.text += "\nCan you say what the base case should return?";
    m.created_at = at;
    m.metadata.mode = mode;
    DispatchDecision d;
    d.mode = mode;
    d.retrieval_kind_filter = retrieval_filter_for(mode);
    m.metadata.dispatch = d;
    m.metadata.has_follow_up = follow_up;
    return m;
}

} // namespace

void validate(const SimulationSpec& s) {
    if (s.within_three_rounds > s.total) inconsistent("within_three_rounds exceeds total");
    if (s.zero_rounds + s.single_round > s.within_three_rounds) {
        inconsistent("zero_rounds + single_round exceeds within_three_rounds");
    }
    if (s.within_ten_minutes > s.total) inconsistent("within_ten_minutes exceeds total");
    if (s.within_ten_minutes < s.zero_rounds) {
        inconsistent("zero-round conversations last 0 s, so within_ten_minutes must be >= zero_rounds");
    }
    if (s.homework_mode + s.practice_mode > s.total) inconsistent("mode counts exceed total");
    if (s.follow_up_emitted > s.total - s.zero_rounds) {
        inconsistent("follow_up_emitted exceeds conversations with a reply");
    }
    if (s.follow_up_answered > s.follow_up_emitted) inconsistent("follow_up_answered exceeds follow_up_emitted");
    if (s.follow_up_answered > s.total - s.zero_rounds - s.single_round) {
        inconsistent("follow_up_answered needs conversations with at least two rounds");
    }
    if (s.developer_zero_rounds > s.developer_total) inconsistent("developer_zero_rounds exceeds developer_total");
    if (s.total + s.developer_total > 0) {
        if (s.courses.empty()) inconsistent("courses is empty");
        if (s.users_per_course == 0) inconsistent("users_per_course must be positive");
    }
    if (s.weeks <= 0) inconsistent("weeks must be positive");
    if (s.total + s.developer_total > 999999) inconsistent("at most 999999 conversations");
}

SimulationSpec simulation_spec_from_json(const std::string& text) {
    SimulationSpec s;
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) throw Error(ErrorCode::malformed_input, "simulation spec must be an object");
        static const std::vector<std::string> known{
            "total", "within_ten_minutes", "zero_rounds", "single_round", "within_three_rounds",
            "homework_mode", "practice_mode", "follow_up_emitted", "follow_up_answered", "developer_total",
            "developer_zero_rounds", "courses", "users_per_course", "semester_start", "weeks",
            "tz_offset_minutes"};
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
                throw Error(ErrorCode::malformed_input, "unknown simulation spec key: " + it.key());
            }
        }
        const auto count = [&](const char* key, std::size_t& dst) {
            if (!j.contains(key)) return;
            const auto& v = j.at(key);
            if (!v.is_number_integer() || v.get<long long>() < 0) {
                throw Error(ErrorCode::malformed_input, std::string(key) + " must be a non-negative integer");
            }
            dst = v.get<std::size_t>();
        };
        count("total", s.total);
        count("within_ten_minutes", s.within_ten_minutes);
        count("zero_rounds", s.zero_rounds);
        count("single_round", s.single_round);
        count("within_three_rounds", s.within_three_rounds);
        count("homework_mode", s.homework_mode);
        count("practice_mode", s.practice_mode);
        count("follow_up_emitted", s.follow_up_emitted);
        count("follow_up_answered", s.follow_up_answered);
        count("developer_total", s.developer_total);
        count("developer_zero_rounds", s.developer_zero_rounds);
        count("users_per_course", s.users_per_course);
        if (j.contains("courses")) s.courses = j.at("courses").get<std::vector<std::string>>();
        if (j.contains("semester_start")) s.semester_start = j.at("semester_start").get<Timestamp>();
        if (j.contains("weeks")) s.weeks = j.at("weeks").get<int>();
        if (j.contains("tz_offset_minutes")) s.tz_offset_minutes = j.at("tz_offset_minutes").get<int>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_input, std::string("simulation spec: ") + e.what());
    }
    validate(s);
    return s;
}

SimulationSpec load_simulation_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return simulation_spec_from_json(ss.str());
}

std::string simulation_spec_to_json(const SimulationSpec& s) {
    json j = {{"total", s.total},
              {"within_ten_minutes", s.within_ten_minutes},
              {"zero_rounds", s.zero_rounds},
              {"single_round", s.single_round},
              {"within_three_rounds", s.within_three_rounds},
              {"homework_mode", s.homework_mode},
              {"practice_mode", s.practice_mode},
              {"follow_up_emitted", s.follow_up_emitted},
              {"follow_up_answered", s.follow_up_answered},
              {"developer_total", s.developer_total},
              {"developer_zero_rounds", s.developer_zero_rounds},
              {"courses", s.courses},
              {"users_per_course", s.users_per_course},
              {"semester_start", s.semester_start},
              {"weeks", s.weeks},
              {"tz_offset_minutes", s.tz_offset_minutes}};
    return j.dump(2);
}

std::vector<Conversation> generate_synthetic_logs(const SimulationSpec& spec, std::uint64_t seed) {
    validate(spec);
    SeededRng rng(seed);
    const auto n = spec.total;

    // Lay plans out by round category, pick the correlated attributes from the
    // eligible index ranges, then shuffle so nothing is position-dependent.
    std::vector<Plan> plans(n);
    const auto multi_from = spec.zero_rounds + spec.single_round;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < spec.zero_rounds) plans[i].rounds = 0;
        else if (i < multi_from) plans[i].rounds = 1;
        else if (i < spec.within_three_rounds) plans[i].rounds = 2 + rng.below(2);
        else plans[i].rounds = 4 + rng.below(7);
    }

    auto multi = iota_range(multi_from, n);
    rng.shuffle(multi);
    for (std::size_t i = 0; i < spec.follow_up_answered; ++i) plans[multi[i]].emitted = plans[multi[i]].answered = true;

    auto replied = iota_range(spec.zero_rounds, n);
    std::erase_if(replied, [&](std::size_t i) { return plans[i].answered; });
    rng.shuffle(replied);
    for (std::size_t i = 0; i < spec.follow_up_emitted - spec.follow_up_answered; ++i) plans[replied[i]].emitted = true;

    for (std::size_t i = 0; i < spec.zero_rounds; ++i) plans[i].within_ten = true;
    auto nonzero = iota_range(spec.zero_rounds, n);
    rng.shuffle(nonzero);
    for (std::size_t i = 0; i < spec.within_ten_minutes - spec.zero_rounds; ++i) plans[nonzero[i]].within_ten = true;

    auto all = iota_range(0, n);
    rng.shuffle(all);
    for (std::size_t i = 0; i < spec.homework_mode + spec.practice_mode; ++i) {
        plans[all[i]].mode = i < spec.homework_mode ? ConversationMode::homework : ConversationMode::practice;
    }

    for (std::size_t i = 0; i < spec.developer_total; ++i) {
        Plan p;
        p.developer = true;
        p.rounds = i < spec.developer_zero_rounds ? 0 : 1 + rng.below(3);
        p.within_ten = true;
        plans.push_back(p);
    }
    rng.shuffle(plans);

    std::vector<std::vector<std::string>> students(spec.courses.size());
    std::vector<std::vector<std::string>> developers(spec.courses.size());
    for (std::size_t c = 0; c < spec.courses.size(); ++c) {
        for (std::size_t u = 0; u < spec.users_per_course; ++u) students[c].push_back(hex_ref(rng));
        for (std::size_t u = 0; u < 3; ++u) developers[c].push_back(hex_ref(rng));
    }

    using namespace std::chrono;
    const auto first_day = floor<days>(spec.semester_start);
    std::vector<Conversation> out;
    out.reserve(plans.size());
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const auto& p = plans[i];
        const auto course = i % spec.courses.size();
        Conversation c;
        c.course_id = spec.courses[course];
        const auto& pool = p.developer ? developers[course] : students[course];
        c.user_ref = pool[rng.below(pool.size())];
        c.user_kind = p.developer ? UserKind::developer : UserKind::student;
        c.mode_at_start = p.mode;

        const auto day = static_cast<long>(rng.below(static_cast<std::uint64_t>(spec.weeks) * 7));
        const auto hour = static_cast<long>(rng.weighted(kHourWeights));
        const auto second = static_cast<long>(rng.below(3600));
        const auto local = first_day + days{day} + hours{hour} + seconds{second};
        c.started_at = time_point_cast<seconds>(local - minutes{spec.tz_offset_minutes});

        long duration = 0;
        if (p.rounds > 0) duration = p.within_ten ? rng.between(30, 599) : rng.between(600, 3 * 3600);
        c.last_activity_at = c.started_at + seconds{duration};
        // provisional id; final ids follow chronological order
        c.id = std::to_string(i);
        out.push_back(std::move(c));
    }

    std::vector<std::size_t> order = iota_range(0, out.size());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(out[a].started_at, a) < std::tie(out[b].started_at, b);
    });

    std::vector<Conversation> sorted;
    sorted.reserve(out.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        auto c = std::move(out[order[rank]]);
        const auto& p = plans[order[rank]];
        char id[32];
        std::snprintf(id, sizeof id, "sim-%06zu", rank + 1);
        c.id = id;

        const auto d = (c.last_activity_at - c.started_at).count();
        const auto messages = 2 * p.rounds;
        const std::size_t flagged_round = p.answered ? 0 : p.rounds - 1;
        for (std::size_t k = 0; k < messages; ++k) {
            const auto at = c.started_at + seconds{d * static_cast<long>(k + 1) / static_cast<long>(messages)};
            if (k % 2 == 0) {
                c.messages.push_back(user_message(c.id, k, p.mode, at, rng));
            } else {
                const bool flag = p.emitted && k / 2 == flagged_round;
                c.messages.push_back(assistant_message(c.id, k, p.mode, at, flag));
            }
        }
        sorted.push_back(std::move(c));
    }
    return sorted;
}

} // namespace courseassist
