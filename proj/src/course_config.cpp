#include "courseassist/course_config.hpp"

#include "json_codec.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace courseassist {

std::string_view to_string(FollowUpPolicy policy) {
    switch (policy) {
    case FollowUpPolicy::never: return "never";
    case FollowUpPolicy::model_decides: return "model_decides";
    case FollowUpPolicy::always: return "always";
    }
    return "model_decides";
}

FollowUpPolicy parse_follow_up_policy(std::string_view text) {
    if (text == "never") return FollowUpPolicy::never;
    if (text == "model_decides") return FollowUpPolicy::model_decides;
    if (text == "always") return FollowUpPolicy::always;
    throw Error(ErrorCode::invalid_config, "unknown follow_up_policy: " + std::string(text));
}

std::map<ConversationMode, std::string> CourseConfig::default_mode_instructions() {
    return {
        {ConversationMode::general,
         "Answer the student's question clearly, using the course materials where relevant."},
        {ConversationMode::homework,
         "The student is working on a homework assignment. Help them make progress on their own."},
        {ConversationMode::practice,
         "The student is preparing for quizzes and exams."},
    };
}

void CourseConfig::validate() const {
    const auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::invalid_config, "course " + course_id + ": " + what);
    };
    if (course_id.empty()) fail("course_id is required");
    if (!(thresholds.low < thresholds.high)) fail("thresholds.low must be below thresholds.high");
    if (thresholds.low < -1.0 || thresholds.high > 1.0) fail("thresholds must lie in [-1, 1]");
    for (const auto& g : time_guidance) {
        if (!(g.active_from < g.active_to)) fail("time guidance window must have active_from < active_to");
    }
    for (auto m : kAllModes) {
        if (!mode_instructions.contains(m)) fail("missing instruction for mode " + std::string(to_string(m)));
    }
    if (history_max_rounds == 0) fail("history_max_rounds must be positive");
    if (prompt_char_budget == 0) fail("prompt_char_budget must be positive");
    if (top_k == 0) fail("top_k must be positive");
    if (max_output_chars == 0) fail("max_output_chars must be positive");
}

std::string course_config_to_json(const CourseConfig& c) {
    json guidance = json::array();
    for (const auto& g : c.time_guidance) {
        guidance.push_back({{"active_from", g.active_from}, {"active_to", g.active_to}, {"text", g.text}});
    }
    json modes = json::object();
    for (const auto& [m, text] : c.mode_instructions) modes[std::string(to_string(m))] = text;
    json j = {{"course_id", c.course_id},
              {"name", c.name},
              {"description", c.description},
              {"audience_note", c.audience_note},
              {"educator_rules", c.educator_rules},
              {"time_guidance", guidance},
              {"mode_instructions", modes},
              {"follow_up_policy", std::string(to_string(c.follow_up_policy))},
              {"thresholds", {{"low", c.thresholds.low}, {"high", c.thresholds.high}}},
              {"history_max_rounds", c.history_max_rounds},
              {"prompt_char_budget", c.prompt_char_budget},
              {"top_k", c.top_k},
              {"max_output_chars", c.max_output_chars}};
    return j.dump(2);
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.contains(it.key())) {
            throw Error(ErrorCode::invalid_config, "unknown field " + where + it.key());
        }
    }
}

std::size_t positive(const json& j) {
    if (!j.is_number_unsigned() || j.get<std::size_t>() == 0) {
        throw Error(ErrorCode::invalid_config, "expected a positive integer, got " + j.dump());
    }
    return j.get<std::size_t>();
}

} // namespace

CourseConfig course_config_from_json(std::string_view text) {
    CourseConfig c;
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) throw Error(ErrorCode::invalid_config, "course config must be an object");
        reject_unknown(j,
                       {"course_id", "name", "description", "audience_note", "educator_rules",
                        "time_guidance", "mode_instructions", "follow_up_policy", "thresholds",
                        "history_max_rounds", "prompt_char_budget", "top_k", "max_output_chars"},
                       "");
        c.course_id = j.at("course_id").get<std::string>();
        c.name = j.value("name", c.course_id);
        c.description = j.value("description", std::string{});
        c.audience_note = j.value("audience_note", std::string{});
        c.educator_rules = j.value("educator_rules", std::vector<std::string>{});
        if (j.contains("time_guidance")) {
            for (const auto& g : j.at("time_guidance")) {
                reject_unknown(g, {"active_from", "active_to", "text"}, "time_guidance.");
                c.time_guidance.push_back({g.at("active_from").get<Timestamp>(),
                                           g.at("active_to").get<Timestamp>(),
                                           g.at("text").get<std::string>()});
            }
        }
        if (j.contains("mode_instructions")) {
            for (auto it = j.at("mode_instructions").begin(); it != j.at("mode_instructions").end(); ++it) {
                c.mode_instructions[parse_mode(it.key())] = it.value().get<std::string>();
            }
        }
        if (j.contains("follow_up_policy")) {
            c.follow_up_policy = parse_follow_up_policy(j.at("follow_up_policy").get<std::string>());
        }
        if (j.contains("thresholds")) {
            const auto& t = j.at("thresholds");
            reject_unknown(t, {"low", "high"}, "thresholds.");
            c.thresholds.low = t.value("low", c.thresholds.low);
            c.thresholds.high = t.value("high", c.thresholds.high);
        }
        if (j.contains("history_max_rounds")) c.history_max_rounds = positive(j.at("history_max_rounds"));
        if (j.contains("prompt_char_budget")) c.prompt_char_budget = positive(j.at("prompt_char_budget"));
        if (j.contains("top_k")) c.top_k = positive(j.at("top_k"));
        if (j.contains("max_output_chars")) c.max_output_chars = positive(j.at("max_output_chars"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("course config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::invalid_config) throw;
        throw Error(ErrorCode::invalid_config, e.what());
    }
    c.validate();
    return c;
}

CourseConfig load_course_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open course config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return course_config_from_json(ss.str());
}

} // namespace courseassist
