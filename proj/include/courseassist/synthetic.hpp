#pragma once

#include "courseassist/conversation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace courseassist {

/// Target shape of a synthetic log, given as exact counts over the
/// non-developer conversations. Developer conversations come on top.
struct SimulationSpec {
    std::size_t total = 0;
    /// Duration strictly under ten minutes. Zero-round conversations always are.
    std::size_t within_ten_minutes = 0;
    std::size_t zero_rounds = 0;
    std::size_t single_round = 0;
    /// Rounds <= 3, so it includes the zero and single round conversations.
    std::size_t within_three_rounds = 0;
    std::size_t homework_mode = 0;
    std::size_t practice_mode = 0;
    /// Conversations with at least one flagged assistant message.
    std::size_t follow_up_emitted = 0;
    /// Of those, conversations where the student replied after the flag.
    std::size_t follow_up_answered = 0;
    std::size_t developer_total = 0;
    std::size_t developer_zero_rounds = 0;

    std::vector<std::string> courses{"course-a"};
    std::size_t users_per_course = 100;
    Timestamp semester_start{};
    int weeks = 16;
    int tz_offset_minutes = 0;

    bool operator==(const SimulationSpec&) const = default;
};

/// Throws inconsistent_spec when the counts cannot be realized together.
void validate(const SimulationSpec& spec);

SimulationSpec simulation_spec_from_json(const std::string& text);
SimulationSpec load_simulation_spec(const std::string& path);
std::string simulation_spec_to_json(const SimulationSpec& spec);

/// Conversations realizing every count in the spec exactly, ordered by
/// (started_at, id). Same spec and seed give the same output.
std::vector<Conversation> generate_synthetic_logs(const SimulationSpec& spec, std::uint64_t seed);

} // namespace courseassist
