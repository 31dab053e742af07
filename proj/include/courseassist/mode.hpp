#pragma once

#include <array>
#include <string_view>

namespace courseassist {

enum class ConversationMode { general, homework, practice };

inline constexpr std::array kAllModes{ConversationMode::general, ConversationMode::homework,
                                      ConversationMode::practice};

std::string_view to_string(ConversationMode mode);
ConversationMode parse_mode(std::string_view text);

} // namespace courseassist
