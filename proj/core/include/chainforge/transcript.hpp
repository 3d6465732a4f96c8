#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainforge {

enum class Role { System, Assistant, User };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);  // throws StructureError

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

nlohmann::json to_json(const ChatMessage& message);
ChatMessage message_from_json(const nlohmann::json& j);  // throws StructureError

// One `{"role": "...", "content": "..."}` object per line, keys in that order,
// each line newline-terminated.
std::string to_jsonl(std::span<const ChatMessage> turns);
std::vector<ChatMessage> from_jsonl(std::string_view text);

void write_transcript(const std::filesystem::path& path, std::span<const ChatMessage> turns);
std::vector<ChatMessage> read_transcript(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);  // throws IntegrityError
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace chainforge
