#include "chainforge/transcript.hpp"

#include "chainforge/error.hpp"

#include <fstream>
#include <sstream>

namespace chainforge {

std::string_view role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::Assistant: return "assistant";
        case Role::User: return "user";
    }
    return "user";
}

Role parse_role(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "assistant") return Role::Assistant;
    if (name == "user") return Role::User;
    throw StructureError("unknown chat role '" + std::string(name) + "'");
}

nlohmann::json to_json(const ChatMessage& message) {
    return {{"role", role_name(message.role)}, {"content", message.content}};
}

ChatMessage message_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("role") || !j.contains("content") || !j["role"].is_string() ||
        !j["content"].is_string()) {
        throw StructureError("chat message must be an object with string role and content");
    }
    return {parse_role(j["role"].get<std::string>()), j["content"].get<std::string>()};
}

std::string to_jsonl(std::span<const ChatMessage> turns) {
    std::string out;
    for (const auto& m : turns) {
        out += R"({"role": )";
        out += nlohmann::json(role_name(m.role)).dump();
        out += R"(, "content": )";
        out += nlohmann::json(m.content).dump();
        out += "}\n";
    }
    return out;
}

std::vector<ChatMessage> from_jsonl(std::string_view text) {
    std::vector<ChatMessage> turns;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        ++line_no;
        if (!line.empty()) {
            try {
                turns.push_back(message_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::parse_error& e) {
                throw StructureError("transcript line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    return turns;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("missing or unreadable file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + path.string());
}

void write_transcript(const std::filesystem::path& path, std::span<const ChatMessage> turns) {
    write_file(path, to_jsonl(turns));
}

std::vector<ChatMessage> read_transcript(const std::filesystem::path& path) {
    try {
        return from_jsonl(read_file(path));
    } catch (const StructureError& e) {
        throw StructureError(path.string() + ": " + e.what());
    }
}

}  // namespace chainforge
