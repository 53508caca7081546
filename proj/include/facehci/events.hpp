#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

namespace facehci {

inline constexpr int kEventSchemaVersion = 1;

/// One line of the JSON Lines event stream.
struct EventRecord {
    int frame = 0;
    std::string kind;  // face | nose | blink | pointer | click | reinit | metrics
    nlohmann::json data = nlohmann::json::object();

    nlohmann::json to_json() const {
        return {{"v", kEventSchemaVersion}, {"frame", frame}, {"kind", kind}, {"data", data}};
    }
    std::string to_line() const { return to_json().dump(); }

    static EventRecord from_json(const nlohmann::json& j) {
        return {j.at("frame").get<int>(), j.at("kind").get<std::string>(), j.at("data")};
    }

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

} // namespace facehci
