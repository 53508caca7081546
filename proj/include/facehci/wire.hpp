/**
 * @file wire.hpp
 * @brief Live-session message handling, independent of any transport.
 *
 * Binary frame message (little-endian):
 *   "FRM1" | u16 width | u16 height | u8 format (0 = gray8) | payload
 * Text commands: {"cmd":"reset"} and {"cmd":"config", <partial config keys>}.
 * Every reply is one JSON object with "v":1 and a "type" of state, ok or error.
 */
#pragma once

#include "facehci/config.hpp"
#include "facehci/events.hpp"
#include "facehci/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace facehci {

inline constexpr std::string_view kFrameMagic = "FRM1";
inline constexpr std::size_t kFrameHeaderSize = 9;
inline constexpr int kMaxFrameWidth = 1920;
inline constexpr int kMaxFrameHeight = 1080;
inline constexpr std::uint8_t kFormatGray8 = 0;

/// A protocol violation; `code` is the machine-readable reply code.
struct WireError {
    std::string code;
    std::string message;
    friend bool operator==(const WireError&, const WireError&) = default;
};

inline std::string encode_frame(const GrayImage& img) {
    require(img.width() <= 0xffff && img.height() <= 0xffff, Errc::InvalidInput, "frame too large for u16 header");
    std::string out(kFrameMagic);
    auto u16 = [&](int v) {
        out.push_back(static_cast<char>(v & 0xff));
        out.push_back(static_cast<char>((v >> 8) & 0xff));
    };
    u16(img.width());
    u16(img.height());
    out.push_back(static_cast<char>(kFormatGray8));
    out.append(reinterpret_cast<const char*>(img.pixels().data()), img.pixels().size());
    return out;
}

inline std::variant<GrayImage, WireError> decode_frame(std::string_view msg) {
    if (msg.size() < kFrameMagic.size() || msg.substr(0, kFrameMagic.size()) != kFrameMagic)
        return WireError{"bad-magic", "frame message must start with FRM1"};
    if (msg.size() < kFrameHeaderSize) return WireError{"bad-frame", "truncated frame header"};
    auto byte = [&](std::size_t i) { return static_cast<unsigned>(static_cast<unsigned char>(msg[i])); };
    const int w = static_cast<int>(byte(4) | (byte(5) << 8));
    const int h = static_cast<int>(byte(6) | (byte(7) << 8));
    const unsigned format = byte(8);
    if (format != kFormatGray8) return WireError{"bad-format", "unsupported pixel format " + std::to_string(format)};
    if (w > kMaxFrameWidth || h > kMaxFrameHeight)
        return WireError{"oversized", "frame exceeds " + std::to_string(kMaxFrameWidth) + "x" + std::to_string(kMaxFrameHeight)};
    const std::size_t expected = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (w == 0 || h == 0 || msg.size() - kFrameHeaderSize != expected)
        return WireError{"bad-frame", "payload is " + std::to_string(msg.size() - kFrameHeaderSize) + " bytes, header says " +
                                          std::to_string(w) + "x" + std::to_string(h)};
    const auto* p = reinterpret_cast<const std::uint8_t*>(msg.data() + kFrameHeaderSize);
    return GrayImage(w, h, std::vector<std::uint8_t>(p, p + expected));
}

inline nlohmann::json error_reply(const WireError& e) {
    return {{"v", kEventSchemaVersion}, {"type", "error"}, {"code", e.code}, {"message", e.message}};
}

inline nlohmann::json state_reply(const SessionSnapshot& s, const std::vector<EventRecord>& events) {
    nlohmann::json j{{"v", kEventSchemaVersion},
                     {"type", "state"},
                     {"frame", s.frame},
                     {"calibrated", s.calibrated},
                     {"locked", s.locked},
                     {"fps", s.fps ? nlohmann::json(*s.fps) : nlohmann::json(nullptr)},
                     {"face", nullptr},
                     {"nose", nullptr},
                     {"pointer", nullptr}};
    if (s.bte && s.eyes[0] && s.eyes[1])
        j["face"] = {{"bte", point_json(*s.bte)}, {"left_eye", point_json(*s.eyes[0])}, {"right_eye", point_json(*s.eyes[1])}};
    if (s.nose) j["nose"] = {{"x", s.nose->x}, {"y", s.nose->y}, {"confidence", s.nose->confidence}};
    if (s.pointer) j["pointer"] = {{"x", s.pointer->x}, {"y", s.pointer->y}, {"mode", std::string(to_string(s.pointer->mode))}};
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : events) ev.push_back(e.to_json());
    j["events"] = std::move(ev);
    return j;
}

/// One live client's pipeline plus the message dispatch around it.
class LiveSession {
public:
    explicit LiveSession(PipelineConfig cfg = {}, Clock clock = steady_clock_seconds())
        : session_(std::move(cfg), std::move(clock)) {}

    nlohmann::json on_binary(std::string_view msg) {
        auto decoded = decode_frame(msg);
        if (auto* err = std::get_if<WireError>(&decoded)) return error_reply(*err);
        const FrameResult r = session_.process(std::get<GrayImage>(decoded));
        return state_reply(session_.snapshot(), r.events);
    }

    nlohmann::json on_text(std::string_view msg) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(msg);
        } catch (const nlohmann::json::exception&) {
            return error_reply({"bad-command", "command is not valid JSON"});
        }
        if (!j.is_object() || !j.contains("cmd") || !j["cmd"].is_string())
            return error_reply({"bad-command", "command must be an object with a string \"cmd\""});
        const std::string cmd = j["cmd"].get<std::string>();
        if (cmd == "reset") {
            if (j.size() != 1) return error_reply({"bad-command", "reset takes no arguments"});
            session_.reset();
            SessionSnapshot snap = session_.snapshot();
            snap.calibrated = false;
            snap.locked = false;
            snap.bte.reset();
            snap.eyes = {};
            snap.nose.reset();
            snap.pointer.reset();
            return state_reply(snap, {});
        }
        if (cmd == "config") {
            j.erase("cmd");
            try {
                session_.set_config(merge_config(session_.config(), j));
            } catch (const Error& e) {
                return error_reply({"bad-config", e.what()});
            }
            return {{"v", kEventSchemaVersion}, {"type", "ok"}, {"cmd", "config"}};
        }
        return error_reply({"bad-command", "unknown command " + cmd});
    }

    const Session& session() const noexcept { return session_; }

private:
    Session session_;
};

} // namespace facehci
