#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facehci {

enum class Errc {
    InvalidInput,
    DegeneratePatch,
    InvalidTemplate,
    NotReady,
    NotCalibrated,
    NoLine,
    BadConfig,
    Io,
};

inline std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::DegeneratePatch: return "DegeneratePatch";
    case Errc::InvalidTemplate: return "InvalidTemplate";
    case Errc::NotReady: return "NotReady";
    case Errc::NotCalibrated: return "NotCalibrated";
    case Errc::NoLine: return "NoLine";
    case Errc::BadConfig: return "BadConfig";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

/// Single exception type for the library; the code tells callers which
/// contract was violated.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const char* what) {
    if (!ok) fail(code, what);
}

} // namespace facehci
