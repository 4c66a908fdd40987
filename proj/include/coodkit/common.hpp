#pragma once

#include <stdexcept>
#include <string>

namespace cood {

// Base for every error the toolkit raises. `code` is a stable identifier
// suitable for machine-readable output; `what()` carries the human message.
struct Error : std::runtime_error {
    std::string code;
    Error(std::string c, const std::string& msg)
        : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

#define COOD_DEFINE_ERROR(Name)                                   \
    struct Name : ::cood::Error {                                 \
        explicit Name(const std::string& msg = "")                \
            : ::cood::Error(#Name, msg) {}                        \
    }

} // namespace cood
