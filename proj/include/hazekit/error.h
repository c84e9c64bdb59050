#pragma once

#include <stdexcept>
#include <string>

namespace hazekit {

// Single exception type carrying a coarse failure class so callers (and the
// CLI exit-code mapping) can tell user mistakes from broken files or from
// internal contract violations without string matching.
class Error : public std::runtime_error {
public:
    enum class Kind {
        Shape,     // tensor rank/extent mismatch
        Config,    // bad parameter value or inconsistent options
        Io,        // filesystem failure
        Format,    // unreadable or corrupt artifact file
        Contract,  // internal invariant broken (bug, or numeric divergence)
    };

    Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void throw_shape(const std::string& msg) { throw Error(Error::Kind::Shape, msg); }
[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(Error::Kind::Config, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(Error::Kind::Io, msg); }
[[noreturn]] inline void throw_format(const std::string& msg) { throw Error(Error::Kind::Format, msg); }
[[noreturn]] inline void throw_contract(const std::string& msg) { throw Error(Error::Kind::Contract, msg); }

}  // namespace hazekit
