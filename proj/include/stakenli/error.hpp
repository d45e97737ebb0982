#pragma once

#include <stdexcept>
#include <string>

namespace stakenli {

/// Failure category. Each maps to one process exit code in the CLI.
enum class ErrorKind {
    input,      ///< malformed or inconsistent user input (exit 2)
    provider,   ///< recognizer / coreference provider failure (exit 3)
    transport,  ///< scorer backend unreachable after retries (exit 4)
    protocol,   ///< scorer backend answered with a malformed body (exit 4)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    bool retryable() const noexcept { return kind_ == ErrorKind::transport; }

private:
    ErrorKind kind_;
};

inline Error input_error(const std::string& what) { return {ErrorKind::input, what}; }

inline Error provider_error(const std::string& provider, const std::string& what)
{
    return {ErrorKind::provider, "provider '" + provider + "': " + what};
}

inline Error transport_error(const std::string& backend, const std::string& what)
{
    return {ErrorKind::transport, "backend '" + backend + "': " + what};
}

inline Error protocol_error(const std::string& backend, const std::string& what)
{
    return {ErrorKind::protocol, "backend '" + backend + "': " + what};
}

inline int exit_code_for(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::input: return 2;
    case ErrorKind::provider: return 3;
    case ErrorKind::transport:
    case ErrorKind::protocol: return 4;
    }
    return 1;
}

}  // namespace stakenli
