#pragma once

#include <stdexcept>
#include <string>

namespace prelude {

// Base of every error the library raises. Callers that only care about
// "something in the harness failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration: unknown identifiers, invalid
// hyperparameters, unmatched scripted rules.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A file could not be parsed. The message names the file and line.
class LoadError : public Error {
public:
    using Error::Error;
};

// An API precondition was violated by the caller.
class UsageError : public Error {
public:
    using Error::Error;
};

// Remote call failed after the configured number of attempts.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempt" +
                (attempts == 1 ? "" : "s") + ")"),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// Data that should be self-consistent is not (e.g. embedding dimension drift).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Session state machine rejected a transition.
class ConflictError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace prelude
