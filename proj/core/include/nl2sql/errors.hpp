#pragma once

#include <stdexcept>
#include <string>

namespace nl2sql {

// Base class for all library errors. Subcommands map these onto exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / database-file access failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input: not a SQLite file, bad JSON, bad index file.
class FormatError : public Error {
public:
    using Error::Error;
};

// Semantically invalid data: unknown identifiers, empty training sets.
class DataError : public Error {
public:
    using Error::Error;
};

// Relevance scorer backend failed or returned garbage.
class ScorerError : public Error {
public:
    using Error::Error;
};

// Completion gateway exhausted retries or transport is broken.
class GatewayError : public Error {
public:
    using Error::Error;
};

// Misconfiguration: missing API key, bad endpoint, auth rejection.
class ConfigError : public Error {
public:
    using Error::Error;
};

// SQL failed to compile or run.
class ExecError : public Error {
public:
    using Error::Error;
};

// Statement exceeded its wall-clock budget.
class TimeoutError : public Error {
public:
    using Error::Error;
};

// Statement rejected by the read-only / SELECT-only policy.
class PolicyError : public Error {
public:
    using Error::Error;
};

// Prompt cannot fit the token budget even after maximal truncation.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Index build found nothing to index.
class EmptyIndexError : public Error {
public:
    using Error::Error;
};

}  // namespace nl2sql
