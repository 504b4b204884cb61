// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>

namespace classengage {

enum class ErrorKind {
    data,                  ///< malformed or inconsistent input values
    schema,                ///< file schema violation
    contiguity,            ///< segments overlap, leave gaps or fail to cover the window
    dictionary_mismatch,   ///< label id or name outside the active dictionary
    context_unavailable,   ///< no peers to build a classroom context from
    context_required,      ///< context-based prompt requested without context
    degenerate_embedding,  ///< zero-norm or non-finite embedding
    recognition,           ///< one or more segments could not be recognized
    transport,             ///< endpoint unreachable or returned an error status
    verdict_parse,         ///< endpoint reply carries no engagement label
    config,                ///< invalid or incomplete run configuration
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by endpoint clients. Transient failures (timeouts, 5xx, 429) are retried.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool transient)
        : Error(ErrorKind::transport, what), transient_(transient) {}

    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

class VerdictParseError : public Error {
public:
    VerdictParseError(const std::string& what, std::string raw_response)
        : Error(ErrorKind::verdict_parse, what), raw_(std::move(raw_response)) {}

    const std::string& raw_response() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// Process exit code for an error kind: 1 data, 2 transport, 3 parse.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace classengage
