// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include <stdexcept>
#include <string>

namespace isptune {

enum class ErrorCode {
    InvalidArgument,
    ShapeMismatch,
    DomainMismatch,
    KernelTooLarge,
    MalformedHeader,
    TruncatedPayload,
    Io,
    MissingTap,
    MissingUpstream,
    BudgetTooSmall,
};

/// Exception type thrown by every isptune operation. The code lets callers
/// (and tests) tell error kinds apart without parsing the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) {
        fail(ErrorCode::InvalidArgument, what);
    }
}

} // namespace isptune
