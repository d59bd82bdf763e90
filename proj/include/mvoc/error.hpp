// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mvoc {

enum class ErrorKind {
    Shape,
    Range,
    Parameter,
    SingularTransform,
    InvalidSigma,
    UnknownCondition,
    Arity,
    InjectionShape,
    CacheMiss,
    UndefinedMetric,
    Spec,
    Config,
    Io,
    Numeric,
};

const char* error_kind_name(ErrorKind kind) noexcept;

/// Base error for the library. The kind decides the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// 2 config error, 3 I/O error, 4 numeric error.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace mvoc
