// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/error.hpp"

namespace mvoc {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::Range: return "range error";
        case ErrorKind::Parameter: return "parameter error";
        case ErrorKind::SingularTransform: return "singular transform";
        case ErrorKind::InvalidSigma: return "invalid sigma";
        case ErrorKind::UnknownCondition: return "unknown condition";
        case ErrorKind::Arity: return "arity error";
        case ErrorKind::InjectionShape: return "injection shape error";
        case ErrorKind::CacheMiss: return "cache miss";
        case ErrorKind::UndefinedMetric: return "undefined metric";
        case ErrorKind::Spec: return "spec error";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Io: return "I/O error";
        case ErrorKind::Numeric: return "numeric error";
    }
    return "error";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Io: return 3;
        case ErrorKind::Numeric:
        case ErrorKind::InvalidSigma:
        case ErrorKind::SingularTransform:
        case ErrorKind::UndefinedMetric: return 4;
        default: return 2;
    }
}

}  // namespace mvoc
