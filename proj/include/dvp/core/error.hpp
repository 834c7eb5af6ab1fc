/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/core/error.hpp
 *
 * Copyright 2026 The dvp authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef DVP_CORE_ERROR_HPP
#define DVP_CORE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace dvp {

/**
 * Machine-readable failure categories. The CLI prints these verbatim on a
 * single line so scripts can dispatch on them.
 */
enum class ErrorCode {
    invalid_argument,
    shape_mismatch,
    out_of_range,
    behind_camera,
    empty_foreground,
    solver_failure,
    io_error,
    format_error,
    non_finite,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::invalid_argument: return "E_INVALID_ARGUMENT";
    case ErrorCode::shape_mismatch: return "E_SHAPE_MISMATCH";
    case ErrorCode::out_of_range: return "E_OUT_OF_RANGE";
    case ErrorCode::behind_camera: return "E_BEHIND_CAMERA";
    case ErrorCode::empty_foreground: return "E_EMPTY_FOREGROUND";
    case ErrorCode::solver_failure: return "E_SOLVER_FAILURE";
    case ErrorCode::io_error: return "E_IO";
    case ErrorCode::format_error: return "E_FORMAT";
    case ErrorCode::non_finite: return "E_NON_FINITE";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Throws an Error with the given code if the condition does not hold.
inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition)
    {
        throw Error(code, message);
    }
}

} // namespace dvp

#endif /* DVP_CORE_ERROR_HPP */
