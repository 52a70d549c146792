// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gsod {

/// Shortest representation that round-trips through parse_double.
std::string format_double(double v);

std::string_view trim(std::string_view s) noexcept;

/// Splits on `sep` and trims each field; keeps empty fields.
std::vector<std::string> split(std::string_view s, char sep);

/// Strict finite-double parse of the whole (trimmed) field. Throws
/// ConfigError naming `what`.
double parse_double(std::string_view s, std::string_view what);

/// Non-negative integer parse. Throws ConfigError naming `what`.
unsigned long long parse_unsigned(std::string_view s, std::string_view what);

}  // namespace gsod
