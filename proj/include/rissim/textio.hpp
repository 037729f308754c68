// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rissim {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);
/// Strict parse of a full token; throws std::invalid_argument on garbage.
double parse_double(std::string_view token);

std::vector<std::string> split_whitespace(std::string_view line);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path &path);

std::string read_file(const std::filesystem::path &path);
/// Truncates and writes; throws with the path on failure.
void write_file(const std::filesystem::path &path, std::string_view contents);

} // namespace rissim
