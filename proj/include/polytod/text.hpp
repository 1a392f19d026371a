// Copyright 2026 The polytod Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace polytod::text {

/// Unicode NFC normalization of UTF-8 text. Invalid UTF-8 is passed through.
std::string nfc(std::string_view s);

/// Full Unicode case folding.
std::string casefold(std::string_view s);

/// Strips leading and trailing whitespace (ASCII and U+3000).
std::string trim(std::string_view s);

/// The one lookup normalization shared by dictionary lookup and the
/// canonicalizer: NFC, then casefold, then trim.
std::string lookup_key(std::string_view s);

/// Splits UTF-8 text into code points, dropping whitespace code points.
std::vector<std::string> codepoints(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Keeps everything before the first blank (whitespace-only) line, trimmed.
std::string truncate_at_blank_line(std::string_view s);

/// Removes `prefix` (case-insensitive ASCII) from the start of trimmed `s`.
std::string strip_prefix_ci(std::string_view s, std::string_view prefix);

std::string ascii_lower(std::string_view s);

/// Lowercase hex SHA-256 of the bytes of `s`.
std::string sha256_hex(std::string_view s);

}  // namespace polytod::text
