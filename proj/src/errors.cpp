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

#include "polytod/errors.hpp"

#include <utility>

namespace polytod {

namespace {

std::string join_problems(const std::string& what,
                          const std::vector<std::string>& problems) {
  std::string out = what;
  for (const auto& p : problems) {
    out += "\n  - ";
    out += p;
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::size_t offset, std::string expectation)
    : Error("parse error at offset " + std::to_string(offset) + ": " +
            expectation),
      offset_(offset),
      expectation_(std::move(expectation)) {}

ValidationError::ValidationError(std::string what,
                                 std::vector<std::string> problems)
    : Error(join_problems(what, problems)), problems_(std::move(problems)) {}

CoverageError::CoverageError(std::vector<std::string> uncovered_domains)
    : ValidationError("few-shot bank does not cover every domain",
                      std::move(uncovered_domains)) {}

MappingError::MappingError(std::vector<std::string> missing_fields)
    : ValidationError("mapping config lacks required fields",
                      std::move(missing_fields)) {}

ScriptMissError::ScriptMissError(std::string digest, std::string prompt)
    : ProviderError("mock script has no response for prompt digest " + digest +
                    "\n--- prompt ---\n" + prompt + "\n--- end prompt ---"),
      digest_(std::move(digest)),
      prompt_(std::move(prompt)) {}

UnknownCategoryError::UnknownCategoryError(std::size_t line,
                                           const std::string& category)
    : Error("line " + std::to_string(line) + ": unknown annotation category '" +
            category + "'"),
      line_(line) {}

}  // namespace polytod
