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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace polytod {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed state or act text. `offset` is the byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::string expectation);

  std::size_t offset() const { return offset_; }
  const std::string& expectation() const { return expectation_; }

 private:
  std::size_t offset_;
  std::string expectation_;
};

/// Unreadable or syntactically broken input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input violating semantic rules. Carries every violation found.
class ValidationError : public Error {
 public:
  ValidationError(std::string what, std::vector<std::string> problems);

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class CoverageError : public ValidationError {
 public:
  explicit CoverageError(std::vector<std::string> uncovered_domains);

  const std::vector<std::string>& uncovered() const { return problems(); }
};

class MappingError : public ValidationError {
 public:
  explicit MappingError(std::vector<std::string> missing_fields);
};

/// Bad configuration: missing resources, unsupported mode for a language, etc.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class LanguageMismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownDomainError : public Error {
 public:
  using Error::Error;
};

class EmptyBankError : public Error {
 public:
  using Error::Error;
};

class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Strict mock provider received a prompt it has no scripted answer for.
class ScriptMissError : public ProviderError {
 public:
  ScriptMissError(std::string digest, std::string prompt);

  const std::string& digest() const { return digest_; }
  const std::string& prompt() const { return prompt_; }

 private:
  std::string digest_;
  std::string prompt_;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyDiffError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class UnknownCategoryError : public Error {
 public:
  UnknownCategoryError(std::size_t line, const std::string& category);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace polytod
