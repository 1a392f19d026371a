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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace polytod {

/// The twelve domain identifiers, spelled and ordered as the dataset's
/// domain-selection prompt lists them.
const std::vector<std::string>& default_domains();

enum class SlotKind { kFree, kEnumerated };

struct SlotSpec {
  std::string name;
  SlotKind kind = SlotKind::kFree;
  std::vector<std::string> allowed_values;  // enumerated only

  bool enumerated() const { return kind == SlotKind::kEnumerated; }
};

struct OntologyOptions {
  /// Every domain in an ontology file must be drawn from this set.
  std::vector<std::string> domain_set = default_domains();
};

class Ontology {
 public:
  static constexpr int kFormatVersion = 1;

  /// Loads and validates an ontology file (see docs/formats.md). A relative
  /// `dictionary` path inside the file resolves against the file's directory.
  static Ontology load(const std::filesystem::path& path, std::string_view language,
                       const OntologyOptions& opts = {});
  static Ontology from_json(const nlohmann::json& doc, std::string_view language,
                            const std::filesystem::path& base_dir = {},
                            const OntologyOptions& opts = {});

  const std::string& language() const { return language_; }
  /// Domain names, sorted.
  const std::vector<std::string>& domains() const { return domain_order_; }
  bool has_domain(std::string_view domain) const;
  /// Slots of a domain in file order; nullptr for unknown domains.
  const std::vector<SlotSpec>* slots(std::string_view domain) const;
  const SlotSpec* find_slot(std::string_view domain, std::string_view slot) const;

  /// The enum list, or nullopt for free or unknown slots.
  std::optional<std::vector<std::string>> allowed_values(std::string_view domain,
                                                         std::string_view slot) const;

  /// Canonical spelling of `value` if it is a member of the slot's enum under
  /// text::lookup_key; nullopt otherwise (including free/unknown slots).
  std::optional<std::string> canonical_member(std::string_view domain, std::string_view slot,
                                              std::string_view value) const;

  bool has_dictionary() const { return has_dictionary_; }

  /// Free slots return `value` unchanged. Enumerated slots return the
  /// canonical value when `value` is already a member or the dictionary maps
  /// it; nullopt when unmapped or the slot is unknown.
  std::optional<std::string> dictionary_normalize(std::string_view domain, std::string_view slot,
                                                  std::string_view value) const;

  std::size_t dictionary_size() const { return dictionary_.size(); }

 private:
  using DictKey = std::tuple<std::string, std::string, std::string>;

  void load_dictionary(const std::filesystem::path& path, std::vector<std::string>& problems);

  std::string language_;
  std::vector<std::string> domain_order_;
  std::map<std::string, std::vector<SlotSpec>, std::less<>> domains_;
  std::map<DictKey, std::string> dictionary_;
  bool has_dictionary_ = false;
};

/// Reads a four-column TSV dictionary: domain, slot, surface, canonical.
/// Blank lines and lines starting with '#' are skipped.
std::vector<std::tuple<std::string, std::string, std::string, std::string>> read_dictionary_tsv(
    const std::filesystem::path& path);

}  // namespace polytod
