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

#include "polytod/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "polytod/errors.hpp"
#include "polytod/text.hpp"

namespace polytod {

using nlohmann::json;

const std::vector<std::string>& default_domains() {
  static const std::vector<std::string> kDomains = {
      "movie", "tv",       "attraction", "retaurant", "car",   "hotel",
      "hospital", "weather", "flight",   "pc",        "train", "class"};
  return kDomains;
}

std::vector<std::tuple<std::string, std::string, std::string, std::string>> read_dictionary_tsv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dictionary file " + path.string());
  std::vector<std::tuple<std::string, std::string, std::string, std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 4) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 4 tab-separated columns, found " +
                        std::to_string(cols.size()));
    }
    rows.emplace_back(text::trim(cols[0]), text::trim(cols[1]), text::trim(cols[2]),
                      text::nfc(text::trim(cols[3])));
  }
  return rows;
}

Ontology Ontology::load(const std::filesystem::path& path, std::string_view language,
                        const OntologyOptions& opts) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open ontology file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_json(doc, language, path.parent_path(), opts);
}

Ontology Ontology::from_json(const json& doc, std::string_view language,
                             const std::filesystem::path& base_dir, const OntologyOptions& opts) {
  if (!doc.is_object()) throw FormatError("ontology document must be an object");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    throw FormatError("ontology lacks an integer format_version");
  }
  if (doc["format_version"].get<int>() != kFormatVersion) {
    throw FormatError("unsupported ontology format_version " + doc["format_version"].dump());
  }
  if (!doc.contains("domains") || !doc["domains"].is_object()) {
    throw FormatError("ontology lacks a 'domains' object");
  }

  Ontology onto;
  std::vector<std::string> problems;
  onto.language_ = doc.value("language", std::string());
  if (onto.language_ != language) {
    problems.push_back("ontology language '" + onto.language_ + "' does not match requested '" +
                       std::string(language) + "'");
  }

  for (const auto& [domain, body] : doc["domains"].items()) {
    if (std::find(opts.domain_set.begin(), opts.domain_set.end(), domain) ==
        opts.domain_set.end()) {
      problems.push_back("domain '" + domain + "' is not in the configured domain set");
    }
    if (!body.is_object() || !body.contains("slots") || !body["slots"].is_array()) {
      throw FormatError("domain '" + domain + "' lacks a 'slots' array");
    }
    std::vector<SlotSpec> specs;
    std::set<std::string> seen;
    for (const auto& s : body["slots"]) {
      if (!s.is_object() || !s.contains("name") || !s["name"].is_string()) {
        throw FormatError("slot entry in domain '" + domain + "' lacks a string 'name'");
      }
      SlotSpec spec;
      spec.name = text::nfc(s["name"].get<std::string>());
      const std::string kind = s.value("kind", s.contains("values") ? "enumerated" : "free");
      if (kind == "enumerated") {
        spec.kind = SlotKind::kEnumerated;
      } else if (kind != "free") {
        throw FormatError("slot (" + domain + ", " + spec.name + ") has unknown kind '" + kind + "'");
      }
      if (!seen.insert(spec.name).second) {
        problems.push_back("duplicate slot (" + domain + ", " + spec.name + ")");
      }
      if (spec.enumerated()) {
        if (!s.contains("values") || !s["values"].is_array()) {
          throw FormatError("enumerated slot (" + domain + ", " + spec.name + ") lacks 'values'");
        }
        std::set<std::string> keys;
        for (const auto& v : s["values"]) {
          if (!v.is_string()) {
            throw FormatError("non-string value in (" + domain + ", " + spec.name + ")");
          }
          std::string value = text::trim(text::nfc(v.get<std::string>()));
          if (!keys.insert(text::lookup_key(value)).second) {
            problems.push_back("duplicate enum value '" + value + "' in (" + domain + ", " +
                               spec.name + ")");
          }
          spec.allowed_values.push_back(std::move(value));
        }
        if (spec.allowed_values.empty()) {
          problems.push_back("empty enum for (" + domain + ", " + spec.name + ")");
        }
      } else if (s.contains("values")) {
        problems.push_back("free slot (" + domain + ", " + spec.name + ") lists values");
      }
      specs.push_back(std::move(spec));
    }
    onto.domain_order_.push_back(domain);
    onto.domains_.emplace(domain, std::move(specs));
  }

  if (doc.contains("dictionary") && !doc["dictionary"].is_null()) {
    std::filesystem::path dict = doc["dictionary"].get<std::string>();
    if (dict.is_relative()) dict = base_dir / dict;
    onto.load_dictionary(dict, problems);
  }

  if (!problems.empty()) {
    throw ValidationError("ontology for '" + std::string(language) + "' is invalid",
                          std::move(problems));
  }
  return onto;
}

void Ontology::load_dictionary(const std::filesystem::path& path,
                               std::vector<std::string>& problems) {
  for (auto& [domain, slot, surface, canonical] : read_dictionary_tsv(path)) {
    const SlotSpec* spec = find_slot(domain, slot);
    if (!spec) {
      problems.push_back("dictionary entry for unknown slot (" + domain + ", " + slot + ")");
      continue;
    }
    if (!spec->enumerated()) {
      problems.push_back("dictionary entry for free slot (" + domain + ", " + slot + ")");
      continue;
    }
    if (std::find(spec->allowed_values.begin(), spec->allowed_values.end(), canonical) ==
        spec->allowed_values.end()) {
      problems.push_back("dictionary maps '" + surface + "' onto '" + canonical +
                         "', which is not an allowed value of (" + domain + ", " + slot + ")");
      continue;
    }
    dictionary_[{domain, slot, text::lookup_key(surface)}] = canonical;
  }
  has_dictionary_ = true;
}

bool Ontology::has_domain(std::string_view domain) const {
  return domains_.find(domain) != domains_.end();
}

const std::vector<SlotSpec>* Ontology::slots(std::string_view domain) const {
  auto it = domains_.find(domain);
  return it == domains_.end() ? nullptr : &it->second;
}

const SlotSpec* Ontology::find_slot(std::string_view domain, std::string_view slot) const {
  const auto* specs = slots(domain);
  if (!specs) return nullptr;
  auto it = std::find_if(specs->begin(), specs->end(),
                         [&](const SlotSpec& s) { return s.name == slot; });
  return it == specs->end() ? nullptr : &*it;
}

std::optional<std::vector<std::string>> Ontology::allowed_values(std::string_view domain,
                                                                 std::string_view slot) const {
  const SlotSpec* spec = find_slot(domain, slot);
  if (!spec || !spec->enumerated()) return std::nullopt;
  return spec->allowed_values;
}

std::optional<std::string> Ontology::canonical_member(std::string_view domain,
                                                      std::string_view slot,
                                                      std::string_view value) const {
  const SlotSpec* spec = find_slot(domain, slot);
  if (!spec || !spec->enumerated()) return std::nullopt;
  const std::string key = text::lookup_key(value);
  for (const auto& allowed : spec->allowed_values) {
    if (text::lookup_key(allowed) == key) return allowed;
  }
  return std::nullopt;
}

std::optional<std::string> Ontology::dictionary_normalize(std::string_view domain,
                                                          std::string_view slot,
                                                          std::string_view value) const {
  const SlotSpec* spec = find_slot(domain, slot);
  if (!spec) return std::nullopt;
  if (!spec->enumerated()) return std::string(value);
  if (auto member = canonical_member(domain, slot, value)) return member;
  auto it = dictionary_.find({std::string(domain), std::string(slot), text::lookup_key(value)});
  if (it == dictionary_.end()) return std::nullopt;
  return it->second;
}

}  // namespace polytod
