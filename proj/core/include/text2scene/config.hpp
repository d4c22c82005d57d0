// Copyright 2026 The Text2Scene Authors.
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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace text2scene {

/// Ordered "key = value" text file. Blank lines and lines starting with '#'
/// are ignored; later duplicates override earlier ones.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Keys in first-insertion order.
  const std::vector<std::string>& keys() const { return order_; }
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

  // Canonical "key = value" lines sorted by key.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  std::string origin_;
};

// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace text2scene
