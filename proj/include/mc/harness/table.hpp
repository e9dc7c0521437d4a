// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_HARNESS_TABLE_HPP_
#define MC_HARNESS_TABLE_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mc::harness {

enum class Format { Csv, Json };

// Throws UnknownFormat.
Format format_from_string(std::string_view s);

// Rectangular report with a fixed column order. Cells are JSON strings or
// numbers; numbers are rounded to 6 decimals on insertion so CSV and JSON
// renderings carry identical values.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<nlohmann::json>>& rows() const { return rows_; }

  // Throws InputError when the row width does not match.
  void add_row(std::vector<nlohmann::json> row);

  std::string to_csv() const;
  // Array of objects, keys in column order.
  std::string to_json() const;
  std::string render(Format f) const;
  void emit(const std::filesystem::path& path, Format f) const;

  // Parses to_csv output back; numeric cells become numbers.
  static Table from_csv(std::string_view csv);
  static Table from_json(std::string_view json);

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<nlohmann::json>> rows_;
};

nlohmann::json num(double x);

}  // namespace mc::harness

#endif  // MC_HARNESS_TABLE_HPP_
