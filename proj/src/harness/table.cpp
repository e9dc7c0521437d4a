// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/harness/table.hpp"

#include <cmath>

#include "mc/error.hpp"
#include "mc/hash.hpp"

namespace mc::harness {

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits one CSV record; `quoted` marks fields that were quoted.
std::vector<std::pair<std::string, bool>> split_record(std::string_view line) {
  std::vector<std::pair<std::string, bool>> fields;
  std::string cur;
  bool quoted = false;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = quoted = true;
    } else if (c == ',') {
      fields.emplace_back(std::move(cur), quoted);
      cur.clear();
      quoted = false;
    } else {
      cur += c;
    }
  }
  if (in_quotes) throw ParseError("csv: unterminated quote");
  fields.emplace_back(std::move(cur), quoted);
  return fields;
}

}  // namespace

nlohmann::json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  const double r = std::round(x * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

Format format_from_string(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw UnknownFormat("unknown report format '" + std::string(s) + "'");
}

void Table::add_row(std::vector<nlohmann::json> row) {
  if (row.size() != columns_.size()) {
    throw InputError("table row has " + std::to_string(row.size()) + " cells, expected " +
                     std::to_string(columns_.size()));
  }
  for (auto& cell : row) {
    if (cell.is_number_float()) cell = num(cell.get<double>());
  }
  rows_.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += ',';
    out += columns_[c];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      if (row[c].is_string()) {
        out += csv_quote(row[c].get<std::string>());
      } else if (!row[c].is_null()) {
        out += row[c].dump();
      }
    }
    out += '\n';
  }
  return out;
}

std::string Table::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : rows_) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[columns_[c]] = row[c];
    arr.push_back(std::move(obj));
  }
  nlohmann::ordered_json doc;
  doc["columns"] = columns_;
  doc["rows"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::string Table::render(Format f) const { return f == Format::Csv ? to_csv() : to_json(); }

void Table::emit(const std::filesystem::path& path, Format f) const { write_file(path, render(f)); }

Table Table::from_csv(std::string_view csv) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    const std::size_t end = csv.find('\n', start);
    lines.push_back(csv.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (lines.empty()) throw ParseError("csv: missing header");
  std::vector<std::string> columns;
  for (auto& [name, quoted] : split_record(lines[0])) columns.push_back(name);
  Table t(columns);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<nlohmann::json> row;
    for (auto& [field, quoted] : split_record(lines[i])) {
      if (quoted) {
        row.emplace_back(field);
      } else if (field.empty()) {
        row.emplace_back(nullptr);
      } else {
        try {
          row.push_back(nlohmann::json::parse(field));
        } catch (const nlohmann::json::exception&) {
          row.emplace_back(field);
        }
      }
    }
    t.add_row(std::move(row));
  }
  return t;
}

Table Table::from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::ordered_json::parse(json);
    Table t(doc.at("columns").get<std::vector<std::string>>());
    for (const auto& obj : doc.at("rows")) {
      std::vector<nlohmann::json> row;
      for (const auto& c : t.columns_) row.push_back(nlohmann::json::parse(obj.at(c).dump()));
      t.add_row(std::move(row));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("table json: ") + e.what());
  }
}

}  // namespace mc::harness
