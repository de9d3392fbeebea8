#include "curator/csv.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace curator {

namespace {

struct RawCell {
  std::string text;
  bool quoted = false;
};

struct RawCsv {
  std::vector<std::vector<RawCell>> rows;
  std::vector<int> row_lines;  // 1-based source line of each row
};

RawCsv parse_raw(const std::string& content, const CsvOptions& opt) {
  RawCsv out;
  std::vector<RawCell> row;
  RawCell cell;
  int line = 1;
  int row_start_line = 1;
  size_t i = 0;

  // strip a UTF-8 BOM
  if (content.size() >= 3 && content[0] == '\xEF' && content[1] == '\xBB' &&
      content[2] == '\xBF')
    i = 3;

  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell = RawCell{};
  };
  auto end_row = [&] {
    end_cell();
    out.rows.push_back(std::move(row));
    out.row_lines.push_back(row_start_line);
    row.clear();
    row_start_line = line;
  };

  bool in_quotes = false;
  bool any = false;
  for (; i < content.size(); ++i) {
    char c = content[i];
    any = true;
    if (in_quotes) {
      if (c == opt.quote) {
        if (i + 1 < content.size() && content[i + 1] == opt.quote) {
          cell.text.push_back(opt.quote);
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.text.push_back(c);
      }
      continue;
    }
    if (c == opt.quote && cell.text.empty() && !cell.quoted) {
      in_quotes = true;
      cell.quoted = true;
    } else if (c == opt.delimiter) {
      end_cell();
    } else if (c == '\r') {
      // swallowed; \r\n and bare \n both end the row at \n
    } else if (c == '\n') {
      ++line;
      end_row();
    } else {
      cell.text.push_back(c);
    }
  }
  if (in_quotes) raise_at(ErrorCode::CsvError, {line, 1}, "unterminated quoted field");
  if (any && (!cell.text.empty() || cell.quoted || !row.empty())) end_row();
  return out;
}

Value coerce_cell(const RawCell& cell, TypeTag tag, int line, const std::string& column) {
  // unquoted empty field = missing; quoted "" is an explicit empty string
  if (cell.text.empty() && !cell.quoted) return Value::null();
  if (cell.text.empty() && tag != TypeTag::Text) return Value::null();
  switch (tag) {
    case TypeTag::Text:
      return Value::text(cell.text);
    case TypeTag::Bool: {
      if (cell.text == "true" || cell.text == "1") return Value::boolean(true);
      if (cell.text == "false" || cell.text == "0") return Value::boolean(false);
      raise_at(ErrorCode::CsvError, {line, 1},
               "cannot read \"" + cell.text + "\" as bool in column " + column);
    }
    case TypeTag::Int: {
      int64_t v = 0;
      const char* b = cell.text.data();
      const char* e = b + cell.text.size();
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc{} || p != e)
        raise_at(ErrorCode::CsvError, {line, 1},
                 "cannot read \"" + cell.text + "\" as int in column " + column);
      return Value::integer(v);
    }
    case TypeTag::Float: {
      char* endp = nullptr;
      double v = std::strtod(cell.text.c_str(), &endp);
      if (endp != cell.text.c_str() + cell.text.size() || cell.text.empty())
        raise_at(ErrorCode::CsvError, {line, 1},
                 "cannot read \"" + cell.text + "\" as float in column " + column);
      return Value::real(v);
    }
  }
  return Value::null();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Table build_table(const RawCsv& raw, const Schema& schema, const CsvOptions& opt) {
  Table table;
  table.schema = schema;
  size_t start = 0;
  if (opt.header) {
    if (raw.rows.empty())
      raise(ErrorCode::SchemaMismatch, "file has no header row");
    const auto& header = raw.rows[0];
    if (header.size() != schema.columns.size())
      raise(ErrorCode::SchemaMismatch,
            "header has " + std::to_string(header.size()) + " columns, schema expects " +
                std::to_string(schema.columns.size()));
    for (size_t c = 0; c < header.size(); ++c) {
      if (header[c].text != schema.columns[c].name)
        raise(ErrorCode::SchemaMismatch,
              "header column \"" + header[c].text + "\" does not match schema column \"" +
                  schema.columns[c].name + "\"");
    }
    start = 1;
  }
  for (size_t r = start; r < raw.rows.size(); ++r) {
    const auto& cells = raw.rows[r];
    int line = raw.row_lines[r];
    if (cells.size() != schema.columns.size())
      raise_at(ErrorCode::CsvError, {line, 1},
               "row has " + std::to_string(cells.size()) + " fields, expected " +
                   std::to_string(schema.columns.size()));
    Value::Record rec;
    rec.reserve(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
      const Column& col = schema.columns[c];
      rec.push_back({col.name, coerce_cell(cells[c], col.type, line, col.name)});
    }
    table.rows.push_back(Value::record(std::move(rec)));
  }
  return table;
}

bool parses_as_int(const std::string& s) {
  if (s.empty()) return false;
  int64_t v = 0;
  const char* b = s.data();
  auto [p, ec] = std::from_chars(b, b + s.size(), v);
  return ec == std::errc{} && p == b + s.size();
}

bool parses_as_float(const std::string& s) {
  if (s.empty()) return false;
  char* endp = nullptr;
  std::strtod(s.c_str(), &endp);
  return endp == s.c_str() + s.size();
}

}  // namespace

Table load_csv(const std::string& path, const Schema& schema, const CsvOptions& options) {
  return build_table(parse_raw(read_file(path), options), schema, options);
}

Table load_csv_infer(const std::string& path, const CsvOptions& options) {
  RawCsv raw = parse_raw(read_file(path), options);
  if (raw.rows.empty()) raise(ErrorCode::CsvError, "cannot infer a schema from an empty file");

  size_t ncols = raw.rows[0].size();
  std::vector<Column> cols(ncols);
  for (size_t c = 0; c < ncols; ++c) {
    cols[c].name = options.header ? raw.rows[0][c].text : "c" + std::to_string(c);
    if (cols[c].name.empty()) cols[c].name = "c" + std::to_string(c);
  }

  size_t start = options.header ? 1 : 0;
  for (size_t c = 0; c < ncols; ++c) {
    bool all_int = true, all_float = true, all_bool = true, saw_value = false;
    for (size_t r = start; r < raw.rows.size(); ++r) {
      if (c >= raw.rows[r].size()) continue;
      const RawCell& cell = raw.rows[r][c];
      if (cell.text.empty() && !cell.quoted) continue;  // missing
      saw_value = true;
      if (!parses_as_int(cell.text)) all_int = false;
      if (!parses_as_float(cell.text)) all_float = false;
      if (cell.text != "true" && cell.text != "false") all_bool = false;
    }
    if (!saw_value)
      cols[c].type = TypeTag::Text;
    else if (all_int)
      cols[c].type = TypeTag::Int;
    else if (all_float)
      cols[c].type = TypeTag::Float;
    else if (all_bool)
      cols[c].type = TypeTag::Bool;
    else
      cols[c].type = TypeTag::Text;
  }
  return build_table(raw, Schema(std::move(cols)), options);
}

namespace {

std::string csv_escape(const std::string& s, const CsvOptions& opt) {
  bool needs_quotes = s.find(opt.delimiter) != std::string::npos ||
                      s.find(opt.quote) != std::string::npos ||
                      s.find('\n') != std::string::npos ||
                      s.find('\r') != std::string::npos;
  if (!needs_quotes) return s;
  std::string out(1, opt.quote);
  for (char c : s) {
    if (c == opt.quote) out.push_back(opt.quote);
    out.push_back(c);
  }
  out.push_back(opt.quote);
  return out;
}

}  // namespace

std::string table_to_csv(const Table& table, const CsvOptions& options) {
  std::string out;
  if (options.header) {
    for (size_t c = 0; c < table.schema.columns.size(); ++c) {
      if (c) out.push_back(options.delimiter);
      out += csv_escape(table.schema.columns[c].name, options);
    }
    out.push_back('\n');
  }
  for (const Value& row : table.rows) {
    const Value::Record& rec = row.as_record();
    for (size_t c = 0; c < rec.size(); ++c) {
      if (c) out.push_back(options.delimiter);
      const Value& cell = rec[c].value;
      if (cell.is_null()) continue;  // missing stays empty and unquoted
      std::string text = render_scalar(cell);
      if (cell.kind() == ValueKind::Text && text.empty()) {
        out.push_back(options.quote);  // "" keeps explicit empty strings
        out.push_back(options.quote);
      } else {
        out += csv_escape(text, options);
      }
    }
    out.push_back('\n');
  }
  return out;
}

void save_csv(const std::string& path, const Table& table, const CsvOptions& options) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write file: " + path);
  out << table_to_csv(table, options);
}

}  // namespace curator
