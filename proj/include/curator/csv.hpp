#pragma once

#include <string>

#include "curator/value.hpp"

namespace curator {

struct CsvOptions {
  char delimiter = ',';
  char quote = '"';
  bool header = true;
};

// RFC-4180-style reader, type-coerced per schema. An unquoted empty field
// reads as Null (missing data); a quoted empty string stays "" in text
// columns. Throws CsvError(line, reason) / SchemaMismatch(header).
Table load_csv(const std::string& path, const Schema& schema, const CsvOptions& options = {});

// Same reader with the schema inferred from the header row and cell shapes
// (int if every non-missing cell parses as an int, then float, then bool,
// else text).
Table load_csv_infer(const std::string& path, const CsvOptions& options = {});

std::string table_to_csv(const Table& table, const CsvOptions& options = {});
void save_csv(const std::string& path, const Table& table, const CsvOptions& options = {});

}  // namespace curator
