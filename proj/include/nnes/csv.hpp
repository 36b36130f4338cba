#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nnes/types.hpp"

namespace nnes {

/// %.17g formatting: re-running with identical inputs reproduces the bytes.
std::string fmt_num(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  void row(const std::vector<std::string>& cells);

 private:
  struct Impl;
  Impl* impl_;
};

void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace nnes
