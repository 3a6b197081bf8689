// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimogan/common.hpp"

namespace mimogan {

using json = nlohmann::ordered_json;

std::uint32_t crc32_of(const void* data, std::size_t len);

// Binary container layout shared by the dataset and checkpoint files:
//   8-byte magic, u32 version, u32 reserved          (16-byte header)
//   then sections: u64 length, payload bytes, u32 crc32(payload)
class SectionWriter {
 public:
  SectionWriter(const std::string& path, const char magic[8], std::uint32_t version);
  void write_section(const void* data, std::size_t len);
  void write_json(const json& j);
  void close();

 private:
  std::ofstream f_;
  std::string path_;
};

class SectionReader {
 public:
  SectionReader(const std::string& path, const char magic[8], std::uint32_t version);
  std::vector<char> read_section();
  json read_json();

 private:
  std::ifstream f_;
  std::string path_;
};

}  // namespace mimogan
