// SPDX-License-Identifier: Apache-2.0
#include "mimogan/io.hpp"

#include <zlib.h>

#include <cstring>

namespace mimogan {

std::uint32_t crc32_of(const void* data, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

SectionWriter::SectionWriter(const std::string& path, const char magic[8],
                             std::uint32_t version)
    : f_(path, std::ios::binary), path_(path) {
  if (!f_) throw io_error(io_error::kind::open, "cannot open for writing: " + path);
  f_.write(magic, 8);
  const std::uint32_t reserved = 0;
  f_.write(reinterpret_cast<const char*>(&version), 4);
  f_.write(reinterpret_cast<const char*>(&reserved), 4);
}

void SectionWriter::write_section(const void* data, std::size_t len) {
  const std::uint64_t n = len;
  f_.write(reinterpret_cast<const char*>(&n), 8);
  f_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  const std::uint32_t crc = crc32_of(data, len);
  f_.write(reinterpret_cast<const char*>(&crc), 4);
  if (!f_) throw io_error(io_error::kind::other, "write failed: " + path_);
}

void SectionWriter::write_json(const json& j) {
  const std::string s = j.dump();
  write_section(s.data(), s.size());
}

void SectionWriter::close() {
  f_.close();
  if (!f_) throw io_error(io_error::kind::other, "close failed: " + path_);
}

SectionReader::SectionReader(const std::string& path, const char magic[8],
                             std::uint32_t version)
    : f_(path, std::ios::binary), path_(path) {
  if (!f_) throw io_error(io_error::kind::open, "cannot open: " + path);
  char m[8];
  std::uint32_t ver = 0, reserved = 0;
  f_.read(m, 8);
  f_.read(reinterpret_cast<char*>(&ver), 4);
  f_.read(reinterpret_cast<char*>(&reserved), 4);
  if (!f_) throw io_error(io_error::kind::truncated, "truncated header: " + path);
  if (std::memcmp(m, magic, 8) != 0)
    throw io_error(io_error::kind::magic, "bad magic in " + path);
  if (ver != version)
    throw io_error(io_error::kind::version,
                   "unsupported version " + std::to_string(ver) + " in " + path);
}

std::vector<char> SectionReader::read_section() {
  std::uint64_t n = 0;
  f_.read(reinterpret_cast<char*>(&n), 8);
  if (!f_) throw io_error(io_error::kind::truncated, "truncated section header: " + path_);
  std::vector<char> buf(n);
  f_.read(buf.data(), static_cast<std::streamsize>(n));
  std::uint32_t crc = 0;
  f_.read(reinterpret_cast<char*>(&crc), 4);
  if (!f_) throw io_error(io_error::kind::truncated, "truncated section body: " + path_);
  if (crc32_of(buf.data(), buf.size()) != crc)
    throw io_error(io_error::kind::checksum, "checksum mismatch in " + path_);
  return buf;
}

json SectionReader::read_json() {
  const std::vector<char> buf = read_section();
  return json::parse(buf.begin(), buf.end());
}

}  // namespace mimogan
