#include "submc/io.hpp"
#include "submc/types.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace submc
{

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed)
{
  std::uint64_t h = seed;
  for(std::byte b : bytes)
  {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text)
{
  return fnv1a(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::string hex64(std::uint64_t value)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if(!in)
    throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_hash(const std::filesystem::path& path)
{
  return hex64(fnv1a(read_file(path)));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
  std::error_code ec;
  if(path.has_parent_path())
    std::filesystem::create_directories(path.parent_path(), ec);

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if(!out)
      throw Error(ErrorCode::io, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if(!out)
      throw Error(ErrorCode::io, "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if(ec)
  {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io, "cannot move temporary file over " + path.string());
  }
}

} // namespace submc
