#include <fstream>
#include <sstream>

#include "resae/errors.hpp"
#include "resae/kg.hpp"

namespace resae::kg {
namespace {

// Returns the byte offset of the first invalid sequence, or npos.
std::size_t find_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                          (len == 4 && cp < 0x10000);
    if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
    i += len;
  }
  return std::string_view::npos;
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

std::string_view direction_name(Direction direction) {
  switch (direction) {
    case Direction::kForward: return "forward";
    case Direction::kInverse: return "inverse";
    case Direction::kLoop: return "loop";
  }
  return "forward";
}

char parse_delimiter(std::string_view name) {
  if (name == "comma" || name == ",") return ',';
  if (name == "tab" || name == "\t" || name == "\\t") return '\t';
  throw ConfigError("unsupported delimiter '" + std::string(name) + "' (use comma or tab)");
}

std::vector<RawStatement> parse_statements_text(std::string_view text, char delimiter) {
  std::vector<RawStatement> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (const auto bad = find_invalid_utf8(line); bad != std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid UTF-8 at byte " +
                           std::to_string(bad),
                       line_no);
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    const auto fields = split_fields(line, delimiter);
    if (fields.size() < 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected at least 3 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    if ((fields.size() - 3) % 2 != 0) {
      throw ParseError("line " + std::to_string(line_no) +
                           ": dangling qualifier relation without a value",
                       line_no);
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (fields[f].empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": field " + std::to_string(f + 1) +
                             " is empty",
                         line_no);
      }
    }
    RawStatement st{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), {}};
    for (std::size_t f = 3; f < fields.size(); f += 2) {
      st.qualifiers.emplace_back(std::string(fields[f]), std::string(fields[f + 1]));
    }
    out.push_back(std::move(st));
    if (end == text.size()) break;
  }
  return out;
}

std::vector<RawStatement> parse_statements(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open statement file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_statements_text(buf.str(), delimiter);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::string serialize_statements(std::span<const RawStatement> statements, char delimiter) {
  std::string out;
  for (const auto& st : statements) {
    out += st.subject;
    out += delimiter;
    out += st.relation;
    out += delimiter;
    out += st.object;
    for (const auto& [qr, qv] : st.qualifiers) {
      out += delimiter;
      out += qr;
      out += delimiter;
      out += qv;
    }
    out += '\n';
  }
  return out;
}

}  // namespace resae::kg
