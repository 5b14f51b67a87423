#include <array>
#include <cstdio>
#include <memory>
#include <sstream>

#include <unistd.h>
#include <zlib.h>

#include "sciagent/agents.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

namespace {

std::optional<std::string> inflate_stream(std::string_view data) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) return std::nullopt;
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  std::array<char, 16384> buf;
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf.data(), buf.size() - zs.avail_out);
    if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;  // truncated but usable
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END && rc != Z_BUF_ERROR) return std::nullopt;
  return out;
}

// Literal string starting after '(' at `i`; leaves `i` past the closing ')'.
std::string literal_string(const std::string& s, std::size_t& i) {
  std::string out;
  int depth = 1;
  while (i < s.size()) {
    char c = s[i++];
    if (c == '\\' && i < s.size()) {
      char e = s[i++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case '\n': break;
        case '\r':
          if (i < s.size() && s[i] == '\n') ++i;
          break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && i < s.size() && s[i] >= '0' && s[i] <= '7'; ++k) v = v * 8 + (s[i++] - '0');
            out.push_back(static_cast<char>(v));
          } else {
            out.push_back(e);
          }
      }
    } else if (c == '(') {
      ++depth;
      out.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) break;
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string hex_string(const std::string& s, std::size_t& i) {
  std::string digits;
  while (i < s.size() && s[i] != '>') {
    if (std::isxdigit(static_cast<unsigned char>(s[i]))) digits.push_back(s[i]);
    ++i;
  }
  ++i;
  if (digits.size() % 2) digits.push_back('0');
  std::string out;
  for (std::size_t k = 0; k < digits.size(); k += 2) {
    out.push_back(static_cast<char>(std::stoi(digits.substr(k, 2), nullptr, 16)));
  }
  // two-byte big-endian glyphs with a zero high byte read as Latin-1
  if (out.size() >= 2 && out.size() % 2 == 0) {
    bool wide = true;
    for (std::size_t k = 0; k < out.size(); k += 2) wide = wide && out[k] == '\0';
    if (wide) {
      std::string narrow;
      for (std::size_t k = 1; k < out.size(); k += 2) narrow.push_back(out[k]);
      return narrow;
    }
  }
  return out;
}

// Text shown by Tj / TJ / ' / " operators of one content stream.
std::string content_text(const std::string& s) {
  std::string out;
  std::vector<std::string> operands;  // pending strings
  std::string array_text;
  bool in_array = false;
  std::size_t i = 0;
  auto newline = [&] {
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == '(') {
      ++i;
      auto str = literal_string(s, i);
      if (in_array) array_text += str;
      else operands.push_back(str);
    } else if (c == '<' && i + 1 < s.size() && s[i + 1] != '<') {
      ++i;
      auto str = hex_string(s, i);
      if (in_array) array_text += str;
      else operands.push_back(str);
    } else if (c == '[') {
      in_array = true;
      array_text.clear();
      ++i;
    } else if (c == ']') {
      in_array = false;
      operands.push_back(array_text);
      ++i;
    } else if (c == '%') {
      while (i < s.size() && s[i] != '\n' && s[i] != '\r') ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '\'' || c == '"' || c == '*') {
      std::size_t j = i;
      while (j < s.size() && (std::isalpha(static_cast<unsigned char>(s[j])) || s[j] == '*' || s[j] == '\'' ||
                              s[j] == '"')) {
        ++j;
      }
      std::string op = s.substr(i, j - i);
      i = j;
      if (op == "Tj" || op == "TJ") {
        if (!operands.empty()) out += operands.back();
      } else if (op == "'" || op == "\"") {
        newline();
        if (!operands.empty()) out += operands.back();
      } else if (op == "Td" || op == "TD" || op == "T*" || op == "ET" || op == "Tm") {
        newline();
      }
      if (!in_array) operands.clear();
    } else if (in_array && (c == '-' || std::isdigit(static_cast<unsigned char>(c)))) {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      double kern = std::atof(s.substr(i, j - i).c_str());
      if (kern < -200) array_text.push_back(' ');
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::string run_extractor(const std::string& pdf_bytes, const std::string& command_template) {
  char tmpl[] = "/tmp/sciagent-pdf-XXXXXX";
  int fd = ::mkstemp(tmpl);
  if (fd < 0) throw ExtractionFailure("cannot create a temporary file");
  ::close(fd);
  std::string path = tmpl;
  write_file_atomic(path, pdf_bytes);
  auto command = fill_template(command_template, {{"pdf", "'" + path + "'"}});
  std::string out;
  int status = -1;
  if (FILE* pipe = ::popen(command.c_str(), "r")) {
    std::array<char, 8192> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    status = ::pclose(pipe);
  }
  std::remove(path.c_str());
  if (status != 0) throw ExtractionFailure("extractor command failed: " + command);
  return out;
}

}  // namespace

std::string extract_pdf_text(const std::string& pdf_bytes, const std::string& extractor_command) {
  if (pdf_bytes.empty()) throw ExtractionFailure("empty PDF");
  if (!pdf_bytes.starts_with("%PDF-")) throw ExtractionFailure("not a PDF (bad header)");
  std::string text;
  if (!extractor_command.empty()) {
    text = run_extractor(pdf_bytes, extractor_command);
  } else {
    std::size_t pos = 0;
    while ((pos = pdf_bytes.find("stream", pos)) != std::string::npos) {
      if (pos >= 3 && pdf_bytes.compare(pos - 3, 3, "end") == 0) {
        pos += 6;
        continue;
      }
      std::size_t begin = pos + 6;
      if (begin < pdf_bytes.size() && pdf_bytes[begin] == '\r') ++begin;
      if (begin < pdf_bytes.size() && pdf_bytes[begin] == '\n') ++begin;
      auto end = pdf_bytes.find("endstream", begin);
      if (end == std::string::npos) break;
      auto dict_start = pdf_bytes.rfind("<<", pos);
      std::string dict = dict_start == std::string::npos ? "" : pdf_bytes.substr(dict_start, pos - dict_start);
      std::string_view raw(pdf_bytes.data() + begin, end - begin);
      pos = end + 9;
      if (dict.find("/Image") != std::string::npos || dict.find("/XObject") != std::string::npos) continue;
      std::string body;
      if (dict.find("/FlateDecode") != std::string::npos) {
        auto inflated = inflate_stream(raw);
        if (!inflated) continue;
        body = std::move(*inflated);
      } else if (dict.find("/Filter") == std::string::npos) {
        body = std::string(raw);
      } else {
        continue;  // other filters are not text we can read
      }
      auto piece = content_text(body);
      if (!trim(piece).empty()) text += piece + "\n";
    }
  }
  auto cleaned = trim(text);
  if (cleaned.empty()) throw ExtractionFailure("no extractable text");
  return cleaned;
}

PaperRecord extract_text(PaperRecord record, const std::string& pdf_bytes, const std::string& extractor_command) {
  record.raw_text = extract_pdf_text(pdf_bytes, extractor_command);
  return record;
}

}  // namespace sciagent
