#pragma once

// Frame boundaries in Motion-JPEG byte streams.
//
// Frames are located by walking marker segments from SOI to EOI, so EOI
// bytes inside APPn payloads (embedded thumbnails) do not end a frame early.
// Bytes between frames (multipart headers, boundaries) are skipped.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dctscene {

struct ByteRange {
  std::size_t offset = 0;
  std::size_t length = 0;
  bool operator==(const ByteRange&) const = default;
};

/// Position of the next SOI marker at or after `from`.
inline std::optional<std::size_t> find_soi(std::span<const std::uint8_t> data, std::size_t from) {
  for (std::size_t i = from; i + 1 < data.size(); ++i) {
    if (data[i] == 0xFF && data[i + 1] == 0xD8) return i;
  }
  return std::nullopt;
}

/// One past the EOI of the frame starting at `soi`, or nullopt when the
/// frame is incomplete in `data`.
inline std::optional<std::size_t> find_jpeg_end(std::span<const std::uint8_t> data, std::size_t soi) {
  std::size_t pos = soi + 2;
  const std::size_t n = data.size();
  while (pos + 1 < n) {
    if (data[pos] != 0xFF) {
      ++pos;  // stray byte between segments
      continue;
    }
    const std::uint8_t m = data[pos + 1];
    if (m == 0xFF) {
      ++pos;
      continue;
    }
    if (m == 0xD9) return pos + 2;
    if (m == 0x00 || m == 0x01 || (m >= 0xD0 && m <= 0xD7)) {
      pos += 2;
      continue;
    }
    if (m == 0xD8) return pos;  // next frame began before EOI; hand over the truncated one
    if (pos + 3 >= n) return std::nullopt;
    const std::size_t len = (static_cast<std::size_t>(data[pos + 2]) << 8) | data[pos + 3];
    if (pos + 2 + len > n) return std::nullopt;
    pos += 2 + len;
    if (m == 0xDA) {
      // Entropy-coded data runs to the next marker that is not a stuffed
      // byte or a restart marker.
      while (pos + 1 < n) {
        if (data[pos] == 0xFF) {
          const std::uint8_t nx = data[pos + 1];
          if (nx != 0x00 && nx != 0xFF && !(nx >= 0xD0 && nx <= 0xD7)) break;
        }
        ++pos;
      }
    }
  }
  return std::nullopt;
}

/// Byte ranges of all complete frames in a buffer. A frame that starts but
/// never reaches EOI is dropped.
inline std::vector<ByteRange> split_jpeg_frames(std::span<const std::uint8_t> data) {
  std::vector<ByteRange> out;
  std::size_t pos = 0;
  while (auto soi = find_soi(data, pos)) {
    const auto end = find_jpeg_end(data, *soi);
    if (!end) break;
    out.push_back({*soi, *end - *soi});
    pos = *end;
  }
  return out;
}

/// Incremental framer for byte streams arriving in arbitrary chunks.
class MjpegFramer {
 public:
  void push(std::span<const std::uint8_t> chunk) { buffer_.insert(buffer_.end(), chunk.begin(), chunk.end()); }

  /// Moves the next complete frame into `frame`. Returns false when more
  /// data is needed.
  bool next(std::vector<std::uint8_t>& frame) {
    const auto soi = find_soi(buffer_, 0);
    if (!soi) {
      // Keep a trailing 0xFF: it may be the first half of the next SOI.
      const bool keep_last = !buffer_.empty() && buffer_.back() == 0xFF;
      buffer_.erase(buffer_.begin(), buffer_.end() - (keep_last ? 1 : 0));
      return false;
    }
    const auto end = find_jpeg_end(buffer_, *soi);
    if (!end) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(*soi));
      return false;
    }
    frame.assign(buffer_.begin() + static_cast<std::ptrdiff_t>(*soi), buffer_.begin() + static_cast<std::ptrdiff_t>(*end));
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(*end));
    return true;
  }

  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::vector<std::uint8_t> buffer_;
};

/// Boundary parameter of a multipart Content-Type header value.
inline std::optional<std::string> multipart_boundary(std::string_view content_type) {
  std::string lower(content_type);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto at = lower.find("boundary=");
  if (at == std::string::npos) return std::nullopt;
  std::string b(content_type.substr(at + 9));
  if (!b.empty() && b.front() == '"') {
    const auto close = b.find('"', 1);
    b = b.substr(1, close == std::string::npos ? std::string::npos : close - 1);
  } else if (const auto semi = b.find_first_of(" ;\t\r\n"); semi != std::string::npos) {
    b.resize(semi);
  }
  if (b.empty()) return std::nullopt;
  return b;
}

/// Part bodies of a multipart payload. Content-Length is honoured when a part
/// carries it; otherwise the body runs to the CRLF before the next delimiter.
inline std::vector<ByteRange> split_multipart(std::span<const std::uint8_t> body, std::string_view boundary) {
  std::string delim = "--";
  if (boundary.size() >= 2 && boundary.substr(0, 2) == "--") delim.clear();
  delim += boundary;
  const std::string_view text(reinterpret_cast<const char*>(body.data()), body.size());

  std::vector<ByteRange> parts;
  std::size_t pos = text.find(delim);
  while (pos != std::string_view::npos) {
    std::size_t p = pos + delim.size();
    if (text.substr(p, 2) == "--") break;  // closing delimiter
    const std::size_t line_end = text.find('\n', p);
    if (line_end == std::string_view::npos) break;
    std::size_t headers_end = text.find("\r\n\r\n", line_end + 1);
    std::size_t body_start = 0;
    if (text.substr(line_end + 1, 2) == "\r\n") {
      body_start = line_end + 3;
    } else if (text.substr(line_end + 1, 1) == "\n") {
      body_start = line_end + 2;
    } else if (headers_end != std::string_view::npos) {
      body_start = headers_end + 4;
    } else if (const auto lf = text.find("\n\n", line_end + 1); lf != std::string_view::npos) {
      headers_end = lf;
      body_start = lf + 2;
    } else {
      break;
    }

    std::optional<std::size_t> content_length;
    {
      std::string headers(text.substr(line_end + 1, body_start - line_end - 1));
      std::string lower = headers;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      if (const auto cl = lower.find("content-length:"); cl != std::string::npos) {
        try {
          content_length = static_cast<std::size_t>(std::stoull(headers.substr(cl + 15)));
        } catch (const std::exception&) {
          content_length.reset();
        }
      }
    }

    std::size_t body_end = 0;
    std::size_t next = std::string_view::npos;
    if (content_length && body_start + *content_length <= text.size()) {
      body_end = body_start + *content_length;
      next = text.find(delim, body_end);
    } else {
      next = text.find(delim, body_start);
      if (next == std::string_view::npos) {
        body_end = text.size();
      } else {
        body_end = next;
        if (body_end >= body_start + 2 && text.substr(body_end - 2, 2) == "\r\n") {
          body_end -= 2;
        } else if (body_end >= body_start + 1 && text[body_end - 1] == '\n') {
          body_end -= 1;
        }
      }
    }
    parts.push_back({body_start, body_end - body_start});
    pos = next;
  }
  return parts;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

/// Frames from a single JPEG, a concatenated MJPEG file (optionally with
/// multipart framing), or a directory of .jpg/.jpeg files in name order.
inline std::vector<std::vector<std::uint8_t>> load_frames(const std::filesystem::path& path) {
  std::vector<std::vector<std::uint8_t>> frames;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      std::string ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (e.is_regular_file() && (ext == ".jpg" || ext == ".jpeg")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) frames.push_back(read_file_bytes(f));
    return frames;
  }
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  for (const ByteRange& r : split_jpeg_frames(bytes)) {
    frames.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(r.offset),
                        bytes.begin() + static_cast<std::ptrdiff_t>(r.offset + r.length));
  }
  return frames;
}

}  // namespace dctscene
