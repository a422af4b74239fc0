#pragma once

// Baseline JPEG entropy decoder that stops in the DCT domain.
//
// The decoder parses markers, undoes Huffman coding and DC prediction and
// multiplies by the quantization table. No inverse transform and no level
// shift are applied: a mid-gray block decodes to all zeros.
//
// Supported: SOF0/SOF1 with 8-bit precision, 1 or 3 components, any
// sampling factors in 1..4, interleaved and non-interleaved sequential scans,
// restart intervals. Progressive, lossless, hierarchical and arithmetic-coded
// streams raise UnsupportedJpeg.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dctscene {

/// zigzag index -> natural (row-major) index inside an 8x8 block.
inline constexpr std::array<std::uint8_t, 64> kZigzagToNatural = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

/// Malformed or truncated stream. offset() is the byte position where the
/// problem was detected.
class JpegError : public std::runtime_error {
 public:
  JpegError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed stream using a coding process this decoder does not handle.
class UnsupportedJpeg : public JpegError {
 public:
  using JpegError::JpegError;
};

/// Dequantized coefficients of one image component.
struct ComponentCoefficients {
  std::uint8_t id = 0;
  int h = 1;  // horizontal sampling factor
  int v = 1;  // vertical sampling factor
  int blocks_w = 0;  // blocks covering the component's own sample area
  int blocks_h = 0;
  int stride_blocks = 0;  // allocated grid, padded to whole MCUs
  int rows_blocks = 0;
  std::vector<std::int32_t> coeffs;  // 64 per block, zigzag order

  std::span<const std::int32_t> block(int bx, int by) const {
    const std::size_t at = (static_cast<std::size_t>(by) * stride_blocks + bx) * 64;
    return {coeffs.data() + at, 64};
  }
};

struct JpegCoefficients {
  int width = 0;
  int height = 0;
  int max_h = 1;
  int max_v = 1;
  std::vector<ComponentCoefficients> components;
};

/// Luma coefficients plus the chroma DC terms covering each luma block.
struct CoefficientPlanes {
  int width = 0;   // pixels
  int height = 0;  // pixels
  int width_blocks = 0;
  int height_blocks = 0;
  std::vector<std::int32_t> y_coeffs;  // width_blocks * height_blocks * 64, zigzag order
  std::vector<std::int32_t> cb_dc;     // one per luma block
  std::vector<std::int32_t> cr_dc;

  std::size_t block_count() const noexcept {
    return static_cast<std::size_t>(width_blocks) * static_cast<std::size_t>(height_blocks);
  }
  std::span<const std::int32_t> y_block(std::size_t block) const {
    return {y_coeffs.data() + block * 64, 64};
  }
};

namespace detail {

struct HuffmanTable {
  bool defined = false;
  // (length << 8) | symbol for codes of length <= kFastBits; 0 = slow path.
  static constexpr int kFastBits = 9;
  std::array<std::uint16_t, 1 << kFastBits> fast{};
  std::array<std::int32_t, 18> maxcode{};
  std::array<std::int32_t, 17> valoffset{};
  std::array<std::uint8_t, 256> values{};
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> data, std::size_t pos) : data_(data), pos_(pos) {}

  std::size_t position() const noexcept { return pos_; }

  void fill() {
    while (nbits_ <= 56) {
      std::uint64_t byte = 0;
      if (pos_ < data_.size()) {
        const std::uint8_t b = data_[pos_];
        if (b != 0xFF) {
          byte = b;
          ++pos_;
        } else if (pos_ + 1 < data_.size() && data_[pos_ + 1] == 0x00) {
          byte = 0xFF;
          pos_ += 2;
        } else {
          padding_ += 8;  // marker or end of data: feed zeros, stay put
        }
      } else {
        padding_ += 8;
      }
      acc_ |= byte << (56 - nbits_);
      nbits_ += 8;
    }
  }

  std::uint32_t peek16() const noexcept { return static_cast<std::uint32_t>(acc_ >> 48); }

  void consume(int n) noexcept {
    acc_ <<= n;
    nbits_ -= n;
  }

  std::int32_t receive(int n) {
    if (n == 0) return 0;
    if (nbits_ < n) fill();
    const auto v = static_cast<std::int32_t>(acc_ >> (64 - n));
    consume(n);
    return v;
  }

  /// True when decoding has consumed bits that were not in the stream.
  bool overran() const noexcept { return nbits_ < padding_; }

  /// Drop buffered bits and expect RSTn at the current byte position.
  void restart(int expected_index) {
    acc_ = 0;
    nbits_ = 0;
    padding_ = 0;
    while (pos_ + 1 < data_.size() && data_[pos_] == 0xFF && data_[pos_ + 1] == 0xFF) ++pos_;
    if (pos_ + 1 >= data_.size()) throw JpegError("truncated stream before restart marker", pos_);
    if (data_[pos_] != 0xFF || data_[pos_ + 1] != 0xD0 + expected_index) {
      throw JpegError("expected restart marker RST" + std::to_string(expected_index), pos_);
    }
    pos_ += 2;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_;
  std::uint64_t acc_ = 0;
  int nbits_ = 0;
  int padding_ = 0;
};

inline int extend(std::int32_t v, int s) noexcept {
  return s == 0 ? 0 : (v < (1 << (s - 1)) ? v - (1 << s) + 1 : v);
}

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> data) : data_(data) {}

  JpegCoefficients run() {
    if (data_.size() < 2 || data_[0] != 0xFF || data_[1] != 0xD8) {
      throw JpegError("missing SOI marker", 0);
    }
    std::size_t pos = 2;
    for (;;) {
      pos = next_marker(pos);
      const std::size_t marker_at = pos;
      const std::uint8_t m = data_[pos + 1];
      pos += 2;
      if (m == 0xD9) return finish(marker_at);
      if (m >= 0xD0 && m <= 0xD7) throw JpegError("restart marker outside scan", marker_at);
      if (m == 0x01) continue;  // TEM, no payload

      const std::size_t len = segment_length(pos);
      const std::span<const std::uint8_t> seg = data_.subspan(pos + 2, len - 2);
      const std::size_t seg_at = pos + 2;
      pos += len;

      switch (m) {
        case 0xC0:
        case 0xC1:
          parse_frame(seg, seg_at);
          break;
        case 0xC2:
        case 0xC6:
        case 0xCA:
        case 0xCE:
          throw UnsupportedJpeg("progressive JPEG is not supported", marker_at);
        case 0xC3:
        case 0xC5:
        case 0xC7:
        case 0xCB:
        case 0xCF:
          throw UnsupportedJpeg("lossless/hierarchical JPEG is not supported", marker_at);
        case 0xC9:
        case 0xCD:
        case 0xCC:
          throw UnsupportedJpeg("arithmetic-coded JPEG is not supported", marker_at);
        case 0xC4:
          parse_huffman(seg, seg_at);
          break;
        case 0xDB:
          parse_quant(seg, seg_at);
          break;
        case 0xDD:
          if (seg.size() < 2) throw JpegError("short DRI segment", seg_at);
          restart_interval_ = (seg[0] << 8) | seg[1];
          break;
        case 0xDA:
          pos = decode_scan(seg, seg_at, pos);
          break;
        default:
          break;  // APPn, COM, DNL, JPGn: skipped
      }
    }
  }

 private:
  struct FrameComponent {
    std::uint8_t id = 0;
    int h = 1, v = 1;
    int tq = 0;
    bool scanned = false;
  };

  std::size_t next_marker(std::size_t pos) const {
    // Tolerates fill bytes before a marker; anything else is corrupt.
    if (pos >= data_.size()) throw JpegError("truncated stream: missing EOI", data_.size());
    if (data_[pos] != 0xFF) throw JpegError("expected marker", pos);
    while (pos + 1 < data_.size() && data_[pos + 1] == 0xFF) ++pos;
    if (pos + 1 >= data_.size()) throw JpegError("truncated stream: missing EOI", data_.size());
    return pos;
  }

  std::size_t segment_length(std::size_t pos) const {
    if (pos + 2 > data_.size()) throw JpegError("truncated marker segment", pos);
    const std::size_t len = (static_cast<std::size_t>(data_[pos]) << 8) | data_[pos + 1];
    if (len < 2) throw JpegError("invalid segment length", pos);
    if (pos + len > data_.size()) throw JpegError("truncated marker segment", pos);
    return len;
  }

  void parse_quant(std::span<const std::uint8_t> seg, std::size_t at) {
    std::size_t i = 0;
    while (i < seg.size()) {
      const int pq = seg[i] >> 4;
      const int tq = seg[i] & 15;
      if (tq > 3 || pq > 1) throw JpegError("invalid DQT table spec", at + i);
      ++i;
      const std::size_t need = pq ? 128 : 64;
      if (i + need > seg.size()) throw JpegError("short DQT segment", at + i);
      for (int k = 0; k < 64; ++k) {
        quant_[tq][k] = pq ? static_cast<std::uint16_t>((seg[i + 2 * k] << 8) | seg[i + 2 * k + 1]) : seg[i + k];
      }
      quant_defined_[tq] = true;
      i += need;
    }
  }

  void parse_huffman(std::span<const std::uint8_t> seg, std::size_t at) {
    std::size_t i = 0;
    while (i < seg.size()) {
      if (i + 17 > seg.size()) throw JpegError("short DHT segment", at + i);
      const int tc = seg[i] >> 4;
      const int th = seg[i] & 15;
      if (tc > 1 || th > 3) throw JpegError("invalid DHT table spec", at + i);
      std::array<int, 17> counts{};
      int total = 0;
      for (int l = 1; l <= 16; ++l) {
        counts[l] = seg[i + l];
        total += counts[l];
      }
      i += 17;
      if (total > 256 || i + total > seg.size()) throw JpegError("invalid DHT symbol count", at + i);
      HuffmanTable& t = (tc == 0 ? dc_tables_ : ac_tables_)[th];
      t = HuffmanTable{};
      std::copy_n(seg.begin() + static_cast<std::ptrdiff_t>(i), total, t.values.begin());
      i += total;

      std::int32_t code = 0;
      int k = 0;
      for (int l = 1; l <= 16; ++l) {
        t.valoffset[l] = k - code;
        for (int n = 0; n < counts[l]; ++n, ++code, ++k) {
          if (code >= (1 << l)) throw JpegError("over-subscribed Huffman table", at);
          if (l <= HuffmanTable::kFastBits) {
            const int shift = HuffmanTable::kFastBits - l;
            const auto entry = static_cast<std::uint16_t>((l << 8) | t.values[k]);
            for (int f = code << shift; f < ((code + 1) << shift); ++f) t.fast[f] = entry;
          }
        }
        t.maxcode[l] = counts[l] ? code - 1 : -1;
        code <<= 1;
      }
      t.maxcode[17] = 0x7FFFFFFF;
      t.defined = true;
    }
  }

  void parse_frame(std::span<const std::uint8_t> seg, std::size_t at) {
    if (have_frame_) throw JpegError("multiple frame headers", at);
    if (seg.size() < 6) throw JpegError("short SOF segment", at);
    if (seg[0] != 8) throw UnsupportedJpeg("only 8-bit sample precision is supported", at);
    height_ = (seg[1] << 8) | seg[2];
    width_ = (seg[3] << 8) | seg[4];
    const int nc = seg[5];
    if (height_ == 0) throw UnsupportedJpeg("DNL-defined image height is not supported", at + 1);
    if (width_ == 0) throw JpegError("zero image width", at + 3);
    if (nc != 1 && nc != 3) throw UnsupportedJpeg("only 1 or 3 components are supported", at + 5);
    if (seg.size() < 6 + 3 * static_cast<std::size_t>(nc)) throw JpegError("short SOF segment", at);
    frame_components_.resize(nc);
    for (int c = 0; c < nc; ++c) {
      FrameComponent& fc = frame_components_[c];
      fc.id = seg[6 + 3 * c];
      fc.h = seg[7 + 3 * c] >> 4;
      fc.v = seg[7 + 3 * c] & 15;
      fc.tq = seg[8 + 3 * c];
      if (fc.h < 1 || fc.h > 4 || fc.v < 1 || fc.v > 4 || fc.tq > 3) {
        throw JpegError("invalid component parameters", at + 6 + 3 * c);
      }
      max_h_ = std::max(max_h_, fc.h);
      max_v_ = std::max(max_v_, fc.v);
    }
    mcus_x_ = (width_ + 8 * max_h_ - 1) / (8 * max_h_);
    mcus_y_ = (height_ + 8 * max_v_ - 1) / (8 * max_v_);

    out_.width = width_;
    out_.height = height_;
    out_.max_h = max_h_;
    out_.max_v = max_v_;
    out_.components.resize(nc);
    for (int c = 0; c < nc; ++c) {
      const FrameComponent& fc = frame_components_[c];
      ComponentCoefficients& cc = out_.components[c];
      cc.id = fc.id;
      cc.h = fc.h;
      cc.v = fc.v;
      const int cw = (width_ * fc.h + max_h_ - 1) / max_h_;
      const int ch = (height_ * fc.v + max_v_ - 1) / max_v_;
      cc.blocks_w = (cw + 7) / 8;
      cc.blocks_h = (ch + 7) / 8;
      cc.stride_blocks = mcus_x_ * fc.h;
      cc.rows_blocks = mcus_y_ * fc.v;
      cc.coeffs.assign(static_cast<std::size_t>(cc.stride_blocks) * cc.rows_blocks * 64, 0);
    }
    have_frame_ = true;
  }

  struct ScanComponent {
    int index = 0;
    const HuffmanTable* dc = nullptr;
    const HuffmanTable* ac = nullptr;
    const std::uint16_t* quant = nullptr;
    int pred = 0;
  };

  int decode_symbol(BitReader& br, const HuffmanTable& t) const {
    br.fill();
    const std::uint32_t bits = br.peek16();
    const std::uint16_t f = t.fast[bits >> (16 - HuffmanTable::kFastBits)];
    if (f != 0) {
      br.consume(f >> 8);
      return f & 0xFF;
    }
    for (int l = HuffmanTable::kFastBits + 1; l <= 16; ++l) {
      const auto code = static_cast<std::int32_t>(bits >> (16 - l));
      if (code <= t.maxcode[l]) {
        br.consume(l);
        const int idx = code + t.valoffset[l];
        if (idx < 0 || idx > 255) break;
        return t.values[idx];
      }
    }
    throw JpegError("invalid Huffman code", br.position());
  }

  void decode_block(BitReader& br, ScanComponent& sc, std::int32_t* out) const {
    const int s = decode_symbol(br, *sc.dc);
    if (s > 11) throw JpegError("DC magnitude category out of range", br.position());
    sc.pred += extend(br.receive(s), s);
    out[0] = sc.pred * static_cast<std::int32_t>(sc.quant[0]);
    for (int k = 1; k < 64;) {
      const int rs = decode_symbol(br, *sc.ac);
      const int r = rs >> 4;
      const int sz = rs & 15;
      if (sz == 0) {
        if (r != 15) break;  // EOB
        k += 16;
        if (k > 64) throw JpegError("AC run past end of block", br.position());
        continue;
      }
      k += r;
      if (k > 63) throw JpegError("AC coefficient index out of range", br.position());
      out[k] = extend(br.receive(sz), sz) * static_cast<std::int32_t>(sc.quant[k]);
      ++k;
    }
    if (br.overran()) throw JpegError("truncated entropy-coded data", br.position());
  }

  std::size_t decode_scan(std::span<const std::uint8_t> seg, std::size_t at, std::size_t data_pos) {
    if (!have_frame_) throw JpegError("SOS before frame header", at);
    if (seg.empty()) throw JpegError("short SOS segment", at);
    const int ns = seg[0];
    if (ns < 1 || ns > 4 || seg.size() < 1 + 2 * static_cast<std::size_t>(ns) + 3) {
      throw JpegError("invalid SOS segment", at);
    }
    std::vector<ScanComponent> comps(ns);
    for (int i = 0; i < ns; ++i) {
      const std::uint8_t id = seg[1 + 2 * i];
      const int td = seg[2 + 2 * i] >> 4;
      const int ta = seg[2 + 2 * i] & 15;
      auto it = std::find_if(frame_components_.begin(), frame_components_.end(),
                             [id](const FrameComponent& fc) { return fc.id == id; });
      if (it == frame_components_.end()) throw JpegError("scan references unknown component", at + 1 + 2 * i);
      if (td > 3 || ta > 3 || !dc_tables_[td].defined || !ac_tables_[ta].defined) {
        throw JpegError("scan references undefined Huffman table", at + 2 + 2 * i);
      }
      if (!quant_defined_[it->tq]) throw JpegError("component references undefined quantization table", at);
      it->scanned = true;
      comps[i].index = static_cast<int>(it - frame_components_.begin());
      comps[i].dc = &dc_tables_[td];
      comps[i].ac = &ac_tables_[ta];
      comps[i].quant = quant_[it->tq].data();
    }
    const std::size_t tail = 1 + 2 * static_cast<std::size_t>(ns);
    const int ss = seg[tail], se = seg[tail + 1], ahl = seg[tail + 2];
    if (ss != 0 || se != 63 || ahl != 0) {
      throw UnsupportedJpeg("non-sequential scan parameters", at + tail);
    }

    BitReader br(data_, data_pos);
    long mcu_total = 0;
    int blocks_w = 0;
    if (ns == 1) {
      const ComponentCoefficients& cc = out_.components[comps[0].index];
      blocks_w = cc.blocks_w;
      mcu_total = static_cast<long>(cc.blocks_w) * cc.blocks_h;
    } else {
      int units = 0;
      for (const ScanComponent& sc : comps) {
        const ComponentCoefficients& cc = out_.components[sc.index];
        units += cc.h * cc.v;
      }
      if (units > 10) throw JpegError("too many blocks per MCU", at);
      mcu_total = static_cast<long>(mcus_x_) * mcus_y_;
    }

    int next_rst = 0;
    for (long mcu = 0; mcu < mcu_total; ++mcu) {
      if (restart_interval_ > 0 && mcu > 0 && mcu % restart_interval_ == 0) {
        br.restart(next_rst);
        next_rst = (next_rst + 1) & 7;
        for (ScanComponent& sc : comps) sc.pred = 0;
      }
      if (ns == 1) {
        ComponentCoefficients& cc = out_.components[comps[0].index];
        const int bx = static_cast<int>(mcu % blocks_w);
        const int by = static_cast<int>(mcu / blocks_w);
        decode_block(br, comps[0], block_ptr(cc, bx, by));
      } else {
        const int mx = static_cast<int>(mcu % mcus_x_);
        const int my = static_cast<int>(mcu / mcus_x_);
        for (ScanComponent& sc : comps) {
          ComponentCoefficients& cc = out_.components[sc.index];
          for (int v = 0; v < cc.v; ++v) {
            for (int h = 0; h < cc.h; ++h) {
              decode_block(br, sc, block_ptr(cc, mx * cc.h + h, my * cc.v + v));
            }
          }
        }
      }
    }
    ++scans_;

    // Skip to the marker that follows the entropy-coded segment.
    std::size_t pos = br.position();
    while (pos < data_.size()) {
      if (data_[pos] == 0xFF && pos + 1 < data_.size() && data_[pos + 1] != 0x00 &&
          data_[pos + 1] != 0xFF && !(data_[pos + 1] >= 0xD0 && data_[pos + 1] <= 0xD7)) {
        break;
      }
      ++pos;
    }
    if (pos >= data_.size()) throw JpegError("truncated stream after scan: missing EOI", data_.size());
    return pos;
  }

  static std::int32_t* block_ptr(ComponentCoefficients& cc, int bx, int by) {
    return cc.coeffs.data() + (static_cast<std::size_t>(by) * cc.stride_blocks + bx) * 64;
  }

  JpegCoefficients finish(std::size_t at) {
    if (!have_frame_) throw JpegError("EOI before frame header", at);
    if (scans_ == 0) throw JpegError("EOI before any scan", at);
    for (const FrameComponent& fc : frame_components_) {
      if (!fc.scanned) throw JpegError("component " + std::to_string(fc.id) + " never scanned", at);
    }
    return std::move(out_);
  }

  std::span<const std::uint8_t> data_;
  std::array<std::array<std::uint16_t, 64>, 4> quant_{};
  std::array<bool, 4> quant_defined_{};
  std::array<HuffmanTable, 4> dc_tables_{};
  std::array<HuffmanTable, 4> ac_tables_{};
  std::vector<FrameComponent> frame_components_;
  bool have_frame_ = false;
  int width_ = 0, height_ = 0;
  int max_h_ = 1, max_v_ = 1;
  int mcus_x_ = 0, mcus_y_ = 0;
  int restart_interval_ = 0;
  int scans_ = 0;
  JpegCoefficients out_;
};

}  // namespace detail

/// Entropy-decode and dequantize every component of a baseline JPEG.
inline JpegCoefficients decode_jpeg_coefficients(std::span<const std::uint8_t> jpeg) {
  return detail::Decoder(jpeg).run();
}

/// Collapse full component coefficients to luma blocks + replicated chroma DC.
inline CoefficientPlanes to_planes(const JpegCoefficients& jc) {
  CoefficientPlanes p;
  const ComponentCoefficients& y = jc.components.at(0);
  p.width = jc.width;
  p.height = jc.height;
  p.width_blocks = y.blocks_w;
  p.height_blocks = y.blocks_h;
  const std::size_t n = p.block_count();
  p.y_coeffs.resize(n * 64);
  p.cb_dc.assign(n, 0);
  p.cr_dc.assign(n, 0);
  for (int by = 0; by < p.height_blocks; ++by) {
    for (int bx = 0; bx < p.width_blocks; ++bx) {
      const std::size_t b = static_cast<std::size_t>(by) * p.width_blocks + bx;
      const auto src = y.block(bx, by);
      std::copy(src.begin(), src.end(), p.y_coeffs.begin() + static_cast<std::ptrdiff_t>(b * 64));
      if (jc.components.size() == 3) {
        const ComponentCoefficients& cb = jc.components[1];
        const ComponentCoefficients& cr = jc.components[2];
        p.cb_dc[b] = cb.block(bx * cb.h / y.h, by * cb.v / y.v)[0];
        p.cr_dc[b] = cr.block(bx * cr.h / y.h, by * cr.v / y.v)[0];
      }
    }
  }
  return p;
}

/// Decode one JPEG frame to DCT-domain planes. Throws JpegError or
/// UnsupportedJpeg; never returns partial output.
inline CoefficientPlanes decode_jpeg_dct(std::span<const std::uint8_t> jpeg) {
  return to_planes(decode_jpeg_coefficients(jpeg));
}

}  // namespace dctscene
