#pragma once

// Baseline JPEG encoding through libjpeg, used to produce test and
// synthetic input. Including this header requires linking libjpeg.

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>

namespace dctscene {

/// Interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
struct ColorImage {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  ColorImage() = default;
  ColorImage(int w, int h, int c = 3)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t* pixel(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * channels]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * channels];
  }
};

enum class Subsampling { s444, s422, s420, s440 };

struct EncodeOptions {
  int quality = 85;
  Subsampling subsampling = Subsampling::s420;
  unsigned restart_interval = 0;  // MCUs, 0 = none
  bool optimize_coding = false;
  bool separate_scans = false;  // one sequential scan per component
  bool progressive = false;     // for exercising the unsupported-format path
  bool arithmetic = false;      // likewise
};

namespace detail {

struct EncoderError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void encoder_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<EncoderError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_jpeg(const ColorImage& img, const EncodeOptions& opt = {}) {
  if (img.width <= 0 || img.height <= 0 || (img.channels != 1 && img.channels != 3)) {
    throw std::invalid_argument("encode_jpeg: unsupported image shape");
  }
  jpeg_compress_struct cinfo{};
  detail::EncoderError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = detail::encoder_error_exit;
  unsigned char* out = nullptr;
  unsigned long out_size = 0;
  jpeg_scan_info scans[3];

  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(out);
    throw std::runtime_error(std::string("libjpeg: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &out, &out_size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = img.channels;
  cinfo.in_color_space = img.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, opt.quality, TRUE);
  if (img.channels == 3) {
    int h = 2, v = 2;
    switch (opt.subsampling) {
      case Subsampling::s444: h = 1; v = 1; break;
      case Subsampling::s422: h = 2; v = 1; break;
      case Subsampling::s420: h = 2; v = 2; break;
      case Subsampling::s440: h = 1; v = 2; break;
    }
    cinfo.comp_info[0].h_samp_factor = h;
    cinfo.comp_info[0].v_samp_factor = v;
    for (int c = 1; c < 3; ++c) cinfo.comp_info[c].h_samp_factor = cinfo.comp_info[c].v_samp_factor = 1;
  }
  cinfo.restart_interval = opt.restart_interval;
  cinfo.optimize_coding = opt.optimize_coding ? TRUE : FALSE;
  cinfo.arith_code = opt.arithmetic ? TRUE : FALSE;
  if (opt.progressive) {
    jpeg_simple_progression(&cinfo);
  } else if (opt.separate_scans && img.channels == 3) {
    for (int c = 0; c < 3; ++c) {
      scans[c].comps_in_scan = 1;
      scans[c].component_index[0] = c;
      scans[c].Ss = 0;
      scans[c].Se = 63;
      scans[c].Ah = 0;
      scans[c].Al = 0;
    }
    cinfo.scan_info = scans;
    cinfo.num_scans = 3;
  }
  jpeg_start_compress(&cinfo, TRUE);
  const auto stride = static_cast<std::size_t>(img.width) * img.channels;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(img.data.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> bytes(out, out + out_size);
  std::free(out);
  return bytes;
}

}  // namespace dctscene
