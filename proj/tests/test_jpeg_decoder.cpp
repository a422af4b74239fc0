#include "support.hpp"

using namespace dctscene;
using namespace dctscene::test;

namespace {

struct Case {
  int w, h, channels;
  Subsampling sub;
  int quality;
  unsigned restart;
  bool optimize;
  bool separate;
};

std::string describe(const Case& c) {
  return std::to_string(c.w) + "x" + std::to_string(c.h) + " c" + std::to_string(c.channels) + " sub" +
         std::to_string(static_cast<int>(c.sub)) + " q" + std::to_string(c.quality) + " ri" + std::to_string(c.restart) +
         (c.optimize ? " opt" : "") + (c.separate ? " sep" : "");
}

std::vector<Case> cases() {
  std::vector<Case> out;
  const Subsampling subs[] = {Subsampling::s444, Subsampling::s422, Subsampling::s420, Subsampling::s440};
  const int dims[][2] = {{64, 48}, {37, 29}, {8, 8}, {121, 67}, {16, 9}};
  int k = 0;
  for (const auto& d : dims) {
    for (Subsampling s : subs) {
      out.push_back({d[0], d[1], 3, s, 50 + 12 * (k % 5), static_cast<unsigned>(k % 3 == 0 ? 2 + k % 4 : 0), k % 2 == 1,
                     k % 4 == 2});
      ++k;
    }
    out.push_back({d[0], d[1], 1, Subsampling::s444, 90, static_cast<unsigned>(k % 2), false, false});
  }
  return out;
}

}  // namespace

TEST(JpegDecoder, CoefficientsEqualLibjpeg) {
  std::mt19937_64 rng(11);
  for (const Case& c : cases()) {
    SCOPED_TRACE(describe(c));
    EncodeOptions opt;
    opt.quality = c.quality;
    opt.subsampling = c.sub;
    opt.restart_interval = c.restart;
    opt.optimize_coding = c.optimize;
    opt.separate_scans = c.separate;
    const auto bytes = encode_jpeg(random_image(rng, c.w, c.h, c.channels), opt);
    const JpegCoefficients ours = decode_jpeg_coefficients(bytes);
    const auto ref = libjpeg_coefficients(bytes);
    ASSERT_EQ(ours.components.size(), ref.size());
    EXPECT_EQ(ours.width, c.w);
    EXPECT_EQ(ours.height, c.h);
    for (std::size_t ci = 0; ci < ref.size(); ++ci) {
      const ComponentCoefficients& oc = ours.components[ci];
      ASSERT_EQ(oc.h, ref[ci].h);
      ASSERT_EQ(oc.v, ref[ci].v);
      ASSERT_EQ(oc.blocks_w, ref[ci].blocks_w);
      ASSERT_EQ(oc.blocks_h, ref[ci].blocks_h);
      for (int by = 0; by < oc.blocks_h; ++by) {
        for (int bx = 0; bx < oc.blocks_w; ++bx) {
          const auto got = oc.block(bx, by);
          for (int k = 0; k < 64; ++k) {
            ASSERT_EQ(got[static_cast<std::size_t>(k)],
                      ref[ci].coeffs[(static_cast<std::size_t>(by) * ref[ci].blocks_w + bx) * 64 + k])
                << "component " << ci << " block " << bx << "," << by << " k " << k;
          }
        }
      }
    }
  }
}

TEST(JpegDecoder, IdctWithinOneOfReferenceDecoder) {
  std::mt19937_64 rng(12);
  for (const Case& c : cases()) {
    SCOPED_TRACE(describe(c));
    EncodeOptions opt;
    opt.quality = c.quality;
    opt.subsampling = c.sub;
    opt.restart_interval = c.restart;
    const auto bytes = encode_jpeg(random_image(rng, c.w, c.h, c.channels), opt);
    const JpegCoefficients ours = decode_jpeg_coefficients(bytes);
    const auto planes = libjpeg_planes(bytes);
    for (std::size_t ci = 0; ci < planes.size(); ++ci) {
      const ComponentCoefficients& oc = ours.components[ci];
      int worst = 0;
      for (int y = 0; y < planes[ci].height; ++y) {
        for (int x = 0; x < planes[ci].width; ++x) {
          const auto px = idct_block(oc.block(x / 8, y / 8));
          worst = std::max(worst, std::abs(px[static_cast<std::size_t>((y % 8) * 8 + x % 8)] - planes[ci].at(x, y)));
        }
      }
      EXPECT_LE(worst, 1) << "component " << ci;
    }
  }
}

TEST(JpegDecoder, PlanesReplicateChromaDcOverLumaBlocks) {
  std::mt19937_64 rng(13);
  EncodeOptions opt;
  opt.subsampling = Subsampling::s420;
  const auto bytes = encode_jpeg(random_image(rng, 48, 32), opt);
  const JpegCoefficients jc = decode_jpeg_coefficients(bytes);
  const CoefficientPlanes p = decode_jpeg_dct(bytes);
  ASSERT_EQ(p.width_blocks, 6);
  ASSERT_EQ(p.height_blocks, 4);
  for (int by = 0; by < 4; ++by) {
    for (int bx = 0; bx < 6; ++bx) {
      const std::size_t b = static_cast<std::size_t>(by) * 6 + bx;
      EXPECT_EQ(p.cb_dc[b], jc.components[1].block(bx / 2, by / 2)[0]);
      EXPECT_EQ(p.cr_dc[b], jc.components[2].block(bx / 2, by / 2)[0]);
      EXPECT_EQ(p.y_block(b)[0], jc.components[0].block(bx, by)[0]);
    }
  }
}

TEST(JpegDecoder, GrayscaleHasZeroChroma) {
  std::mt19937_64 rng(14);
  const auto bytes = encode_jpeg(random_image(rng, 24, 16, 1));
  const CoefficientPlanes p = decode_jpeg_dct(bytes);
  for (std::size_t b = 0; b < p.block_count(); ++b) {
    EXPECT_EQ(p.cb_dc[b], 0);
    EXPECT_EQ(p.cr_dc[b], 0);
  }
}

TEST(JpegDecoder, RejectsProgressiveAndArithmetic) {
  std::mt19937_64 rng(15);
  const ColorImage img = random_image(rng, 32, 32);
  EncodeOptions prog;
  prog.progressive = true;
  EXPECT_THROW(decode_jpeg_dct(encode_jpeg(img, prog)), UnsupportedJpeg);
  EncodeOptions arith;
  arith.arithmetic = true;
  EXPECT_THROW(decode_jpeg_dct(encode_jpeg(img, arith)), UnsupportedJpeg);
}

TEST(JpegDecoder, TruncatedStreamsThrowAtEveryCut) {
  std::mt19937_64 rng(16);
  const auto bytes = encode_jpeg(random_image(rng, 40, 24));
  for (std::size_t cut = 0; cut + 2 < bytes.size(); cut += 7) {
    const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(decode_jpeg_dct(part), JpegError) << "cut at " << cut;
  }
}

TEST(JpegDecoder, GarbageNeverCrashes) {
  std::mt19937_64 rng(17);
  const auto good = encode_jpeg(random_image(rng, 32, 32));
  for (int trial = 0; trial < 300; ++trial) {
    auto bytes = good;
    const int flips = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < flips; ++i) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
    try {
      const CoefficientPlanes p = decode_jpeg_dct(bytes);
      EXPECT_EQ(p.y_coeffs.size(), p.block_count() * 64);
    } catch (const JpegError& e) {
      EXPECT_LE(e.offset(), bytes.size());
    }
  }
}

TEST(JpegDecoder, NotAJpeg) {
  const std::vector<std::uint8_t> text = {'h', 'e', 'l', 'l', 'o'};
  try {
    decode_jpeg_dct(text);
    FAIL() << "expected JpegError";
  } catch (const JpegError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  EXPECT_THROW(decode_jpeg_dct(std::vector<std::uint8_t>{}), JpegError);
}
