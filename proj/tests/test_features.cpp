#include "support.hpp"

using namespace dctscene;
using namespace dctscene::test;

TEST(Features, ChromaRotationUnitVectors) {
  const ChromaIQ a = rotate_chroma(1.0, 0.0);
  EXPECT_NEAR(a.i, -0.5446, 1e-4);
  EXPECT_NEAR(a.q, 0.8387, 1e-4);
  const ChromaIQ b = rotate_chroma(0.0, 1.0);
  EXPECT_NEAR(b.i, 0.8387, 1e-4);
  EXPECT_NEAR(b.q, 0.5446, 1e-4);
}

TEST(Features, ChromaRotationPreservesLength) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1000, 1000);
  for (int i = 0; i < 1000; ++i) {
    const double cb = u(rng), cr = u(rng);
    const ChromaIQ r = rotate_chroma(cb, cr);
    EXPECT_NEAR(std::hypot(r.i, r.q), std::hypot(cb, cr), 1e-9);
  }
}

TEST(Features, LeadingLumaCoefficientsAndRotatedChromaDc) {
  std::mt19937_64 rng(4);
  for (Subsampling s : {Subsampling::s444, Subsampling::s422, Subsampling::s420, Subsampling::s440}) {
    EncodeOptions opt;
    opt.subsampling = s;
    const auto bytes = encode_jpeg(random_image(rng, 40, 40), opt);
    const JpegCoefficients jc = decode_jpeg_coefficients(bytes);
    const FeatureGrid g = extract_features(to_planes(jc));
    const auto& y = jc.components[0];
    ASSERT_EQ(g.width(), 5);
    ASSERT_EQ(g.height(), 5);
    for (int by = 0; by < 5; ++by) {
      for (int bx = 0; bx < 5; ++bx) {
        const FeatureBlock& f = g(bx, by);
        for (std::size_t k = 0; k < kLumaFeatureCount; ++k) EXPECT_EQ(f[k], y.block(bx, by)[k]);
        const auto& cb = jc.components[1];
        const auto& cr = jc.components[2];
        const double dcb = cb.block(bx * cb.h / y.h, by * cb.v / y.v)[0];
        const double dcr = cr.block(bx * cr.h / y.h, by * cr.v / y.v)[0];
        const ChromaIQ iq = rotate_chroma(dcb, dcr);
        EXPECT_DOUBLE_EQ(f[6], iq.i);
        EXPECT_DOUBLE_EQ(f[7], iq.q);
      }
    }
  }
}

TEST(Features, FlatGreyFrameHasNoAcOrChroma) {
  const auto bytes = encode_jpeg(flat_image(32, 16, 128, 128, 128));
  const FeatureGrid g = extract_features(decode_jpeg_dct(bytes));
  for (const FeatureBlock& f : g) {
    EXPECT_EQ(f[0], 0.0);
    for (std::size_t k = 1; k < kFeatureCount; ++k) EXPECT_EQ(f[k], 0.0);
  }
}

TEST(Features, BrighterFlatFrameRaisesDc) {
  const FeatureGrid dark = extract_features(decode_jpeg_dct(encode_jpeg(flat_image(16, 16, 60, 60, 60))));
  const FeatureGrid light = extract_features(decode_jpeg_dct(encode_jpeg(flat_image(16, 16, 200, 200, 200))));
  for (std::size_t b = 0; b < dark.size(); ++b) {
    EXPECT_LT(dark[b][0], 0.0);
    EXPECT_GT(light[b][0], 0.0);
  }
}
