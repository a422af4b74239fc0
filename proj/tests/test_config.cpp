#include "support.hpp"

#include <sstream>

using namespace dctscene;

TEST(Config, RoundTrip) {
  ModelConfig c;
  c.alpha_amf = 4;
  c.c_s = 12;
  c.c_v = 0.75;
  c.max_modes = 3;
  c.t_similar = 2;
  c.bonus_value = 0.25;
  c.bonus_window = 5;
  c.n_bg = 77;
  c.iterations = 2;
  c.min_blob_blocks = 3;
  std::stringstream ss;
  write_model_config(ss, c);
  EXPECT_EQ(read_model_config(ss), c);
}

TEST(Config, CommentsBlanksAndDefaults) {
  std::istringstream is("# comment\n\n  n_bg = 12   # trailing\nc_v=2.5\n");
  const ModelConfig c = read_model_config(is);
  EXPECT_EQ(c.n_bg, 12u);
  EXPECT_EQ(c.c_v, 2.5);
  EXPECT_EQ(c.max_modes, ModelConfig{}.max_modes);
}

TEST(Config, Errors) {
  for (const char* text : {"unknown = 1\n", "n_bg 5\n", "n_bg = -5\n", "c_v = abc\n", "max_modes = 3x\n",
                           "alpha_amf = 0\n", "max_modes = 0\n"}) {
    std::istringstream is(text);
    EXPECT_THROW(read_model_config(is), ConfigError) << text;
  }
  EXPECT_THROW(read_model_config(std::filesystem::path("/nonexistent/dctscene.conf")), ConfigError);
}

TEST(Config, ErrorNamesLine) {
  std::istringstream is("n_bg = 3\nbogus = 1\n");
  try {
    read_model_config(is);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}
