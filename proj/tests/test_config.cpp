#include "sfsvd/config.hpp"
#include "sfsvd/errors.hpp"

#include <doctest.h>

#include <string>

using namespace sfsvd;

namespace {

std::string key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("empty config yields the defaults") {
  const RunConfig c = parse_config("# nothing here\n\n");
  CHECK(c.alpha == 0.7);
  CHECK(c.ratio == 0.5);
  CHECK(c.fisher_mode == FisherMode::fisher);
  CHECK(c.grid_channels == 2);
  CHECK(c.effective_sobolev_order() == 2);  // incompressible_ns
  CHECK(c.sobolev_norm == SobolevNorm::l1);
  CHECK_FALSE(c.sobolev_scale.has_value());
  CHECK(format_config(c) == format_config(RunConfig{}));
}

TEST_CASE("values are parsed per key") {
  const RunConfig c = parse_config(
      "alpha = 0.25\n"
      "  ratio=0.3  \n"
      "hidden = 16, 8, 4\n"
      "tags = heat, advect\n"
      "tag_scales = 1, 10\n"
      "fisher_mode = identity\n"
      "balance = true\n"
      "sobolev_scale = 0.5\n"
      "derivative_weights = 1, 0.5, 0.25\n");
  CHECK(c.alpha == 0.25);
  CHECK(c.ratio == 0.3);
  CHECK(c.hidden == std::vector<std::size_t>{16, 8, 4});
  CHECK(c.tags == std::vector<std::string>{"heat", "advect"});
  CHECK(c.tag_scales == std::vector<double>{1.0, 10.0});
  CHECK(c.fisher_mode == FisherMode::identity);
  CHECK(c.balance);
  CHECK(c.sobolev_scale == 0.5);
  CHECK(c.derivative_weights[2] == 0.25);
}

TEST_CASE("invalid configs name the offending key") {
  CHECK(key_of("ratio = 1.5") == "ratio");
  CHECK(key_of("ratio = 0") == "ratio");
  CHECK(key_of("alpha = -0.1") == "alpha");
  CHECK(key_of("alpha = abc") == "alpha");
  CHECK(key_of("colour = red") == "colour");
  CHECK(key_of("ratio = 0.5\nratio = 0.4") == "ratio");
  CHECK(key_of("fisher_mode = sometimes") == "fisher_mode");
  CHECK(key_of("tags = heat\ntag_scales = 1, 2") == "tag_scales");
  CHECK(key_of("field_kind = divfree\ngrid_channels = 1") == "grid_channels");
  CHECK(key_of("tags = sound") != "<accepted>");
  // The family fixes the Sobolev order.
  CHECK(key_of("pde_family = incompressible_ns\nsobolev_order = 1") == "sobolev_order");
  CHECK(key_of("pde_family = wave\nsobolev_order = 1") == "<accepted>");
  CHECK_THROWS_AS(parse_config("just words"), ConfigError);
}

TEST_CASE("format_config round-trips every key") {
  RunConfig c = parse_config("alpha = 0.1\nhidden = 7\nsobolev_scale = 0.3\nallocation = uniform\nseed = 99\n");
  const std::string text = format_config(c);
  CHECK(format_config(parse_config(text)) == text);
  for (const std::string& key : config_keys()) CHECK(text.find(key + " = ") != std::string::npos);
}

TEST_CASE("set_config_value and missing files") {
  RunConfig c;
  set_config_value(c, "ratio", "0.9");
  CHECK(c.ratio == 0.9);
  CHECK_THROWS_AS(set_config_value(c, "nope", "1"), ConfigError);
  try {
    load_config("/nonexistent/run.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "config");
  }
}
