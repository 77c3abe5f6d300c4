#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "finmoral/config.hpp"

using namespace finmoral;

namespace {

std::string error_of(std::string_view content) {
  try {
    parse_config(content).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(PipelineConfig, Defaults) {
  const PipelineConfig c;
  EXPECT_EQ(c.k, 5);
  EXPECT_EQ(c.temperature, 0.3);
  EXPECT_EQ(c.top_p, 0.95);
  EXPECT_EQ(c.beam, 5u);
  EXPECT_EQ(c.depth, 3u);
  EXPECT_EQ(c.timeout_s, 30.0);
  EXPECT_EQ(c.resolved_lambda(), 0.3);
  PipelineConfig f;
  f.dataset = "ftq";
  EXPECT_EQ(f.resolved_lambda(), 0.4);
  f.lambda = 0.0;
  EXPECT_EQ(f.resolved_lambda(), 0.0);
  EXPECT_EQ(parse_config(""), PipelineConfig{});
}

TEST(PipelineConfig, RoundTrip) {
  PipelineConfig c;
  c.lambda = 0.1 + 0.2;
  c.dataset = "ftq";
  c.k = 9;
  c.temperature = 0.7;
  c.top_p = 1.0 / 3.0;
  c.dimension = 128;
  c.seed = 18446744073709551615ull;
  c.shim_url = "http://127.0.0.1:8080";
  c.timeout_s = 2.5;
  c.fewshot_file = "a b/fewshot.json";
  c.synonyms_file = "syn.tsv";
  c.mock_fixture_file = "/abs/mock.json";
  EXPECT_EQ(parse_config(save_config(c)), c);
  EXPECT_EQ(parse_config(save_config(PipelineConfig{})), PipelineConfig{});
}

TEST(PipelineConfig, ParseErrorsNameTheLine) {
  EXPECT_NE(error_of("k=5\nbogus=1\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("# c\n\nk\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("k=five").find("k"), std::string::npos);
  EXPECT_NE(error_of("temperature=").find("temperature"), std::string::npos);
  EXPECT_NE(error_of("seed=-1").find("seed"), std::string::npos);
}

TEST(PipelineConfig, ValidationRejectsOutOfRange) {
  EXPECT_EQ(error_of("k=1\ntop_p=1\ntemperature=0\nlambda=0"), "");
  EXPECT_NE(error_of("k=0"), "");
  EXPECT_NE(error_of("top_p=0"), "");
  EXPECT_NE(error_of("top_p=1.01"), "");
  EXPECT_NE(error_of("temperature=-1"), "");
  EXPECT_NE(error_of("lambda=-0.5"), "");
  EXPECT_NE(error_of("dataset=other"), "");
  EXPECT_EQ(error_of("dataset=other\nlambda=0.2"), "");
  EXPECT_NE(error_of("beam=0"), "");
  EXPECT_NE(error_of("timeout_s=0"), "");
  PipelineConfig c;
  EXPECT_THROW(c.validate_backends(true), ConfigError);
  EXPECT_NO_THROW(c.validate_backends(false));
  c.shim_url = "http://localhost:1";
  EXPECT_NO_THROW(c.validate_backends(true));
}

TEST(PipelineConfig, LoadResolvesRelativePaths) {
  const auto dir = std::filesystem::temp_directory_path() / "finmoral_cfg_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "fewshot_file=../shots.json\nmock_fixture_file=/abs/m.json\nk=3\n";
  const auto c = load_config(dir / "run.cfg");
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(*c.fewshot_file, (dir.parent_path() / "shots.json").lexically_normal().string());
  EXPECT_EQ(*c.mock_fixture_file, "/abs/m.json");
  EXPECT_THROW(load_config(dir / "absent.cfg"), ConfigError);
}

TEST(PipelineConfig, PathPrecedence) {
  ::unsetenv("FINMORAL_CONFIG");
  EXPECT_EQ(resolve_config_path(std::nullopt), std::nullopt);
  ::setenv("FINMORAL_CONFIG", "/from/env.cfg", 1);
  EXPECT_EQ(resolve_config_path(std::nullopt), std::filesystem::path("/from/env.cfg"));
  EXPECT_EQ(resolve_config_path(std::string("/flag.cfg")), std::filesystem::path("/flag.cfg"));
  ::unsetenv("FINMORAL_CONFIG");
}
