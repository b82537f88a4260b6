#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kinship/run_config.hpp"

using namespace kinship;
using nlohmann::json;

namespace {

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
  const auto c = parse_config(json::object());
  CHECK(c.model.hidden == 192);
  CHECK(c.model.dropout == 0.2);
  CHECK(c.model.activation == Activation::LReLU);
  CHECK(c.model.sharing == SharingMode::PerExpert);
  CHECK(c.train.batch_size == 200);
  CHECK(c.train.epochs == 4);
  CHECK(c.train.l2_lambda == 2e-4);
  CHECK(c.train.learning_rate == 0.001);
  CHECK(c.train.decayed_learning_rate == 0.0005);
  CHECK(c.train.decay_after_epoch == 2);
  CHECK(c.eval.objective == Objective::MacroAccuracy);
  CHECK(c.eval.bins == 50);
}

TEST_CASE("seed propagates to every component") {
  const auto c = parse_config(json{{"seed", 77}});
  CHECK(c.seed == 77);
  CHECK(c.synth.seed == 77);
  CHECK(c.train.seed == 77);
}

TEST_CASE("unknown keys are named") {
  CHECK(error_of(json{{"model", {{"hiden", 3}}}}) == "unknown key 'model.hiden'");
  CHECK(error_of(json{{"hiden", 3}}) == "unknown key 'hiden'");
  CHECK(error_of(json{{"synth", {{"families", {{"dev", 3}}}}}}) == "unknown key 'synth.families.dev'");
}

TEST_CASE("type errors are named") {
  CHECK(error_of(json{{"model", {{"hidden", "big"}}}}).find("model.hidden") != std::string::npos);
  CHECK(error_of(json{{"model", {{"hidden", -1}}}}).find("model.hidden") != std::string::npos);
  CHECK(error_of(json{{"train", {{"l2_includes_biases", 1}}}}).find("train.l2_includes_biases") != std::string::npos);
  CHECK(error_of(json{{"model", {{"activation", "gelu"}}}}).find("model.activation") != std::string::npos);
  CHECK(error_of(json{{"model", 5}}).find("model") != std::string::npos);
  CHECK(error_of(json{{"model", {{"relations", {"BB", "XX"}}}}}).find("model.relations") != std::string::npos);
}

TEST_CASE("invalid values are rejected") {
  CHECK(!error_of(json{{"model", {{"dropout", 1.0}}}}).empty());
  CHECK(!error_of(json{{"train", {{"batch_size", 0}}}}).empty());
  CHECK(!error_of(json{{"synth", {{"dim", 1}}}}).empty());
}

TEST_CASE("overrides take precedence over the file") {
  const auto path = std::filesystem::temp_directory_path() / "kinship_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"model": {"hidden": 192, "activation": "tanh"}, "train": {"epochs": 2}})";
  }
  const auto c = resolve_config(path, json{{"model", {{"hidden", 512}}}});
  CHECK(c.model.hidden == 512);
  CHECK(c.model.activation == Activation::Tanh);
  CHECK(c.train.epochs == 2);
  {
    std::ofstream out(path);
    out << "{not json";
  }
  CHECK_THROWS_AS(resolve_config(path), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(resolve_config(path), ConfigError);
}

TEST_CASE("resolved config echoes back to an identical config") {
  json doc = {{"seed", 3},
              {"model", {{"hidden", 64}, {"sharing", "shared-trunk"}, {"relations", {"FD", "MS"}}}},
              {"synth", {{"blend", "random-convex"}}},
              {"eval", {{"objective", "micro"}}},
              {"paths", {{"data", "w"}}}};
  const auto c = parse_config(doc);
  const auto echo = config_to_json(c);
  const auto again = parse_config(echo);
  CHECK(config_to_json(again) == echo);
  CHECK(again.model == c.model);
  CHECK(again.train == c.train);
  CHECK(again.paths == c.paths);
  CHECK(again.eval == c.eval);
}

TEST_CASE("required paths") {
  const auto c = parse_config(json{{"paths", {{"data", "dir"}}}});
  CHECK(require_path(c, "data") == "dir");
  try {
    require_path(c, "model");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "missing required path 'paths.model'");
  }
}
