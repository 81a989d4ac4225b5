#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <string>

#include "acflow/checkpoint.hpp"
#include "acflow/config_json.hpp"
#include "acflow/trainer.hpp"

using namespace acflow;

TEST_CASE("config json round trip is identity") {
  TrainConfig c;
  c.problem = "aiyagari";
  c.mode = RunMode::kSupervised;
  c.lr_actor = 0.013;
  c.iterations = 321;
  c.batch_size = 77;
  c.seed = 123456789ULL;
  c.hidden_width = 48;
  c.aiyagari.alpha = 0.07;

  const nlohmann::json j = config_to_json(c);
  const TrainConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(back.problem == c.problem);
  CHECK(back.mode == c.mode);
  CHECK(back.lr_actor == c.lr_actor);
  CHECK(back.seed == c.seed);
  CHECK(back.aiyagari.alpha == c.aiyagari.alpha);
}

TEST_CASE("config hash is sensitive to every changed field") {
  TrainConfig a, b;
  b.batch_size += 1;
  CHECK(config_hash(a) != config_hash(b));
  TrainConfig d;
  d.seed = 1;
  CHECK(config_hash(a) != config_hash(d));
  CHECK(config_hash(a) == config_hash(TrainConfig{}));
}

TEST_CASE("malformed configs are rejected") {
  nlohmann::json j = config_to_json(TrainConfig{});
  j["no_such_key"] = 1;
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
  CHECK_THROWS_AS(run_mode_from_string("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(preset_config("bogus"), std::invalid_argument);
}

TEST_CASE("run_mode string forms") {
  CHECK(run_mode_from_string("ac") == RunMode::kActorCritic);
  CHECK(run_mode_from_string("actor-critic") == RunMode::kActorCritic);
  CHECK(run_mode_from_string("vanilla") == RunMode::kVanilla);
  CHECK(run_mode_from_string("supervised") == RunMode::kSupervised);
  CHECK(to_string(RunMode::kVanilla) == "vanilla");
  CHECK(run_mode_from_string(to_string(RunMode::kActorCritic)) ==
        RunMode::kActorCritic);
}

TEST_CASE("presets carry the benchmark table parameters") {
  const TrainConfig lq1 = preset_config("lq1d");
  CHECK(lq1.problem == "lq");
  CHECK(lq1.dim == 1);
  CHECK(lq1.lr_actor == 0.05);
  CHECK(lq1.lr_critic == 0.1);
  CHECK(lq1.iterations == 200);
  CHECK(lq1.batch_size == 500);
  CHECK(lq1.dt == 0.01);
  CHECK(lq1.dtau == 0.5);

  const TrainConfig lq10 = preset_config("lq10d");
  CHECK(lq10.dim == 10);
  CHECK(lq10.lr_actor == 0.01);
  CHECK(lq10.lr_critic == 0.05);
  CHECK(lq10.iterations == 1500);
  CHECK(lq10.batch_size == 2000);

  const TrainConfig aiy = preset_config("aiyagari");
  CHECK(aiy.problem == "aiyagari");
  CHECK(aiy.lr_actor == 0.01);
  CHECK(aiy.lr_critic == 0.02);
  CHECK(aiy.iterations == 500);
  CHECK(aiy.batch_size == 1000);
}

TEST_CASE("checkpoint round trip preserves parameters bitwise") {
  TrainConfig c;
  c.hidden_width = 8;
  c.num_freq = 2;
  const TrainerState st = make_trainer_state(c);
  const std::string path = "checkpoint_test.bin";
  save_checkpoint(path, st, 42, 17);

  const Checkpoint ck = load_checkpoint(path);
  CHECK(ck.seed == 42);
  CHECK(ck.iteration == 17);
  CHECK(ck.v0.params == st.v0.params);
  CHECK(ck.g.params == st.g.params);
  CHECK(ck.u.params == st.u.params);
  CHECK(ck.u.arch.output_dim == st.u.arch.output_dim);
  CHECK(ck.u.arch.include_time == st.u.arch.include_time);
  CHECK(ck.v0.arch.hidden_width == st.v0.arch.hidden_width);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_checkpoint("does_not_exist.bin"), std::runtime_error);

  // corrupt magic
  {
    std::FILE* f = std::fopen("bad_magic.bin", "wb");
    std::fputs("NOTMAGIC________", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint("bad_magic.bin"), std::runtime_error);
  std::remove("bad_magic.bin");
}
