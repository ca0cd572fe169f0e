// Copyright 2026 The vqeforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "vqeforge/config.h"

namespace fs = std::filesystem;
using namespace vqeforge;

namespace {

fs::path write_tmp(const std::string &name, const std::string &text) {
    fs::path dir = fs::temp_directory_path() / "vqeforge_config_test";
    fs::create_directories(dir);
    std::ofstream(dir / name) << text;
    return dir / name;
}

RunConfig h2() {
    return RunConfig::from_json({{"molecule", "h2"}, {"distance", 0.74}, {"seed", 5}}, VQEFORGE_SOURCE_DIR);
}

}  // namespace

TEST(Config, DefaultsFilled) {
    RunConfig c = h2();
    EXPECT_EQ(c.get<int>("shots"), 100000);
    EXPECT_EQ(c.get<std::string>("stages"), "rem,cf,sv,cmx");
    EXPECT_EQ(c.seed(), 5u);
    EXPECT_TRUE(fs::exists(c.fcidump()));
    EXPECT_NE(c.fcidump().find("h2_0.74.fcidump"), std::string::npos);
}

TEST(Config, UnknownKeyRejected) {
    EXPECT_THROW(RunConfig::from_json({{"shotz", 3}, {"seed", 1}}), ConfigError);
}

TEST(Config, SeedRequired) {
    RunConfig c = RunConfig::from_json({{"molecule", "h2"}, {"distance", 0.74}}, VQEFORGE_SOURCE_DIR);
    EXPECT_THROW(c.seed(), ConfigError);
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, ParseErrorNamesFileAndLine) {
    auto p = write_tmp("broken.json", "{\n  \"seed\": 1,\n  \"shots\": ,\n}\n");
    try {
        RunConfig::load(p);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError &e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("broken.json:3"), std::string::npos) << msg;
    }
}

TEST(Config, EnvironmentOverridesFile) {
    RunConfig c = h2();
    std::string a = "VQEFORGE_SHOTS=4242", b = "VQEFORGE_STAGES=rem", other = "HOME=/root";
    char *env[] = {a.data(), b.data(), other.data(), nullptr};
    c.apply_env(env);
    EXPECT_EQ(c.get<int>("shots"), 4242);
    EXPECT_EQ(c.get<std::string>("stages"), "rem");
}

TEST(Config, UnrelatedEnvironmentVariablesIgnored) {
    RunConfig c = h2();
    std::string a = "VQEFORGE_CLI_COLOR=1";
    char *env[] = {a.data(), nullptr};
    const std::string before = c.hash();
    EXPECT_NO_THROW(c.apply_env(env));
    EXPECT_EQ(c.hash(), before);
}

TEST(Config, HashIgnoresThreadsOnly) {
    RunConfig a = h2(), b = h2(), c = h2();
    b.set("threads", 4);
    c.set("shots", 1000);
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_NE(a.hash(), c.hash());
    EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, Fnv1aKnownValues) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, NoisePresets) {
    RunConfig c = h2();
    EXPECT_FALSE(c.noise(4).gate_noise());
    c.set("noise", "calibrated");
    NoiseModel m = c.noise(4);
    EXPECT_DOUBLE_EQ(m.p1, 0.001);
    EXPECT_DOUBLE_EQ(m.p2, 0.008);
    EXPECT_DOUBLE_EQ(m.readout_for(3).eps, 0.037);
    c.set("noise", nlohmann::json{{"p1", 0.002}});
    EXPECT_DOUBLE_EQ(c.noise(4).p1, 0.002);
    c.set("noise", "no_such_file.json");
    EXPECT_THROW(c.noise(4), ConfigError);
}

TEST(Config, PipelineMapping) {
    RunConfig c = h2();
    c.set("stages", "rem,cf");
    c.set("trajectories", 17);
    c.set("loop_estimator", "rem");
    PipelineConfig p = c.pipeline(4);
    EXPECT_TRUE(p.stages.rem);
    EXPECT_TRUE(p.stages.cf);
    EXPECT_FALSE(p.stages.sv);
    EXPECT_EQ(p.sim.trajectories, 17);
    EXPECT_EQ(p.loop, LoopEstimator::Rem);
    c.set("loop_estimator", "bogus");
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, CurveInputsFromDistances) {
    RunConfig c = h2();
    c.set("distances", nlohmann::json::array({0.5, 3.0}));
    auto in = c.curve_inputs();
    ASSERT_EQ(in.size(), 2u);
    EXPECT_DOUBLE_EQ(in[1].distance, 3.0);
    EXPECT_NE(in[1].path.find("h2_3.00"), std::string::npos);
}

TEST(Config, ShippedConfigsValidate) {
    for (auto &e : fs::directory_iterator(fs::path(VQEFORGE_SOURCE_DIR) / "configs")) {
        if (e.path().extension() != ".json") continue;
        SCOPED_TRACE(e.path().string());
        RunConfig c = RunConfig::load(e.path());
        EXPECT_NO_THROW(c.validate());
        EXPECT_TRUE(fs::exists(c.fcidump()));
    }
}
