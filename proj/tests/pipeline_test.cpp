// Copyright 2026 The vskin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "test_support.hpp"
#include "vskin/error.hpp"
#include "vskin/pipeline.hpp"
#include "vskin/procedural.hpp"

namespace vskin {
namespace {

namespace fs = std::filesystem;

SceneFile ChainClipScene(std::uint64_t seed) {
  testing::RandomSceneSpec spec;
  spec.max_bones = 3;
  SceneFile s = testing::random_scene(seed, spec);
  return s;
}

SceneFile StaticClip(SceneFile s) {
  for (auto& track : s.clips.front().tracks) {
    for (auto& k : track.keys) {
      k.rotation = track.keys.front().rotation;
      k.translation = track.keys.front().translation;
    }
  }
  return s;
}

TEST(ValidateTest, RandomChainsPass) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ValidateOptions opts;
    opts.clip = "clip";
    const auto report = validate(ChainClipScene(seed), opts);
    EXPECT_TRUE(report.passed) << "seed " << seed << " error " << report.max_rel_error;
    EXPECT_EQ(report.samples.size(), opts.samples);
  }
}

TEST(ValidateTest, StaticClipIsQuiet) {
  ValidateOptions opts;
  opts.clip = "clip";
  const auto report = validate(StaticClip(ChainClipScene(3)), opts);
  // only roundoff in the oracle remains
  EXPECT_LT(report.max_rel_error, 1e-4);
  EXPECT_TRUE(report.passed);
}

TEST(ValidateTest, CorruptedPhiFails) {
  SceneFile s = precompute_model(ChainClipScene(4));
  for (WeightRow& row : s.precomputed->phi) {
    for (BoneWeight& e : row) {
      if (e.bone == 0) e.weight = 0.5;
    }
  }
  // make sure the root actually moves
  s.clips.front().tracks.push_back(
      {0, {{0.0, {}, {}}, {s.clips.front().duration, quat_from_axis_angle({0, 1, 0}, 1.0), {0.2, 0, 0}}}});
  std::erase_if(s.clips.front().tracks, [&](const BoneTrack& t) {
    return t.bone == 0 && &t != &s.clips.front().tracks.back();
  });
  ValidateOptions opts;
  opts.clip = "clip";
  EXPECT_FALSE(validate(s, opts).passed);
}

TEST(ValidateTest, TimesAvoidKeys) {
  AnimationClip clip;
  clip.duration = 1.0;
  clip.tracks = {{0, {{0.0, {}, {}}, {0.5, {}, {}}, {1.0, {}, {}}}}};
  const auto times = validation_times(clip, 4, 1e-3);
  ASSERT_EQ(times.size(), 4u);
  for (double t : times) {
    for (double k : {0.0, 0.5, 1.0}) EXPECT_GE(std::abs(t - k), 1e-2 - 1e-12);
  }
}

TEST(RelativeErrorTest, Definition) {
  const std::vector<Vec3> ref = {{1, 0, 0}, {0, 0, 0}, {100, 0, 0}};
  const std::vector<Vec3> got = {{1.001, 0, 0}, {0.5, 0, 0}, {100, 0, 0}};
  const auto e = relative_errors(got, ref);
  EXPECT_NEAR(e[0], 1e-3, 1e-12);
  EXPECT_NEAR(e[1], 0.5, 1e-12);  // floor at 1% of the largest reference
  EXPECT_EQ(e[2], 0.0);
}

TEST(BakeTest, LbsAndZeroGainVsAreIdentical) {
  SceneFile s = testing::random_scene(21);
  std::fill(s.vs_params.k_squash.begin(), s.vs_params.k_squash.end(), 0.0);
  std::fill(s.vs_params.k_floppy.begin(), s.vs_params.k_floppy.end(), 0.0);
  BakeOptions opts;
  opts.clip = "clip";
  opts.fps = 12;
  opts.mode = BakeMode::kLbs;
  const auto lbs = bake(s, opts);
  opts.mode = BakeMode::kVs;
  const auto vs = bake(s, opts);
  ASSERT_EQ(lbs.frames.size(), vs.frames.size());
  for (std::size_t f = 0; f < lbs.frames.size(); ++f) {
    EXPECT_EQ(format_obj(lbs.frames[f], s.mesh.triangles),
              format_obj(vs.frames[f], s.mesh.triangles));
  }
}

TEST(BakeTest, StaticClipGivesRestLbs) {
  const SceneFile s = StaticClip(testing::random_scene(22));
  BakeOptions opts;
  opts.clip = "clip";
  opts.fps = 10;
  const auto out = bake(s, opts);
  const auto model = make_model(s);
  const auto rest = lbs_positions_at(model.mesh, model.skeleton, model.rest_globals,
                                     s.clips.front(), 0.0);
  for (const auto& frame : out.frames) {
    EXPECT_EQ(format_obj(frame, s.mesh.triangles), format_obj(rest, s.mesh.triangles));
  }
}

TEST(BakeTest, DisplacementOnlyWherePainted) {
  CreatureSpec spec;
  spec.target_vertices = 1500;
  spec.tentacles = 3;
  spec.bones_per_tentacle = 2;
  SceneFile s = make_creature_scene(spec);
  std::fill(s.vs_params.k_squash.begin(), s.vs_params.k_squash.end(), 0.0);
  for (std::size_t u = 0; u < s.mesh.vertex_count(); ++u) {
    s.vs_params.k_floppy[u] = u % 3 == 0 ? 0.1 : 0.0;
  }
  BakeOptions opts;
  opts.clip = "swim";
  opts.fps = 5;
  const auto out = bake(s, opts);
  ASSERT_FALSE(out.displacement_magnitudes.empty());
  bool any = false;
  for (const auto& mags : out.displacement_magnitudes) {
    for (std::size_t u = 0; u < mags.size(); ++u) {
      if (u % 3 != 0) EXPECT_EQ(mags[u], 0.0);
      any = any || mags[u] > 0.0;
    }
  }
  EXPECT_TRUE(any);
}

TEST(BakeTest, SingleFrame) {
  SceneFile s = testing::random_scene(23);
  s.clips.front().duration = 0.0;
  BakeOptions opts;
  opts.clip = "clip";
  const auto out = bake(s, opts);
  ASSERT_EQ(out.frames.size(), 1u);
  EXPECT_EQ(out.frames[0].size(), s.mesh.vertex_count());
}

TEST(BenchTest, TinyMeshIsFast) {
  const auto start = std::chrono::steady_clock::now();
  BenchOptions opts;
  opts.clip = "clip";
  opts.repetitions = 5;
  const auto report = bench(testing::random_scene(24), opts);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(1));
  EXPECT_GT(report.lbs_median_ms, 0.0);
  EXPECT_GT(report.vs_median_ms, 0.0);
  const std::string csv = format_bench_csv(report);
  EXPECT_EQ(csv.rfind("vertices,triangles,bones,moving_bones,instances,", 0), 0u);
}

TEST(CreatureTest, BenchShape) {
  const SceneFile s = make_creature_scene({});
  EXPECT_GE(s.mesh.vertex_count(), 149000u);
  EXPECT_LE(s.mesh.vertex_count(), 151000u);
  EXPECT_EQ(s.skeleton.size(), 13u);
  EXPECT_EQ(s.clips.front().tracks.size(), 12u);
}

TEST(TrajectoryTest, VelocitySpec) {
  const auto kin = parse_velocity_spec(
      R"({"bones":[{"bone":1,"angular":[0,0,2]},{"bone":0,"linear":[1,0,0]}]})", 2);
  EXPECT_EQ(kin.angular[1], (Vec3{0, 0, 2}));
  EXPECT_EQ(kin.linear[0], (Vec3{1, 0, 0}));
  try {
    parse_velocity_spec(R"({"bones":[{"bone":5}]})", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kReferentialIntegrity);
  }
  EXPECT_THROW(parse_velocity_spec("[1,2", 2), Error);
}

TEST(TrajectoryTest, ZeroVelocityIsDegenerate) {
  const SceneFile s = testing::random_scene(25);
  TrajectoryOptions opts;
  opts.samples = 2;
  const auto result = trajectory(s, BoneKinematics::zero(s.skeleton.size()), opts);
  ASSERT_EQ(result.polylines.size(), s.mesh.vertex_count());
  for (const auto& line : result.polylines) {
    ASSERT_EQ(line.size(), 2u);
    EXPECT_EQ(line[0], line[1]);
  }
}

// CLI

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vskin_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CliRun RunCli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(VSKIN_CLI) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

TEST(CliTest, PrecomputeWritesPhiAndIsIdempotent) {
  const fs::path dir = TempDir("precompute");
  save_scene(testing::chain_scene(), dir / "scene.json");
  CliRun r = RunCli("precompute --scene " + (dir / "scene.json").string() + " --out " +
                     (dir / "a.json").string(),
                 dir);
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string first = read_text_file(dir / "a.json");
  EXPECT_NE(first.find("\"phi\""), std::string::npos);
  r = RunCli("precompute --scene " + (dir / "a.json").string(), dir);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(dir / "a.json"), first);
}

TEST(CliTest, CyclicSkeletonIsInputError) {
  const fs::path dir = TempDir("cyclic");
  nlohmann::json j = nlohmann::json::parse(serialize_scene(testing::chain_scene()));
  j["skeleton"]["bones"][2]["parent_index"] = 2;
  write_text_file(dir / "scene.json", j.dump());
  const CliRun r = RunCli("precompute --scene " + (dir / "scene.json").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("CyclicHierarchy"), std::string::npos) << r.err;
}

TEST(CliTest, ValidateExitCodes) {
  const fs::path dir = TempDir("validate");
  save_scene(ChainClipScene(6), dir / "scene.json");
  CliRun r = RunCli("validate --scene " + (dir / "scene.json").string() + " --clip clip", dir);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  r = RunCli("validate --scene " + (dir / "scene.json").string() +
                 " --clip clip --threshold 1e-30",
             dir);
  EXPECT_EQ(r.code, 1) << r.out << r.err;
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  r = RunCli("validate --scene " + (dir / "scene.json").string() + " --clip missing", dir);
  EXPECT_EQ(r.code, 2);
}

TEST(CliTest, UsageErrors) {
  const fs::path dir = TempDir("usage");
  EXPECT_EQ(RunCli("", dir).code, 2);
  EXPECT_EQ(RunCli("bake --scene nowhere.json", dir).code, 2);
  EXPECT_EQ(RunCli("--help", dir).code, 0);
}

TEST(CliTest, BakeWritesFrames) {
  const fs::path dir = TempDir("bake");
  SceneFile s = testing::random_scene(26);
  s.clips.front().duration = 0.5;
  save_scene(s, dir / "scene.json");
  const CliRun r = RunCli("bake --scene " + (dir / "scene.json").string() +
                           " --clip clip --fps 4 --out " + (dir / "frames").string(),
                       dir);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "frames" / "frame_000002.obj"));
  EXPECT_FALSE(fs::exists(dir / "frames" / "frame_000003.obj"));
}

TEST(CliTest, TrajectoryJson) {
  const fs::path dir = TempDir("trajectory");
  save_scene(testing::chain_scene(), dir / "scene.json");
  write_text_file(dir / "vel.json", R"({"bones":[{"bone":1,"angular":[0,0,3]}]})");
  const CliRun r = RunCli("trajectory --scene " + (dir / "scene.json").string() +
                           " --velocities " + (dir / "vel.json").string() +
                           " --vertices 0,2 --samples 4",
                       dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["samples"], 4);
  ASSERT_EQ(j["trajectories"].size(), 2u);
  EXPECT_EQ(j["trajectories"][1]["vertex"], 2);
}

}  // namespace
}  // namespace vskin
