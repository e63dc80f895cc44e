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

#include "vskin/assets_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vskin/error.hpp"

namespace vskin {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParseError, what + " at " + (path.empty() ? "/" : path));
}

[[noreturn]] void integrity_fail(const std::string& what) {
  throw Error(ErrorCode::kReferentialIntegrity, what);
}

std::string child(const std::string& path, std::string_view key) {
  return path + "/" + std::string(key);
}

std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

const Json& require(const Json& obj, std::string_view key,
                    const std::string& path) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    parse_fail(path, "missing field '" + std::string(key) + "'");
  }
  return *it;
}

const Json* optional_field(const Json& obj, std::string_view key,
                           const std::string& path) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

const Json& require_array(const Json& j, const std::string& path,
                          std::size_t expected_size = 0) {
  if (!j.is_array()) parse_fail(path, "expected an array");
  if (expected_size != 0 && j.size() != expected_size) {
    parse_fail(path, "expected " + std::to_string(expected_size) + " elements");
  }
  return j;
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) parse_fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(path, "expected a finite number");
  return v;
}

long long as_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) parse_fail(path, "expected an integer");
  return j.get<long long>();
}

bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) parse_fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) parse_fail(path, "expected a string");
  return j.get<std::string>();
}

Vec3 as_vec3(const Json& j, const std::string& path) {
  require_array(j, path, 3);
  return {as_number(j[0], child(path, 0)), as_number(j[1], child(path, 1)),
          as_number(j[2], child(path, 2))};
}

// Renormalized only when noticeably off, so saved unit quaternions load
// back bit-identically.
Quat as_quat(const Json& j, const std::string& path) {
  require_array(j, path, 4);
  const Quat q{as_number(j[0], child(path, 0)), as_number(j[1], child(path, 1)),
               as_number(j[2], child(path, 2)), as_number(j[3], child(path, 3))};
  const double n = norm(q);
  if (!(n > 0.0)) parse_fail(path, "quaternion has zero norm");
  return std::abs(n - 1.0) > 1e-12 ? normalized(q) : q;
}

WeightRows as_weight_rows(const Json& j, const std::string& path) {
  require_array(j, path);
  WeightRows rows(j.size());
  for (std::size_t u = 0; u < j.size(); ++u) {
    const std::string row_path = child(path, u);
    const Json& row = require_array(j[u], row_path);
    for (std::size_t e = 0; e < row.size(); ++e) {
      const std::string entry_path = child(row_path, e);
      const Json& entry = require_array(row[e], entry_path, 2);
      rows[u].push_back(
          {static_cast<int>(as_integer(entry[0], child(entry_path, 0))),
           as_number(entry[1], child(entry_path, 1))});
    }
  }
  return rows;
}

Json vec3_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
Json quat_json(const Quat& q) { return Json::array({q.w, q.x, q.y, q.z}); }

Json weight_rows_json(const WeightRows& rows) {
  Json out = Json::array();
  for (const WeightRow& row : rows) {
    Json r = Json::array();
    for (const BoneWeight& bw : row) r.push_back(Json::array({bw.bone, bw.weight}));
    out.push_back(std::move(r));
  }
  return out;
}

Skeleton parse_skeleton(const Json& j, const std::string& path) {
  Skeleton s;
  const std::string bones_path = child(path, "bones");
  const Json& bones = require_array(require(j, "bones", path), bones_path);
  for (std::size_t i = 0; i < bones.size(); ++i) {
    const std::string bp = child(bones_path, i);
    const Json& jb = bones[i];
    Bone b;
    if (const Json* name = optional_field(jb, "name", bp)) {
      b.name = as_string(*name, child(bp, "name"));
    }
    b.parent = static_cast<int>(
        as_integer(require(jb, "parent_index", bp), child(bp, "parent_index")));
    if (const Json* r = optional_field(jb, "rest_rotation", bp)) {
      b.rest_local.rotation = as_quat(*r, child(bp, "rest_rotation"));
    }
    if (const Json* t = optional_field(jb, "rest_translation", bp)) {
      b.rest_local.translation = as_vec3(*t, child(bp, "rest_translation"));
    }
    s.bones.push_back(std::move(b));
  }
  return s;
}

SkinnedMesh parse_mesh(const Json& j, const std::string& path) {
  SkinnedMesh mesh;
  const std::string pos_path = child(path, "positions");
  const Json& positions = require_array(require(j, "positions", path), pos_path);
  for (std::size_t u = 0; u < positions.size(); ++u) {
    mesh.rest_positions.push_back(as_vec3(positions[u], child(pos_path, u)));
  }
  if (const Json* tris = optional_field(j, "triangles", path)) {
    const std::string tri_path = child(path, "triangles");
    require_array(*tris, tri_path);
    for (std::size_t t = 0; t < tris->size(); ++t) {
      const std::string tp = child(tri_path, t);
      const Json& jt = require_array((*tris)[t], tp, 3);
      Triangle tri{};
      for (std::size_t c = 0; c < 3; ++c) {
        const long long idx = as_integer(jt[c], child(tp, c));
        if (idx < 0) parse_fail(child(tp, c), "negative vertex index");
        tri[c] = static_cast<std::uint32_t>(idx);
      }
      mesh.triangles.push_back(tri);
    }
  }
  mesh.weights = as_weight_rows(require(j, "weights", path), child(path, "weights"));
  return mesh;
}

AnimationClip parse_clip(const Json& j, const std::string& path) {
  AnimationClip clip;
  clip.name = as_string(require(j, "name", path), child(path, "name"));
  clip.duration = as_number(require(j, "duration", path), child(path, "duration"));
  if (const Json* loop = optional_field(j, "loop", path)) {
    clip.loop = as_bool(*loop, child(path, "loop"));
  }
  const std::string tracks_path = child(path, "tracks");
  const Json& tracks = require_array(require(j, "tracks", path), tracks_path);
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const std::string tp = child(tracks_path, t);
    BoneTrack track;
    track.bone = static_cast<int>(
        as_integer(require(tracks[t], "bone", tp), child(tp, "bone")));
    const std::string keys_path = child(tp, "keys");
    const Json& keys = require_array(require(tracks[t], "keys", tp), keys_path);
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const std::string kp = child(keys_path, k);
      Keyframe key;
      key.time = as_number(require(keys[k], "time", kp), child(kp, "time"));
      if (const Json* r = optional_field(keys[k], "rotation", kp)) {
        key.rotation = as_quat(*r, child(kp, "rotation"));
      }
      if (const Json* tr = optional_field(keys[k], "translation", kp)) {
        key.translation = as_vec3(*tr, child(kp, "translation"));
      }
      track.keys.push_back(key);
    }
    clip.tracks.push_back(std::move(track));
  }
  return clip;
}

std::vector<double> as_number_list(const Json& j, const std::string& path) {
  require_array(j, path);
  std::vector<double> out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out[i] = as_number(j[i], child(path, i));
  return out;
}

VsParams parse_vs_params(const Json& j, const std::string& path,
                         std::size_t vertex_count, std::size_t bone_count) {
  VsParams p = VsParams::defaults(vertex_count, bone_count);
  if (const Json* ks = optional_field(j, "k_squash", path)) {
    p.k_squash = as_number_list(*ks, child(path, "k_squash"));
  }
  if (const Json* kf = optional_field(j, "k_floppy", path)) {
    p.k_floppy = as_number_list(*kf, child(path, "k_floppy"));
  }
  if (const Json* tm = optional_field(j, "theta_max", path)) {
    p.theta_max = as_number(*tm, child(path, "theta_max"));
  }
  if (const Json* bones = optional_field(j, "bones", path)) {
    const std::string bones_path = child(path, "bones");
    require_array(*bones, bones_path);
    p.bones.assign(bones->size(), BoneControls{});
    for (std::size_t i = 0; i < bones->size(); ++i) {
      const std::string bp = child(bones_path, i);
      const Json& jb = (*bones)[i];
      BoneControls& c = p.bones[i];
      if (const Json* v = optional_field(jb, "squash", bp)) {
        c.squash = as_bool(*v, child(bp, "squash"));
      }
      if (const Json* v = optional_field(jb, "floppy", bp)) {
        c.floppy = as_bool(*v, child(bp, "floppy"));
      }
      if (const Json* v = optional_field(jb, "rotation_gain", bp)) {
        c.rotation_gain = as_number(*v, child(bp, "rotation_gain"));
      }
      if (const Json* v = optional_field(jb, "translation_gain", bp)) {
        c.translation_gain = as_number(*v, child(bp, "translation_gain"));
      }
      if (const Json* v = optional_field(jb, "squash_mode", bp)) {
        const std::string mode = as_string(*v, child(bp, "squash_mode"));
        if (mode == "axis") {
          c.squash_mode = SquashMode::kAxis;
        } else if (mode == "point") {
          c.squash_mode = SquashMode::kPoint;
        } else {
          parse_fail(child(bp, "squash_mode"), "expected \"axis\" or \"point\"");
        }
      }
      if (const Json* v = optional_field(jb, "centroid_offset", bp)) {
        c.centroid_offset = as_vec3(*v, child(bp, "centroid_offset"));
      }
    }
  }
  return p;
}

Precomputed parse_precomputed(const Json& j, const std::string& path) {
  Precomputed pre;
  pre.phi = as_weight_rows(require(j, "phi", path), child(path, "phi"));
  pre.psi = as_weight_rows(require(j, "psi", path), child(path, "psi"));
  pre.masses = as_number_list(require(j, "masses", path), child(path, "masses"));
  const std::string cp = child(path, "centroids");
  const Json& centroids = require_array(require(j, "centroids", path), cp);
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    pre.centroids.push_back(as_vec3(centroids[i], child(cp, i)));
  }
  return pre;
}

void check_rows(const WeightRows& rows, std::size_t vertex_count,
                std::size_t bone_count, const std::string& what) {
  if (rows.size() != vertex_count) {
    integrity_fail(what + " has " + std::to_string(rows.size()) +
                   " rows for " + std::to_string(vertex_count) + " vertices");
  }
  for (std::size_t u = 0; u < rows.size(); ++u) {
    for (const BoneWeight& bw : rows[u]) {
      if (bw.bone < 0 || static_cast<std::size_t>(bw.bone) >= bone_count) {
        integrity_fail(what + " row " + std::to_string(u) +
                       " references bone " + std::to_string(bw.bone) +
                       " of " + std::to_string(bone_count));
      }
    }
  }
}

void check_references(const SceneFile& scene) {
  const std::size_t nb = scene.skeleton.size();
  const std::size_t nv = scene.mesh.vertex_count();
  check_rows(scene.mesh.weights, nv, nb, "mesh weights");
  for (std::size_t t = 0; t < scene.mesh.triangles.size(); ++t) {
    for (std::uint32_t idx : scene.mesh.triangles[t]) {
      if (idx >= nv) {
        integrity_fail("triangle " + std::to_string(t) + " references vertex " +
                       std::to_string(idx) + " of " + std::to_string(nv));
      }
    }
  }
  for (const AnimationClip& clip : scene.clips) {
    for (const BoneTrack& track : clip.tracks) {
      if (track.bone < 0 || static_cast<std::size_t>(track.bone) >= nb) {
        integrity_fail("clip '" + clip.name + "' animates bone " +
                       std::to_string(track.bone) + " of " + std::to_string(nb));
      }
    }
  }
  scene.vs_params.validate(nv, nb);
  if (scene.precomputed) {
    const Precomputed& pre = *scene.precomputed;
    check_rows(pre.phi, nv, nb, "precomputed phi");
    check_rows(pre.psi, nv, nb, "precomputed psi");
    if (pre.masses.size() != nv) integrity_fail("precomputed masses size mismatch");
    if (pre.centroids.size() != nb) {
      integrity_fail("precomputed centroids size mismatch");
    }
  }
}

// 1-based line and column of a byte offset.
std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

const AnimationClip& SceneFile::clip(std::string_view name) const {
  std::string available;
  for (const AnimationClip& c : clips) {
    if (c.name == name) return c;
    available += (available.empty() ? "" : ", ") + c.name;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "no clip named '" + std::string(name) + "' (available: " +
                  (available.empty() ? "none" : available) + ")");
}

SceneFile parse_scene(std::string_view text, std::vector<std::string>* warnings) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParseError,
                "malformed JSON at " + line_context(text, e.byte) + ": " + e.what());
  }
  if (!root.is_object()) parse_fail("", "expected a JSON object");

  SceneFile scene;
  scene.version = static_cast<int>(as_integer(require(root, "version", ""), "/version"));
  if (scene.version != kSceneFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "scene version " + std::to_string(scene.version) +
                    " is not supported (expected " +
                    std::to_string(kSceneFormatVersion) + ")");
  }
  scene.skeleton = parse_skeleton(require(root, "skeleton", ""), "/skeleton");
  scene.mesh = parse_mesh(require(root, "mesh", ""), "/mesh");
  if (const Json* clips = optional_field(root, "clips", "")) {
    require_array(*clips, "/clips");
    for (std::size_t c = 0; c < clips->size(); ++c) {
      scene.clips.push_back(parse_clip((*clips)[c], child("/clips", c)));
    }
  }
  const std::size_t nv = scene.mesh.vertex_count();
  const std::size_t nb = scene.skeleton.size();
  if (const Json* vs = optional_field(root, "vs_params", "")) {
    scene.vs_params = parse_vs_params(*vs, "/vs_params", nv, nb);
  } else {
    scene.vs_params = VsParams::defaults(nv, nb);
  }
  if (const Json* pre = optional_field(root, "precomputed", "")) {
    scene.precomputed = parse_precomputed(*pre, "/precomputed");
  }

  validate_skeleton(scene.skeleton);
  check_references(scene);
  for (const AnimationClip& clip : scene.clips) validate_clip(clip, nb);

  std::vector<double> sums(nv, 0.0);
  for (std::size_t u = 0; u < nv; ++u) {
    for (const BoneWeight& bw : scene.mesh.weights[u]) sums[u] += bw.weight;
  }
  for (std::size_t u : normalize_weights(scene.mesh)) {
    if (warnings) {
      warnings->push_back("weights of vertex " + std::to_string(u) +
                          " summed to " + std::to_string(sums[u]) +
                          "; renormalized");
    }
  }
  validate_mesh(scene.mesh, nb);
  return scene;
}

SceneFile load_scene(const std::filesystem::path& path,
                     std::vector<std::string>* warnings) {
  const std::string text = read_text_file(path);
  try {
    return parse_scene(text, warnings);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string serialize_scene(const SceneFile& scene) {
  Json root;
  root["version"] = scene.version;

  Json bones = Json::array();
  for (const Bone& b : scene.skeleton.bones) {
    Json jb;
    jb["name"] = b.name;
    jb["parent_index"] = b.parent;
    jb["rest_rotation"] = quat_json(b.rest_local.rotation);
    jb["rest_translation"] = vec3_json(b.rest_local.translation);
    bones.push_back(std::move(jb));
  }
  root["skeleton"] = {{"bones", std::move(bones)}};

  Json positions = Json::array();
  for (const Vec3& p : scene.mesh.rest_positions) positions.push_back(vec3_json(p));
  Json triangles = Json::array();
  for (const Triangle& t : scene.mesh.triangles) {
    triangles.push_back(Json::array({t[0], t[1], t[2]}));
  }
  root["mesh"] = {{"positions", std::move(positions)},
                  {"triangles", std::move(triangles)},
                  {"weights", weight_rows_json(scene.mesh.weights)}};

  Json clips = Json::array();
  for (const AnimationClip& clip : scene.clips) {
    Json tracks = Json::array();
    for (const BoneTrack& track : clip.tracks) {
      Json keys = Json::array();
      for (const Keyframe& k : track.keys) {
        keys.push_back({{"time", k.time},
                        {"rotation", quat_json(k.rotation)},
                        {"translation", vec3_json(k.translation)}});
      }
      tracks.push_back({{"bone", track.bone}, {"keys", std::move(keys)}});
    }
    clips.push_back({{"name", clip.name},
                     {"duration", clip.duration},
                     {"loop", clip.loop},
                     {"tracks", std::move(tracks)}});
  }
  root["clips"] = std::move(clips);

  const VsParams& p = scene.vs_params;
  Json controls = Json::array();
  for (const BoneControls& c : p.bones) {
    controls.push_back(
        {{"squash", c.squash},
         {"floppy", c.floppy},
         {"rotation_gain", c.rotation_gain},
         {"translation_gain", c.translation_gain},
         {"squash_mode", c.squash_mode == SquashMode::kAxis ? "axis" : "point"},
         {"centroid_offset", vec3_json(c.centroid_offset)}});
  }
  root["vs_params"] = {{"k_squash", p.k_squash},
                       {"k_floppy", p.k_floppy},
                       {"theta_max", p.theta_max ? Json(*p.theta_max) : Json()},
                       {"bones", std::move(controls)}};

  if (scene.precomputed) {
    const Precomputed& pre = *scene.precomputed;
    Json centroids = Json::array();
    for (const Vec3& c : pre.centroids) centroids.push_back(vec3_json(c));
    root["precomputed"] = {{"phi", weight_rows_json(pre.phi)},
                           {"psi", weight_rows_json(pre.psi)},
                           {"masses", pre.masses},
                           {"centroids", std::move(centroids)}};
  }
  return root.dump(1) + "\n";
}

void save_scene(const SceneFile& scene, const std::filesystem::path& path) {
  write_text_file(path, serialize_scene(scene));
}

SceneFile precompute_model(SceneFile scene) {
  RigModel model = prepare_model(scene.skeleton, scene.mesh);
  scene.precomputed = Precomputed{std::move(model.phi), std::move(model.psi),
                                  std::move(model.masses),
                                  std::move(model.centroids)};
  return scene;
}

RigModel make_model(const SceneFile& scene) {
  if (!scene.precomputed) return prepare_model(scene.skeleton, scene.mesh);
  validate_skeleton(scene.skeleton);
  validate_mesh(scene.mesh, scene.skeleton.size());
  RigModel model;
  model.skeleton = scene.skeleton;
  model.mesh = scene.mesh;
  model.rest_globals = rest_global_transforms(scene.skeleton);
  model.phi = scene.precomputed->phi;
  model.psi = scene.precomputed->psi;
  model.masses = scene.precomputed->masses;
  model.centroids = scene.precomputed->centroids;
  return model;
}

ObjGeometry parse_obj(std::string_view text) {
  ObjGeometry obj;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kParseError,
                "OBJ line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) fail("expected three coordinates");
      obj.positions.push_back(p);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string token;
      while (ls >> token) {
        long long idx = 0;
        try {
          idx = std::stoll(token.substr(0, token.find('/')));
        } catch (const std::exception&) {
          fail("bad face index '" + token + "'");
        }
        const auto n = static_cast<long long>(obj.positions.size());
        if (idx < 0) idx = n + idx + 1;
        if (idx < 1 || idx > n) fail("face index out of range");
        poly.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      if (poly.size() < 3) fail("face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        obj.triangles.push_back({poly[0], poly[k], poly[k + 1]});
      }
    }
  }
  return obj;
}

ObjGeometry load_obj(const std::filesystem::path& path) {
  return parse_obj(read_text_file(path));
}

std::string format_obj(std::span<const Vec3> positions,
                       std::span<const Triangle> triangles) {
  std::string out;
  out.reserve(positions.size() * 40 + triangles.size() * 24);
  char buf[128];
  for (const Vec3& p : positions) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", p.x, p.y, p.z);
    out += buf;
  }
  for (const Triangle& t : triangles) {
    std::snprintf(buf, sizeof(buf), "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

std::size_t bake_frame_count(double duration, double fps) {
  if (!(fps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fps must be positive");
  if (!(duration >= 0.0)) return 1;
  return static_cast<std::size_t>(std::floor(duration * fps + 1e-9)) + 1;
}

std::vector<std::filesystem::path> export_obj_sequence(
    const BakeOutput& bake, std::span<const Triangle> triangles,
    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + dir.string() + ": " + ec.message());
  }
  std::vector<std::filesystem::path> written;
  char name[32];
  for (std::size_t f = 0; f < bake.frames.size(); ++f) {
    std::snprintf(name, sizeof(name), "frame_%06zu.obj", f);
    const auto path = dir / name;
    write_text_file(path, format_obj(bake.frames[f], triangles));
    written.push_back(path);
  }
  return written;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace vskin
