#pragma once

// JSON feature, correspondence and result files. Numbers are written with
// 17 significant digits so that doubles survive a round trip.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "graff/cost.hpp"
#include "graff/errors.hpp"
#include "graff/manifold.hpp"
#include "graff/solver.hpp"

namespace graff {

using json = nlohmann::ordered_json;

inline constexpr int kFileVersion = 1;

/// Errors opening or reading a file.
class FileError : public Error {
 public:
  explicit FileError(const std::string& what) : Error("FileError", what) {}
};

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void dump_json(const json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) { out += "{}"; return; }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        dump_json(it.value(), out, indent, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) { out += "[]"; return; }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump_json(j[i], out, indent, depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_json(j[i], out, indent, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string to_json_string(const json& j) {
  std::string out;
  detail::dump_json(j, out, 2, 0);
  out += "\n";
  return out;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FileError("write failed for '" + path + "'");
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin + ": invalid JSON: " + e.what());
  }
}

inline json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// ---------------------------------------------------------------------------
// Features

struct Feature {
  std::string id;
  AffineSubspace subspace;
};

inline const char* feature_kind_name(int dim) {
  switch (dim) {
    case 0: return "point3d";
    case 1: return "line3d";
    case 2: return "plane3d";
  }
  return "?";
}

namespace detail {

inline Eigen::Vector3d read_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(where + ": expected an array of 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw SchemaError(where + ": expected an array of 3 numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

inline std::string read_id(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw SchemaError(where + ": id must be a string or integer");
}

}  // namespace detail

inline json features_to_json(const std::vector<Feature>& features) {
  json items = json::array();
  for (const auto& f : features) {
    if (f.subspace.ambient_dim() != 3) throw DimensionMismatch("feature files hold 3D features");
    json item;
    item["id"] = f.id;
    item["kind"] = feature_kind_name(f.subspace.dim());
    if (f.subspace.dim() == 1) {
      item["direction"] = vec_json(f.subspace.basis().col(0));
    } else if (f.subspace.dim() == 2) {
      item["basis"] = json::array({vec_json(f.subspace.basis().col(0)),
                                   vec_json(f.subspace.basis().col(1))});
    }
    item["anchor"] = vec_json(f.subspace.displacement());
    items.push_back(std::move(item));
  }
  json j;
  j["version"] = kFileVersion;
  j["ambient_dim"] = 3;
  j["items"] = std::move(items);
  return j;
}

inline std::vector<Feature> features_from_json(const json& j, const std::string& origin = "features") {
  if (!j.is_object()) throw SchemaError(origin + ": top level must be an object");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kFileVersion) {
    throw SchemaError(origin + ": unsupported or missing version");
  }
  if (!j.contains("ambient_dim") || !j["ambient_dim"].is_number_integer() ||
      j["ambient_dim"].get<int>() != 3) {
    throw SchemaError(origin + ": ambient_dim must be 3");
  }
  if (!j.contains("items") || !j["items"].is_array()) throw SchemaError(origin + ": missing items");

  std::vector<Feature> out;
  std::size_t n = 0;
  for (const auto& item : j["items"]) {
    const std::string where = origin + ": item " + std::to_string(n++);
    if (!item.is_object()) throw SchemaError(where + ": must be an object");
    if (!item.contains("id")) throw SchemaError(where + ": missing id");
    const std::string id = detail::read_id(item["id"], where);
    if (!item.contains("kind") || !item["kind"].is_string()) throw SchemaError(where + ": missing kind");
    if (!item.contains("anchor")) throw SchemaError(where + ": missing anchor");
    const std::string kind = item["kind"].get<std::string>();
    const Eigen::Vector3d anchor = detail::read_vec3(item["anchor"], where + " anchor");
    try {
      if (kind == "line3d") {
        if (!item.contains("direction")) throw SchemaError(where + ": missing direction");
        out.push_back({id, AffineSubspace::line(detail::read_vec3(item["direction"], where), anchor)});
      } else if (kind == "plane3d") {
        if (!item.contains("basis") || !item["basis"].is_array() || item["basis"].size() != 2) {
          throw SchemaError(where + ": basis must hold two vectors");
        }
        out.push_back({id, AffineSubspace::plane(detail::read_vec3(item["basis"][0], where),
                                                 detail::read_vec3(item["basis"][1], where),
                                                 anchor)});
      } else if (kind == "point3d") {
        out.push_back({id, AffineSubspace::point(anchor)});
      } else {
        throw SchemaError(where + ": unknown kind '" + kind + "'");
      }
    } catch (const RankDeficient&) {
      throw RankDeficient(id);
    }
  }
  return out;
}

inline std::vector<Feature> parse_features(const std::string& path) {
  return features_from_json(parse_json_text(read_text(path), path), path);
}

inline void write_features(const std::string& path, const std::vector<Feature>& features) {
  write_text(path, to_json_string(features_to_json(features)));
}

// ---------------------------------------------------------------------------
// Correspondences: pairs of (target id, source id)

using IdPairs = std::vector<std::pair<std::string, std::string>>;

inline json correspondences_to_json(const IdPairs& pairs) {
  json a = json::array();
  for (const auto& [t, s] : pairs) a.push_back(json::array({t, s}));
  json j;
  j["version"] = kFileVersion;
  j["pairs"] = std::move(a);
  return j;
}

inline IdPairs correspondences_from_json(const json& j, const std::string& origin = "correspondences") {
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kFileVersion) {
    throw SchemaError(origin + ": unsupported or missing version");
  }
  if (!j.contains("pairs") || !j["pairs"].is_array()) throw SchemaError(origin + ": missing pairs");
  IdPairs out;
  for (const auto& p : j["pairs"]) {
    if (!p.is_array() || p.size() != 2) throw SchemaError(origin + ": each pair must be [target, source]");
    out.emplace_back(detail::read_id(p[0], origin), detail::read_id(p[1], origin));
  }
  return out;
}

inline IdPairs parse_correspondences(const std::string& path) {
  return correspondences_from_json(parse_json_text(read_text(path), path), path);
}

inline void write_correspondences(const std::string& path, const IdPairs& pairs) {
  write_text(path, to_json_string(correspondences_to_json(pairs)));
}

/// Resolves id pairs against two feature lists.
inline std::vector<FeaturePair> build_pairs(FeatureKind kind, const std::vector<Feature>& targets,
                                            const std::vector<Feature>& sources,
                                            const IdPairs& ids) {
  std::map<std::string, std::size_t> ti, si;
  for (std::size_t i = 0; i < targets.size(); ++i) ti.emplace(targets[i].id, i);
  for (std::size_t i = 0; i < sources.size(); ++i) si.emplace(sources[i].id, i);
  std::vector<FeaturePair> out;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto t = ti.find(ids[k].first);
    const auto s = si.find(ids[k].second);
    if (t == ti.end()) throw SchemaError("unknown target id '" + ids[k].first + "'");
    if (s == si.end()) throw SchemaError("unknown source id '" + ids[k].second + "'");
    out.push_back(make_feature_pair(kind, targets[t->second].subspace, sources[s->second].subspace, k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results

struct ResultFile {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  IdPairs inlier_ids;
  double f_sum = 0.0;
  double g_sum = 0.0;
  double total = 0.0;
  json stats = json::object();
};

inline json stats_to_json(const RegistrationStats& s, bool with_timing) {
  json j;
  j["cubes_expanded"] = s.cubes_expanded;
  j["rotation_cubes_expanded"] = s.rotation_cubes_expanded;
  j["translation_cubes_expanded"] = s.translation_cubes_expanded;
  j["bound_evaluations"] = s.bound_evaluations;
  j["lm_calls"] = s.lm_calls;
  j["candidate_pairs"] = s.candidate_pairs;
  j["candidates_subsampled"] = s.candidates_subsampled;
  j["translation_gap_closed"] = s.translation_gap_closed;
  j["translation_on_boundary"] = s.translation_on_boundary;
  j["wall_time_ms"] = with_timing ? s.wall_time_ms : 0.0;
  return j;
}

inline json result_to_json(const ResultFile& r) {
  json rot = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) rot.push_back(r.rotation(i, k));
  json inl = json::array();
  for (const auto& [t, s] : r.inlier_ids) inl.push_back(json::array({t, s}));
  json j;
  j["version"] = kFileVersion;
  j["rotation"] = std::move(rot);
  j["translation"] = vec_json(r.translation);
  j["inlier_ids"] = std::move(inl);
  j["cost"] = {{"f_sum", r.f_sum}, {"g_sum", r.g_sum}, {"total", r.total}};
  j["stats"] = r.stats;
  return j;
}

inline ResultFile result_from_json(const json& j, const std::string& origin = "result") {
  if (!j.is_object() || !j.contains("version") || j["version"] != kFileVersion) {
    throw SchemaError(origin + ": unsupported or missing version");
  }
  ResultFile r;
  if (!j.contains("rotation") || !j["rotation"].is_array() || j["rotation"].size() != 9) {
    throw SchemaError(origin + ": rotation must hold 9 numbers");
  }
  for (int i = 0; i < 9; ++i) {
    if (!j["rotation"][i].is_number()) throw SchemaError(origin + ": rotation must hold 9 numbers");
    r.rotation(i / 3, i % 3) = j["rotation"][i].get<double>();
  }
  if (!RigidTransform::from(r.rotation, Eigen::Vector3d::Zero()).is_valid(1e-9)) {
    throw SchemaError(origin + ": rotation is not in SO(3)");
  }
  if (!j.contains("translation")) throw SchemaError(origin + ": missing translation");
  r.translation = detail::read_vec3(j["translation"], origin + " translation");
  if (j.contains("inlier_ids")) {
    for (const auto& p : j["inlier_ids"]) {
      if (!p.is_array() || p.size() != 2) throw SchemaError(origin + ": bad inlier id pair");
      r.inlier_ids.emplace_back(detail::read_id(p[0], origin), detail::read_id(p[1], origin));
    }
  }
  if (j.contains("cost")) {
    const auto& c = j["cost"];
    r.f_sum = c.value("f_sum", 0.0);
    r.g_sum = c.value("g_sum", 0.0);
    r.total = c.value("total", 0.0);
  }
  if (j.contains("stats")) r.stats = j["stats"];
  return r;
}

inline ResultFile parse_result(const std::string& path) {
  return result_from_json(parse_json_text(read_text(path), path), path);
}

}  // namespace graff
