#pragma once

// JSON forms of configs, skeletons and reports. Config readers are strict:
// unknown keys are rejected so that typos never fall back to defaults.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "posetraj/error.hpp"
#include "posetraj/metrics.hpp"
#include "posetraj/model.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/training.hpp"
#include "posetraj/transform.hpp"

namespace posetraj {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> known, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw InvalidArgument(std::string("unknown ") + what + " key '" + item.key() + "'");
    }
  }
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline Json to_json(const ModelConfig& c) {
  return Json{{"num_joints", c.num_joints},
              {"j_dim", c.j_dim},
              {"gat_heads", c.gat_heads},
              {"leaky_slope", c.leaky_slope},
              {"num_layers", c.num_layers},
              {"num_heads", c.num_heads},
              {"ffn_dim", c.ffn_dim},
              {"rel_clip", c.rel_clip},
              {"dropout", c.dropout},
              {"input_len", c.input_len},
              {"output_len", c.output_len},
              {"delta", c.delta},
              {"use_transform", c.use_transform},
              {"use_gat", c.use_gat},
              {"relative_attention", c.relative_attention},
              {"cross_attention", c.cross_attention},
              {"shared_attention", c.shared_attention},
              {"seed", c.seed}};
}

// Overlays the keys present in `j` onto `base`.
inline ModelConfig model_config_from_json(const Json& j, ModelConfig base = {}) {
  detail::reject_unknown_keys(j,
                              {"num_joints", "j_dim", "gat_heads", "leaky_slope", "num_layers", "num_heads",
                               "ffn_dim", "rel_clip", "dropout", "input_len", "output_len", "delta",
                               "use_transform", "use_gat", "relative_attention", "cross_attention",
                               "shared_attention", "seed"},
                              "model config");
  detail::read_opt(j, "num_joints", base.num_joints);
  detail::read_opt(j, "j_dim", base.j_dim);
  detail::read_opt(j, "gat_heads", base.gat_heads);
  detail::read_opt(j, "leaky_slope", base.leaky_slope);
  detail::read_opt(j, "num_layers", base.num_layers);
  detail::read_opt(j, "num_heads", base.num_heads);
  detail::read_opt(j, "ffn_dim", base.ffn_dim);
  detail::read_opt(j, "rel_clip", base.rel_clip);
  detail::read_opt(j, "dropout", base.dropout);
  detail::read_opt(j, "input_len", base.input_len);
  detail::read_opt(j, "output_len", base.output_len);
  detail::read_opt(j, "delta", base.delta);
  detail::read_opt(j, "use_transform", base.use_transform);
  detail::read_opt(j, "use_gat", base.use_gat);
  detail::read_opt(j, "relative_attention", base.relative_attention);
  detail::read_opt(j, "cross_attention", base.cross_attention);
  detail::read_opt(j, "shared_attention", base.shared_attention);
  detail::read_opt(j, "seed", base.seed);
  return base;
}

inline Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
              {"max_epochs", c.max_epochs},       {"batch_size", c.batch_size},
              {"seed", c.seed},                   {"no_gat", c.no_gat},
              {"no_relative_attn", c.no_relative_attn}, {"no_shared_attn", c.no_shared_attn},
              {"grad_clip", c.grad_clip},         {"window_stride", c.window_stride},
              {"final_learning_rate", c.final_learning_rate}};
}

inline TrainConfig train_config_from_json(const Json& j, TrainConfig base = {}) {
  detail::reject_unknown_keys(j,
                              {"learning_rate", "weight_decay", "max_epochs", "batch_size", "seed", "no_gat",
                               "no_relative_attn", "no_shared_attn", "grad_clip", "window_stride", "final_learning_rate"},
                              "train config");
  detail::read_opt(j, "learning_rate", base.learning_rate);
  detail::read_opt(j, "weight_decay", base.weight_decay);
  detail::read_opt(j, "max_epochs", base.max_epochs);
  detail::read_opt(j, "batch_size", base.batch_size);
  detail::read_opt(j, "seed", base.seed);
  detail::read_opt(j, "no_gat", base.no_gat);
  detail::read_opt(j, "no_relative_attn", base.no_relative_attn);
  detail::read_opt(j, "no_shared_attn", base.no_shared_attn);
  detail::read_opt(j, "grad_clip", base.grad_clip);
  detail::read_opt(j, "window_stride", base.window_stride);
  detail::read_opt(j, "final_learning_rate", base.final_learning_rate);
  return base;
}

inline Json to_json(const Skeleton& s) {
  Json edges = Json::array();
  for (const Edge& e : s.edges()) edges.push_back({e.a, e.b});
  return Json{{"joints", s.joint_names()}, {"edges", edges}, {"root", s.root_index()}};
}

inline Skeleton skeleton_from_json(const Json& j) {
  try {
    std::vector<Edge> edges;
    for (const Json& e : j.at("edges")) edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    return Skeleton(j.at("joints").get<std::vector<std::string>>(), std::move(edges), j.at("root").get<int>());
  } catch (const Json::exception& e) {
    throw InvalidSkeleton(std::string("bad skeleton descriptor: ") + e.what());
  }
}

inline Json to_json(const TransformParams& p) {
  return Json{{"v", {p.v.x(), p.v.y(), p.v.z()}}, {"theta", p.theta}, {"delta", p.delta}};
}

inline Json to_json(const EvalReport& r) {
  return Json{{"ade_pose", r.ade_pose}, {"fde_pose", r.fde_pose},     {"ade_traj", r.ade_traj},
              {"fde_traj", r.fde_traj}, {"runtime_ms", r.runtime_ms}, {"num_windows", r.num_windows}};
}

inline Json to_json(const EpochRecord& r) {
  Json j{{"epoch", r.epoch},
         {"train_loss", r.train_loss},
         {"wall_clock_s", r.wall_clock_s},
         {"checkpoint", r.checkpoint}};
  if (r.validation) j["validation"] = to_json(*r.validation);
  return j;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
}

}  // namespace posetraj
