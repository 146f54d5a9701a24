#pragma once

// Checkpoint container (little-endian):
//
//   8 bytes   magic "PTRJCKPT"
//   u32       format version
//   u64       metadata length L, then L bytes of JSON:
//               {"format": "posetraj-checkpoint", "version": 1,
//                "model_config": {...}, "skeleton": {...}, "extra": {...}}
//   u64       tensor count, then per tensor:
//               u32 name length, name bytes, u64 rows, u64 cols,
//               rows*cols f64 values in row-major order
//
// Optimizer moments, when saved, are tensors named "adamw.m/<param>" and
// "adamw.v/<param>"; the step counter lives in extra.optimizer_step.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "posetraj/error.hpp"
#include "posetraj/io.hpp"
#include "posetraj/model.hpp"
#include "posetraj/training.hpp"

namespace posetraj {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'P', 'T', 'R', 'J', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model_config;
  std::shared_ptr<const Skeleton> skeleton;
  Json extra = Json::object();
  std::map<std::string, Matrix> tensors;
};

namespace detail {

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError(std::string("truncated checkpoint (") + what + ")");
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const Model& model, const AdamW* optimizer = nullptr,
                            const Json& extra = Json::object()) {
  Json meta{{"format", "posetraj-checkpoint"},
            {"version", kCheckpointVersion},
            {"model_config", to_json(model.config())},
            {"skeleton", to_json(model.skeleton())},
            {"extra", extra}};
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  for (const auto& e : model.parameters().entries()) tensors.emplace_back(e.name, &e.var.value());
  if (optimizer) {
    meta["extra"]["optimizer_step"] = optimizer->step_count();
    const auto& entries = model.parameters().entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const AdamWMoments& m = optimizer->moments()[i];
      if (m.m.size() == 0) continue;
      tensors.emplace_back("adamw.m/" + entries[i].name, &m.m);
      tensors.emplace_back("adamw.v/" + entries[i].name, &m.v);
    }
  }
  const std::string meta_text = meta.dump();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw InputError("cannot open '" + tmp.string() + "' for writing");
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put<std::uint32_t>(os, kCheckpointVersion);
    detail::put<std::uint64_t>(os, meta_text.size());
    os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    detail::put<std::uint64_t>(os, tensors.size());
    for (const auto& [name, m] : tensors) {
      detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(m->rows()));
      detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(m->cols()));
      os.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
    }
    if (!os) throw Error("failed writing checkpoint '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kCheckpointMagic)) {
    throw CheckpointError("'" + path.string() + "' is not a checkpoint (bad magic)");
  }
  const auto version = detail::get<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto meta_len = detail::get<std::uint64_t>(is, "metadata length");
  if (meta_len > (1u << 26)) throw CheckpointError("implausible metadata length");
  std::string meta_text(meta_len, '\0');
  if (!is.read(meta_text.data(), static_cast<std::streamsize>(meta_len))) throw CheckpointError("truncated metadata");
  Checkpoint ck;
  try {
    const Json meta = Json::parse(meta_text);
    if (meta.at("format") != "posetraj-checkpoint") throw CheckpointError("unexpected format tag");
    ck.model_config = model_config_from_json(meta.at("model_config"));
    ck.skeleton = std::make_shared<const Skeleton>(skeleton_from_json(meta.at("skeleton")));
    if (meta.contains("extra")) ck.extra = meta.at("extra");
  } catch (const Json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  }
  const auto count = detail::get<std::uint64_t>(is, "tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::get<std::uint32_t>(is, "name length");
    if (name_len > 4096) throw CheckpointError("implausible tensor name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw CheckpointError("truncated tensor name");
    const auto rows = detail::get<std::uint64_t>(is, "rows");
    const auto cols = detail::get<std::uint64_t>(is, "cols");
    if (rows > (1u << 28) || cols > (1u << 28) || rows * cols > (1ull << 31)) {
      throw CheckpointError("implausible shape for tensor '" + name + "'");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw CheckpointError("truncated data for tensor '" + name + "'");
    }
    ck.tensors.emplace(std::move(name), std::move(m));
  }
  return ck;
}

// Fails unless every model parameter is present with the allocated shape and
// no unknown parameter tensor is left over.
inline void load_parameters(Model& model, const Checkpoint& ck) {
  std::size_t used = 0;
  for (auto& e : model.parameters().entries()) {
    const auto it = ck.tensors.find(e.name);
    if (it == ck.tensors.end()) throw CheckpointError("checkpoint lacks parameter '" + e.name + "'");
    if (it->second.rows() != e.var.rows() || it->second.cols() != e.var.cols()) {
      throw CheckpointError("parameter '" + e.name + "' has shape " + std::to_string(it->second.rows()) + "x" +
                            std::to_string(it->second.cols()) + ", model expects " + std::to_string(e.var.rows()) +
                            "x" + std::to_string(e.var.cols()));
    }
    e.var.mutable_value() = it->second;
    ++used;
  }
  for (const auto& [name, m] : ck.tensors) {
    if (name.rfind("adamw.", 0) == 0) continue;
    if (!model.parameters().contains(name)) throw CheckpointError("checkpoint has unknown parameter '" + name + "'");
  }
  (void)used;
}

inline Model model_from_checkpoint(const Checkpoint& ck) {
  Model model(*ck.skeleton, ck.model_config);
  load_parameters(model, ck);
  return model;
}

inline void restore_optimizer(const Checkpoint& ck, const Model& model, AdamW& optimizer) {
  const auto& entries = model.parameters().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto m = ck.tensors.find("adamw.m/" + entries[i].name);
    const auto v = ck.tensors.find("adamw.v/" + entries[i].name);
    if (m != ck.tensors.end() && v != ck.tensors.end()) optimizer.moments()[i] = {m->second, v->second};
  }
  if (ck.extra.contains("optimizer_step")) optimizer.set_step_count(ck.extra.at("optimizer_step").get<std::int64_t>());
}

inline void require_skeleton(const Skeleton& expected, const Skeleton& actual, const std::string& context) {
  if (!(expected == actual)) {
    throw SkeletonMismatch(context + ": skeleton (" + std::to_string(actual.num_joints()) +
                           " joints) does not match the checkpoint's (" + std::to_string(expected.num_joints()) +
                           " joints)");
  }
}

}  // namespace posetraj
