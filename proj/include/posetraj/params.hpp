#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "posetraj/autodiff.hpp"
#include "posetraj/error.hpp"
#include "posetraj/types.hpp"

namespace posetraj {

enum class Init { kXavier, kZeros, kOnes };

// Named learnable tensors in creation order. Modules keep copies of the Vars
// they own; the store is the single place that enumerates them (optimizer,
// checkpoints, gradient checks).
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    ad::Var var;
  };

  explicit ParameterStore(std::uint64_t seed = 0) : rng_(seed) {}

  ad::Var create(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init init) {
    if (index_.count(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
    Matrix m(rows, cols);
    switch (init) {
      case Init::kZeros:
        m.setZero();
        break;
      case Init::kOnes:
        m.setOnes();
        break;
      case Init::kXavier: {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
        break;
      }
    }
    index_.emplace(name, entries_.size());
    entries_.push_back({name, ad::Var(std::move(m), true)});
    return entries_.back().var;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  ad::Var get(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("no parameter named '" + name + "'");
    return entries_[it->second].var;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += static_cast<std::size_t>(e.var.size());
    return n;
  }

  void zero_grad() {
    for (Entry& e : entries_) e.var.zero_grad();
  }

 private:
  std::mt19937_64 rng_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace posetraj
