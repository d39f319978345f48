#pragma once

// Named tensor store and deterministic initialization.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kinest/error.hpp"

namespace kinest {

struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<float> data;

  static Tensor zeros(std::vector<std::size_t> dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return {std::move(dims), std::vector<float>(n, 0.0f)};
  }
  std::size_t numel() const { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

/// Every learnable tensor, keyed by a dotted hierarchical name.
class Weights {
 public:
  void add(const std::string& name, Tensor t) {
    if (!tensors_.emplace(name, std::move(t)).second) throw FormatError("Weights: duplicate tensor '" + name + "'");
  }
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor& get(const std::string& name) const {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw FormatError("Weights: missing tensor '" + name + "'");
    return it->second;
  }
  Tensor& get(const std::string& name) {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw FormatError("Weights: missing tensor '" + name + "'");
    return it->second;
  }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  std::map<std::string, Tensor>& tensors() { return tensors_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.numel();
    return n;
  }

  /// Same names and shapes (values may differ).
  bool same_layout(const Weights& o) const {
    if (tensors_.size() != o.tensors_.size()) return false;
    for (auto a = tensors_.begin(), b = o.tensors_.begin(); a != tensors_.end(); ++a, ++b) {
      if (a->first != b->first || a->second.dims != b->second.dims) return false;
    }
    return true;
  }

  bool operator==(const Weights&) const = default;

 private:
  std::map<std::string, Tensor> tensors_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

/// Uniform(-bound, bound) stream for one tensor. The stream is a SplitMix64
/// sequence seeded with seed ^ FNV-1a(name); each draw keeps the top 53 bits
/// as a double in [0, 1). Per-name seeding keeps tensors independent of
/// the order in which they are created.
inline void fill_uniform(Tensor& t, std::uint64_t seed, std::string_view name, double bound) {
  std::uint64_t state = seed ^ detail::fnv1a(name);
  for (float& v : t.data) {
    const double u = static_cast<double>(detail::splitmix64(state) >> 11) * 0x1.0p-53;
    v = static_cast<float>((2.0 * u - 1.0) * bound);
  }
}

}  // namespace kinest
