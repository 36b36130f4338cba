#pragma once

#include <memory>
#include <vector>

#include "nnes/types.hpp"

namespace nnes {

/// Ordered list of subsystem dimensions. Slot 0 is the finite system Sigma
/// (n x n matrix algebra); slots a >= 1 are reservoir chains whose Hilbert
/// dimension is the product of their per-site dimensions.
struct SpaceLayout {
  std::vector<int> dims;                   // per-subsystem Hilbert dimension
  std::vector<std::vector<int>> site_map;  // per-subsystem per-site dimensions

  SpaceLayout() = default;
  SpaceLayout(std::vector<int> d, std::vector<std::vector<int>> sm);

  int factors() const { return static_cast<int>(dims.size()); }
  int dim(int a) const { return dims.at(static_cast<size_t>(a)); }
  int sigma_dim() const { return dims.at(0); }
  long total() const;

  /// Dimension of the reservoir part A_> (everything except Sigma).
  long reservoir_total() const;

  bool operator==(const SpaceLayout& other) const;
};

using LayoutPtr = std::shared_ptr<const SpaceLayout>;

LayoutPtr make_layout(std::vector<int> dims, std::vector<std::vector<int>> site_map = {});

/// Layout for A_> alone (Sigma slot removed).
LayoutPtr reservoir_layout(const SpaceLayout& full);

}  // namespace nnes
