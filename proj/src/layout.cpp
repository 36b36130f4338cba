#include "nnes/layout.hpp"

namespace nnes {

SpaceLayout::SpaceLayout(std::vector<int> d, std::vector<std::vector<int>> sm)
    : dims(std::move(d)), site_map(std::move(sm)) {
  if (dims.empty()) throw Error("SpaceLayout: needs at least the Sigma slot");
  for (int x : dims)
    if (x < 1) throw Error("SpaceLayout: every subsystem dimension must be >= 1");
  if (site_map.empty()) {
    site_map.resize(dims.size());
    for (size_t a = 0; a < dims.size(); ++a) site_map[a] = {dims[a]};
  }
  if (site_map.size() != dims.size())
    throw Error("SpaceLayout: site_map size does not match dims");
  for (size_t a = 0; a < dims.size(); ++a) {
    long p = 1;
    for (int s : site_map[a]) {
      if (s < 1) throw Error("SpaceLayout: site dimension must be >= 1");
      p *= s;
    }
    if (p != dims[a]) throw Error("SpaceLayout: site_map product mismatch at subsystem");
  }
}

long SpaceLayout::total() const {
  long p = 1;
  for (int d : dims) p *= d;
  return p;
}

long SpaceLayout::reservoir_total() const { return total() / dims[0]; }

bool SpaceLayout::operator==(const SpaceLayout& other) const {
  return dims == other.dims && site_map == other.site_map;
}

LayoutPtr make_layout(std::vector<int> dims, std::vector<std::vector<int>> site_map) {
  return std::make_shared<const SpaceLayout>(std::move(dims), std::move(site_map));
}

LayoutPtr reservoir_layout(const SpaceLayout& full) {
  std::vector<int> d(full.dims.begin() + 1, full.dims.end());
  std::vector<std::vector<int>> sm(full.site_map.begin() + 1, full.site_map.end());
  if (d.empty()) {
    d = {1};
    sm = {{1}};
  }
  return make_layout(std::move(d), std::move(sm));
}

}  // namespace nnes
