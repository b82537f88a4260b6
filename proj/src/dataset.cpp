#include "kinship/dataset.hpp"

namespace kinship {

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset data;
  data.store = load_embeddings(dir / "embeddings.csv");
  for (Split s : kAllSplits) {
    const auto i = static_cast<std::size_t>(s);
    const std::string name(split_name(s));
    data.pairs[i] = load_pairs(dir / ("pairs_" + name + ".csv"), data.store);
    const auto tri_path = dir / ("tri_" + name + ".csv");
    if (std::filesystem::exists(tri_path)) {
      data.tri[i] = load_tri(tri_path, data.store);
    } else {
      data.tri[i].provenance = "tri_" + name + " (absent)";
    }
  }
  return data;
}

Dataset dataset_from_world(const SynthWorld& world) {
  Dataset data;
  data.store = world.store;
  for (Split s : kAllSplits) {
    const auto i = static_cast<std::size_t>(s);
    data.pairs[i] = world.splits[i].pairs;
    data.tri[i] = world.splits[i].tri;
  }
  return data;
}

}  // namespace kinship
