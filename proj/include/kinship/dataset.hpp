#pragma once

#include <array>
#include <filesystem>

#include "kinship/embedding_store.hpp"
#include "kinship/pairs.hpp"
#include "kinship/synth.hpp"

namespace kinship {

/// A world directory as written by write_world, or real precomputed
/// embeddings laid out the same way.
struct Dataset {
  EmbeddingStore store{1};
  std::array<PairSet, 3> pairs;
  std::array<TriSet, 3> tri;

  const PairSet& pairs_of(Split s) const { return pairs[static_cast<std::size_t>(s)]; }
  const TriSet& tri_of(Split s) const { return tri[static_cast<std::size_t>(s)]; }
};

/// Requires embeddings.csv and pairs_{train,val,test}.csv; tri files are
/// optional and load as empty sets when missing.
Dataset load_dataset(const std::filesystem::path& dir);

/// Same content as a freshly loaded write_world output.
Dataset dataset_from_world(const SynthWorld& world);

}  // namespace kinship
