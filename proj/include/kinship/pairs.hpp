#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "kinship/embedding_store.hpp"
#include "kinship/relation.hpp"

namespace kinship {

enum class PairLabel : std::uint8_t { Kin, NonKin };

std::string_view label_code(PairLabel label) noexcept;  // "kin" / "nonkin"

struct KinPair {
  std::string id1;
  std::string id2;
  KinshipRelation relation = KinshipRelation::BB;
  PairLabel label = PairLabel::Kin;

  bool operator==(const KinPair&) const = default;
};

struct TriSample {
  std::string father_id;
  std::string mother_id;
  std::string child_id;
  Gender child_gender = Gender::Male;
  PairLabel label = PairLabel::Kin;

  bool operator==(const TriSample&) const = default;
};

struct PairSet {
  std::vector<KinPair> pairs;
  std::string provenance;
};

struct TriSet {
  std::vector<TriSample> samples;
  std::string provenance;
};

/// Throws ValidationError when the pair breaks an invariant against `store`:
/// unknown id, id1 == id2, genders inconsistent with the relation roles,
/// a kin pair across families or a non-kin pair within one family.
void validate_pair(const KinPair& pair, const EmbeddingStore& store);
void validate_tri(const TriSample& sample, const EmbeddingStore& store);

/// Pairs CSV: `id1,id2,relation,label`. Every row is validated; the first
/// violation aborts with a ParseError carrying its line number.
PairSet parse_pairs(std::istream& in, const EmbeddingStore& store, std::string provenance = {});
PairSet load_pairs(const std::filesystem::path& path, const EmbeddingStore& store);
void write_pairs(const PairSet& pairs, std::ostream& out);
void save_pairs(const PairSet& pairs, const std::filesystem::path& path);

/// Tri CSV: `father_id,mother_id,child_id,label`; the child's gender comes
/// from the store.
TriSet parse_tri(std::istream& in, const EmbeddingStore& store, std::string provenance = {});
TriSet load_tri(const std::filesystem::path& path, const EmbeddingStore& store);
void write_tri(const TriSet& tri, std::ostream& out);
void save_tri(const TriSet& tri, const std::filesystem::path& path);

PairSet kin_only(const PairSet& pairs);

/// Appends (id2, id1) for every BB, SS and SIBS pair, after the originals.
PairSet augment_symmetric(const PairSet& pairs);

/// Seed used for non-kin resampling in `epoch`: mix_seed(base_seed, epoch).
std::uint64_t epoch_seed(std::uint64_t base_seed, std::uint64_t epoch) noexcept;

/// One non-kin pair per kin pair of `kin_pairs`, keeping id1 and the
/// relation. The replacement second person is drawn uniformly from the
/// distinct persons holding the second role of a kin pair with the same
/// relation, restricted to the gender that role requires and to families
/// other than id1's. When that pool is empty every member of the families
/// in `kin_pairs` is a candidate instead. Throws ValidationError when no
/// candidate exists.
PairSet resample_nonkin(const PairSet& kin_pairs, const EmbeddingStore& store,
                        std::uint64_t base_seed, std::uint64_t epoch);

}  // namespace kinship
