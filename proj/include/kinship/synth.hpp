#pragma once

// Synthetic embedding worlds: three-generation families whose face
// embeddings carry a heritable identity, a shared family ancestry and a
// strong gender axis. Identity is expressed differently in male and female
// faces, which is what makes plain cosine distance unreliable across genders.
//
// Per person (s = +1 male, -1 female; xi, c ~ N(0, I/latent_dim)):
//   founder latent     l = w_n * (sqrt(a) * c_family + sqrt(1 - a) * xi)
//   descendant latent  l = w_h * blend(l_father, l_mother) + w_n * r * xi
//   embedding          v = normalize(w_g * s * g + L * E_s * l)
// where g is the unit gender axis, L an orthonormal loading (dim x latent_dim,
// orthogonal to g), E_male = I and E_female a block rotation whose cosine is
// `cross_gender_expression`.
//
// The lineal parent is male in even-indexed families, female otherwise.
//
// Seeds: the expression model uses mix_seed(seed, 1); family i of split s
// uses mix_seed(seed, ((s + 1) << 32) | i); split-level draws use
// mix_seed(seed, 16 + s) and mix_seed(seed, 32 + s).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kinship/embedding_store.hpp"
#include "kinship/linalg.hpp"
#include "kinship/pairs.hpp"
#include "kinship/rng.hpp"

namespace kinship {

enum class ChildBlend : std::uint8_t { Mean, RandomConvex };

enum class Split : std::uint8_t { Train, Val, Test };
inline constexpr std::array<Split, 3> kAllSplits = {Split::Train, Split::Val, Split::Test};
std::string_view split_name(Split s) noexcept;

struct SynthConfig {
  std::size_t dim = 64;
  std::size_t latent_dim = 8;
  std::array<std::size_t, 3> families = {300, 60, 60};  // train, val, test
  std::size_t min_children = 2;
  std::size_t max_children = 3;
  double heritability = 1.0;            // w_h
  double gender_weight = 0.1;           // w_g
  double noise_weight = 0.4;            // w_n
  double innovation_ratio = 0.2;        // r
  double ancestry_share = 0.85;         // a
  double cross_gender_expression = 0.0;
  ChildBlend blend = ChildBlend::Mean;
  std::uint64_t seed = 1;

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

/// Fixed per-world geometry: gender axis, latent loading and the female
/// expression rotation.
struct ExpressionModel {
  Vector gender_axis;  // unit, length dim
  Matrix loading;      // dim x latent_dim, orthonormal columns orthogonal to gender_axis
  double cross_cos = 0.0;

  static ExpressionModel create(const SynthConfig& config);

  /// L * E_s * latent.
  Vector express(std::span<const double> latent, Gender gender) const;
};

struct SynthPerson {
  Vector latent;
  Vector embedding;
};

/// `parent_mean` empty marks a founder; `ancestry` is only read for founders
/// and may be empty (no shared ancestry).
SynthPerson make_person(Gender gender, std::span<const double> parent_mean,
                        std::span<const double> ancestry, const ExpressionModel& model,
                        const SynthConfig& config, Rng& rng);

enum class PedigreeRole : std::uint8_t { Grandfather, Grandmother, Parent, Spouse, Child };
std::string_view role_name(PedigreeRole role) noexcept;

struct PedigreeRecord {
  std::string person_id;
  std::string family_id;
  Gender gender = Gender::Male;
  PedigreeRole role = PedigreeRole::Child;
  std::string father_id;  // empty for founders
  std::string mother_id;
  Split split = Split::Train;
};

struct SplitData {
  PairSet pairs;  // train: kin only; val/test: kin followed by one fixed non-kin per kin
  TriSet tri;     // kin samples followed by one non-kin per kin
};

struct SynthWorld {
  EmbeddingStore store{1};
  std::array<SplitData, 3> splits;
  std::vector<PedigreeRecord> pedigree;

  const SplitData& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }
};

SynthWorld generate_world(const SynthConfig& config);

/// embeddings.csv, pairs_{train,val,test}.csv, tri_{train,val,test}.csv,
/// pedigree.csv. Returns the written paths in that order.
std::vector<std::filesystem::path> write_world(const SynthWorld& world,
                                               const std::filesystem::path& dir);

void write_pedigree(const std::vector<PedigreeRecord>& pedigree, std::ostream& out);

}  // namespace kinship
