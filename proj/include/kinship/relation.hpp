#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace kinship {

enum class Gender : std::uint8_t { Male, Female };

/// The eleven consanguine relations. Enumerator order is the canonical
/// index order (siblings, parent-child, grandparent-grandchild) and is part
/// of every file format; do not reorder.
enum class KinshipRelation : std::uint8_t {
  BB,
  SIBS,
  SS,
  FD,
  FS,
  MD,
  MS,
  GFGD,
  GFGS,
  GMGD,
  GMGS,
};

inline constexpr std::size_t kRelationCount = 11;

inline constexpr std::array<KinshipRelation, kRelationCount> kAllRelations = {
    KinshipRelation::BB,   KinshipRelation::SIBS, KinshipRelation::SS,
    KinshipRelation::FD,   KinshipRelation::FS,   KinshipRelation::MD,
    KinshipRelation::MS,   KinshipRelation::GFGD, KinshipRelation::GFGS,
    KinshipRelation::GMGD, KinshipRelation::GMGS,
};

constexpr std::size_t relation_index(KinshipRelation r) noexcept {
  return static_cast<std::size_t>(r);
}

/// Throws std::out_of_range for index >= kRelationCount.
KinshipRelation relation_from_index(std::size_t index);

std::string_view relation_code(KinshipRelation r) noexcept;
std::optional<KinshipRelation> parse_relation(std::string_view code) noexcept;

std::array<double, kRelationCount> one_hot(KinshipRelation r) noexcept;

/// True for BB, SS and SIBS: swapping the two persons yields a valid sample.
constexpr bool is_symmetric(KinshipRelation r) noexcept {
  return r == KinshipRelation::BB || r == KinshipRelation::SS ||
         r == KinshipRelation::SIBS;
}

constexpr Gender opposite(Gender g) noexcept {
  return g == Gender::Male ? Gender::Female : Gender::Male;
}

char gender_code(Gender g) noexcept;
std::optional<Gender> parse_gender(std::string_view code) noexcept;

/// Gender required of the first role; empty for SIBS (either orientation).
std::optional<Gender> first_role_gender(KinshipRelation r) noexcept;

/// Gender required of the second person given the first person's gender.
/// For SIBS this is the opposite of `first`.
Gender second_role_gender(KinshipRelation r, Gender first) noexcept;

bool genders_consistent(KinshipRelation r, Gender first, Gender second) noexcept;

KinshipRelation sibling_relation(Gender a, Gender b) noexcept;
KinshipRelation parent_child_relation(Gender parent, Gender child) noexcept;
KinshipRelation grandparent_relation(Gender grandparent, Gender grandchild) noexcept;

}  // namespace kinship
