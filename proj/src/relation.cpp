#include "kinship/relation.hpp"

#include <stdexcept>
#include <string>

namespace kinship {
namespace {

constexpr std::array<std::string_view, kRelationCount> kCodes = {
    "BB", "SIBS", "SS", "FD", "FS", "MD", "MS", "GFGD", "GFGS", "GMGD", "GMGS",
};

}  // namespace

KinshipRelation relation_from_index(std::size_t index) {
  if (index >= kRelationCount) {
    throw std::out_of_range("relation index " + std::to_string(index) +
                            " outside 0.." + std::to_string(kRelationCount - 1));
  }
  return kAllRelations[index];
}

std::string_view relation_code(KinshipRelation r) noexcept {
  return kCodes[relation_index(r)];
}

std::optional<KinshipRelation> parse_relation(std::string_view code) noexcept {
  for (std::size_t i = 0; i < kRelationCount; ++i) {
    if (kCodes[i] == code) return kAllRelations[i];
  }
  return std::nullopt;
}

std::array<double, kRelationCount> one_hot(KinshipRelation r) noexcept {
  std::array<double, kRelationCount> v{};
  v[relation_index(r)] = 1.0;
  return v;
}

char gender_code(Gender g) noexcept { return g == Gender::Male ? 'M' : 'F'; }

std::optional<Gender> parse_gender(std::string_view code) noexcept {
  if (code == "M") return Gender::Male;
  if (code == "F") return Gender::Female;
  return std::nullopt;
}

std::optional<Gender> first_role_gender(KinshipRelation r) noexcept {
  using enum KinshipRelation;
  switch (r) {
    case BB:
    case FD:
    case FS:
    case GFGD:
    case GFGS:
      return Gender::Male;
    case SS:
    case MD:
    case MS:
    case GMGD:
    case GMGS:
      return Gender::Female;
    case SIBS:
      return std::nullopt;
  }
  return std::nullopt;
}

Gender second_role_gender(KinshipRelation r, Gender first) noexcept {
  using enum KinshipRelation;
  switch (r) {
    case BB:
    case FS:
    case MS:
    case GFGS:
    case GMGS:
      return Gender::Male;
    case SS:
    case FD:
    case MD:
    case GFGD:
    case GMGD:
      return Gender::Female;
    case SIBS:
      return opposite(first);
  }
  return opposite(first);
}

bool genders_consistent(KinshipRelation r, Gender first, Gender second) noexcept {
  if (const auto g1 = first_role_gender(r); g1 && *g1 != first) return false;
  return second_role_gender(r, first) == second;
}

KinshipRelation sibling_relation(Gender a, Gender b) noexcept {
  if (a != b) return KinshipRelation::SIBS;
  return a == Gender::Male ? KinshipRelation::BB : KinshipRelation::SS;
}

KinshipRelation parent_child_relation(Gender parent, Gender child) noexcept {
  using enum KinshipRelation;
  if (parent == Gender::Male) return child == Gender::Male ? FS : FD;
  return child == Gender::Male ? MS : MD;
}

KinshipRelation grandparent_relation(Gender grandparent, Gender grandchild) noexcept {
  using enum KinshipRelation;
  if (grandparent == Gender::Male) return grandchild == Gender::Male ? GFGS : GFGD;
  return grandchild == Gender::Male ? GMGS : GMGD;
}

}  // namespace kinship
