#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kinship/linalg.hpp"
#include "kinship/relation.hpp"

namespace kinship {

struct PersonRef {
  std::string person_id;
  std::string family_id;
  Gender gender = Gender::Male;

  bool operator==(const PersonRef&) const = default;
};

/// Persons with their face embeddings, indexed by id and by family.
/// Persons keep insertion order, which is also the canonical CSV order.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim);

  /// Throws ValidationError on duplicate id, empty ids, wrong length or
  /// non-finite entries.
  void add(PersonRef person, Vector embedding);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return persons_.size(); }
  bool contains(const std::string& person_id) const;

  /// Throws ValidationError for unknown ids.
  const PersonRef& person(const std::string& person_id) const;
  std::span<const double> embedding(const std::string& person_id) const;

  const PersonRef& person_at(std::size_t i) const { return persons_[i]; }
  std::span<const double> embedding_at(std::size_t i) const { return embeddings_[i]; }

  /// Empty when the family is unknown.
  std::span<const std::string> family_members(const std::string& family_id) const;
  const std::map<std::string, std::vector<std::string>>& families() const noexcept {
    return families_;
  }

 private:
  std::size_t position(const std::string& person_id) const;

  std::size_t dim_;
  std::vector<PersonRef> persons_;
  std::vector<Vector> embeddings_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<std::string>> families_;
};

/// Embedding CSV: `person_id,family_id,gender,f0,...,f{d-1}`.
EmbeddingStore parse_embeddings(std::istream& in);
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Canonical form: insertion order, shortest round-trip decimal for values.
void write_embeddings(const EmbeddingStore& store, std::ostream& out);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

/// f_c = [f1, f2]. Throws DimensionError on length mismatch.
Vector concat_features(std::span<const double> f1, std::span<const double> f2);

/// 1 - cos(f1, f2), in [0, 2]. Throws DimensionError on length mismatch and
/// ValidationError when either vector has zero norm.
double cosine_distance(std::span<const double> f1, std::span<const double> f2);

}  // namespace kinship
