#include "kinship/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "kinship/errors.hpp"
#include "text_io.hpp"

namespace kinship {

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

void EmbeddingStore::add(PersonRef person, Vector embedding) {
  if (person.person_id.empty()) throw ValidationError("empty person_id");
  if (person.family_id.empty()) {
    throw ValidationError("empty family_id for person '" + person.person_id + "'");
  }
  if (index_.contains(person.person_id)) {
    throw ValidationError("duplicate person_id '" + person.person_id + "'");
  }
  if (embedding.size() != dim_) {
    throw ValidationError("person '" + person.person_id + "' has " +
                          std::to_string(embedding.size()) + " values, expected " +
                          std::to_string(dim_));
  }
  for (double v : embedding) {
    if (!std::isfinite(v)) {
      throw ValidationError("non-finite embedding value for '" + person.person_id + "'");
    }
  }
  index_.emplace(person.person_id, persons_.size());
  families_[person.family_id].push_back(person.person_id);
  persons_.push_back(std::move(person));
  embeddings_.push_back(std::move(embedding));
}

bool EmbeddingStore::contains(const std::string& person_id) const {
  return index_.contains(person_id);
}

std::size_t EmbeddingStore::position(const std::string& person_id) const {
  const auto it = index_.find(person_id);
  if (it == index_.end()) throw ValidationError("unknown person_id '" + person_id + "'");
  return it->second;
}

const PersonRef& EmbeddingStore::person(const std::string& person_id) const {
  return persons_[position(person_id)];
}

std::span<const double> EmbeddingStore::embedding(const std::string& person_id) const {
  return embeddings_[position(person_id)];
}

std::span<const std::string> EmbeddingStore::family_members(const std::string& family_id) const {
  const auto it = families_.find(family_id);
  if (it == families_.end()) return {};
  return it->second;
}

EmbeddingStore parse_embeddings(std::istream& in) {
  std::string line;
  if (!detail::read_line(in, line)) throw ParseError(1, "missing header");
  const auto header = detail::split_fields(line);
  if (header.size() < 4 || header[0] != "person_id" || header[1] != "family_id" ||
      header[2] != "gender") {
    throw ParseError(1, "header must be person_id,family_id,gender,f0,...");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[3 + j] != "f" + std::to_string(j)) {
      throw ParseError(1, "expected column f" + std::to_string(j) + ", got '" +
                              std::string(header[3 + j]) + "'");
    }
  }

  EmbeddingStore store(dim);
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    const auto gender = parse_gender(fields[2]);
    if (!gender) throw ParseError(line_no, "gender must be M or F");
    Vector values(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const auto v = detail::parse_double(fields[3 + j]);
      if (!v) {
        throw ParseError(line_no, "bad value '" + std::string(fields[3 + j]) + "' in column f" +
                                      std::to_string(j));
      }
      values[j] = *v;
    }
    try {
      store.add({std::string(fields[0]), std::string(fields[1]), *gender}, std::move(values));
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_embeddings(in);
}

void write_embeddings(const EmbeddingStore& store, std::ostream& out) {
  out << "person_id,family_id,gender";
  for (std::size_t j = 0; j < store.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store.person_at(i);
    out << p.person_id << ',' << p.family_id << ',' << gender_code(p.gender);
    for (double v : store.embedding_at(i)) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  write_embeddings(store, out);
}

Vector concat_features(std::span<const double> f1, std::span<const double> f2) {
  if (f1.size() != f2.size()) {
    throw DimensionError("cannot concatenate embeddings of length " + std::to_string(f1.size()) +
                         " and " + std::to_string(f2.size()));
  }
  Vector out;
  out.reserve(f1.size() * 2);
  out.insert(out.end(), f1.begin(), f1.end());
  out.insert(out.end(), f2.begin(), f2.end());
  return out;
}

double cosine_distance(std::span<const double> f1, std::span<const double> f2) {
  if (f1.size() != f2.size()) throw DimensionError("cosine distance of unequal lengths");
  const double sq1 = dot(f1, f1);
  const double sq2 = dot(f2, f2);
  if (sq1 == 0.0 || sq2 == 0.0) throw ValidationError("cosine distance of a zero vector");
  // sqrt(sq1 * sq2) rather than norm(f1) * norm(f2): for f1 == f2 the
  // quotient is then exactly 1.
  const double cosine = std::clamp(dot(f1, f2) / std::sqrt(sq1 * sq2), -1.0, 1.0);
  return 1.0 - cosine;
}

}  // namespace kinship
