#include "kinship/pairs.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <ostream>
#include <set>

#include "kinship/errors.hpp"
#include "kinship/rng.hpp"
#include "text_io.hpp"

namespace kinship {
namespace {

std::optional<PairLabel> parse_label(std::string_view text) {
  if (text == "kin") return PairLabel::Kin;
  if (text == "nonkin") return PairLabel::NonKin;
  return std::nullopt;
}

void expect_header(std::istream& in, std::string_view expected) {
  std::string line;
  if (!detail::read_line(in, line)) throw ParseError(1, "missing header");
  if (line != expected) throw ParseError(1, "header must be " + std::string(expected));
}

}  // namespace

std::string_view label_code(PairLabel label) noexcept {
  return label == PairLabel::Kin ? "kin" : "nonkin";
}

void validate_pair(const KinPair& pair, const EmbeddingStore& store) {
  if (pair.id1 == pair.id2) throw ValidationError("pair uses '" + pair.id1 + "' twice");
  const auto& p1 = store.person(pair.id1);
  const auto& p2 = store.person(pair.id2);
  if (!genders_consistent(pair.relation, p1.gender, p2.gender)) {
    throw ValidationError("gender mismatch: " + pair.id1 + " (" + gender_code(p1.gender) +
                          "), " + pair.id2 + " (" + gender_code(p2.gender) +
                          ") cannot be " + std::string(relation_code(pair.relation)));
  }
  const bool same_family = p1.family_id == p2.family_id;
  if (pair.label == PairLabel::Kin && !same_family) {
    throw ValidationError("kin pair " + pair.id1 + "," + pair.id2 + " spans families");
  }
  if (pair.label == PairLabel::NonKin && same_family) {
    throw ValidationError("non-kin pair " + pair.id1 + "," + pair.id2 + " within one family");
  }
}

void validate_tri(const TriSample& sample, const EmbeddingStore& store) {
  const auto& father = store.person(sample.father_id);
  const auto& mother = store.person(sample.mother_id);
  const auto& child = store.person(sample.child_id);
  if (father.gender != Gender::Male) throw ValidationError("father '" + sample.father_id + "' is not male");
  if (mother.gender != Gender::Female) throw ValidationError("mother '" + sample.mother_id + "' is not female");
  if (child.gender != sample.child_gender) {
    throw ValidationError("child gender of '" + sample.child_id + "' disagrees with the store");
  }
  if (sample.child_id == sample.father_id || sample.child_id == sample.mother_id) {
    throw ValidationError("tri sample reuses a person as the child");
  }
}

PairSet parse_pairs(std::istream& in, const EmbeddingStore& store, std::string provenance) {
  expect_header(in, "id1,id2,relation,label");
  PairSet set{{}, std::move(provenance)};
  std::string line;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields");
    const auto relation = parse_relation(fields[2]);
    if (!relation) throw ParseError(line_no, "unknown relation '" + std::string(fields[2]) + "'");
    const auto label = parse_label(fields[3]);
    if (!label) throw ParseError(line_no, "label must be kin or nonkin");
    KinPair pair{std::string(fields[0]), std::string(fields[1]), *relation, *label};
    try {
      validate_pair(pair, store);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    set.pairs.push_back(std::move(pair));
  }
  return set;
}

PairSet load_pairs(const std::filesystem::path& path, const EmbeddingStore& store) {
  auto in = detail::open_input(path);
  return parse_pairs(in, store, path.filename().string());
}

void write_pairs(const PairSet& pairs, std::ostream& out) {
  out << "id1,id2,relation,label\n";
  for (const auto& p : pairs.pairs) {
    out << p.id1 << ',' << p.id2 << ',' << relation_code(p.relation) << ','
        << label_code(p.label) << '\n';
  }
}

void save_pairs(const PairSet& pairs, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  write_pairs(pairs, out);
}

TriSet parse_tri(std::istream& in, const EmbeddingStore& store, std::string provenance) {
  expect_header(in, "father_id,mother_id,child_id,label");
  TriSet set{{}, std::move(provenance)};
  std::string line;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields");
    const auto label = parse_label(fields[3]);
    if (!label) throw ParseError(line_no, "label must be kin or nonkin");
    TriSample sample{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                     Gender::Male, *label};
    try {
      sample.child_gender = store.person(sample.child_id).gender;
      validate_tri(sample, store);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    set.samples.push_back(std::move(sample));
  }
  return set;
}

TriSet load_tri(const std::filesystem::path& path, const EmbeddingStore& store) {
  auto in = detail::open_input(path);
  return parse_tri(in, store, path.filename().string());
}

void write_tri(const TriSet& tri, std::ostream& out) {
  out << "father_id,mother_id,child_id,label\n";
  for (const auto& t : tri.samples) {
    out << t.father_id << ',' << t.mother_id << ',' << t.child_id << ',' << label_code(t.label)
        << '\n';
  }
}

void save_tri(const TriSet& tri, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  write_tri(tri, out);
}

PairSet kin_only(const PairSet& pairs) {
  PairSet out{{}, pairs.provenance};
  std::copy_if(pairs.pairs.begin(), pairs.pairs.end(), std::back_inserter(out.pairs),
               [](const KinPair& p) { return p.label == PairLabel::Kin; });
  return out;
}

PairSet augment_symmetric(const PairSet& pairs) {
  PairSet out{pairs.pairs, pairs.provenance};
  for (const auto& p : pairs.pairs) {
    if (is_symmetric(p.relation)) out.pairs.push_back({p.id2, p.id1, p.relation, p.label});
  }
  return out;
}

std::uint64_t epoch_seed(std::uint64_t base_seed, std::uint64_t epoch) noexcept {
  return mix_seed(base_seed, epoch);
}

PairSet resample_nonkin(const PairSet& kin_pairs, const EmbeddingStore& store,
                        std::uint64_t base_seed, std::uint64_t epoch) {
  // Candidate pool per relation: distinct second-role persons, sorted so the
  // draw does not depend on pair order.
  std::array<std::vector<std::string>, kRelationCount> pools;
  for (const auto& p : kin_pairs.pairs) {
    if (p.label == PairLabel::Kin) pools[relation_index(p.relation)].push_back(p.id2);
  }
  for (auto& pool : pools) {
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }

  struct Candidate {
    const std::string* id;
    const PersonRef* person;
  };
  std::array<std::vector<Candidate>, kRelationCount> candidates;
  for (std::size_t r = 0; r < kRelationCount; ++r) {
    for (const auto& id : pools[r]) candidates[r].push_back({&id, &store.person(id)});
  }
  std::vector<std::string> any_pool;
  std::set<std::string> families;
  for (const auto& p : kin_pairs.pairs) {
    families.insert(store.person(p.id1).family_id);
    families.insert(store.person(p.id2).family_id);
  }
  for (const auto& f : families) {
    const auto members = store.family_members(f);
    any_pool.insert(any_pool.end(), members.begin(), members.end());
  }
  std::sort(any_pool.begin(), any_pool.end());
  any_pool.erase(std::unique(any_pool.begin(), any_pool.end()), any_pool.end());
  std::vector<Candidate> any_candidates;
  for (const auto& id : any_pool) any_candidates.push_back({&id, &store.person(id)});

  Rng rng(epoch_seed(base_seed, epoch));
  PairSet out{{}, "nonkin resample seed=" + std::to_string(base_seed) +
                      " epoch=" + std::to_string(epoch)};
  std::vector<const std::string*> eligible;
  for (const auto& p : kin_pairs.pairs) {
    if (p.label != PairLabel::Kin) continue;
    const auto& first = store.person(p.id1);
    const Gender wanted = second_role_gender(p.relation, first.gender);
    eligible.clear();
    const auto collect = [&](const std::vector<Candidate>& from) {
      for (const auto& c : from) {
        if (c.person->gender == wanted && c.person->family_id != first.family_id) {
          eligible.push_back(c.id);
        }
      }
    };
    collect(candidates[relation_index(p.relation)]);
    if (eligible.empty()) collect(any_candidates);
    if (eligible.empty()) {
      throw ValidationError("no non-kin replacement available for " +
                            std::string(relation_code(p.relation)) + " pair starting at '" +
                            p.id1 + "'");
    }
    out.pairs.push_back({p.id1, *eligible[rng.index(eligible.size())], p.relation,
                         PairLabel::NonKin});
  }
  return out;
}

}  // namespace kinship
