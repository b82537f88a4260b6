#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "generators.hpp"
#include "kinship/dataset.hpp"
#include "kinship/errors.hpp"
#include "kinship/evaluation.hpp"
#include "kinship/synth.hpp"

using namespace kinship;

namespace {

std::string serialize(const SynthWorld& w) {
  std::ostringstream out;
  write_embeddings(w.store, out);
  for (auto s : kAllSplits) {
    write_pairs(w.split(s).pairs, out);
    write_tri(w.split(s).tri, out);
  }
  write_pedigree(w.pedigree, out);
  return out.str();
}

const SynthWorld& default_world() {
  static const SynthWorld world = generate_world(SynthConfig{});
  return world;
}

}  // namespace

TEST_CASE("noise-free founders sit on the gender axis") {
  SynthConfig c;
  c.noise_weight = 0.0;
  const auto model = ExpressionModel::create(c);
  Rng rng(1);
  const auto m1 = make_person(Gender::Male, {}, {}, model, c, rng);
  const auto m2 = make_person(Gender::Male, {}, {}, model, c, rng);
  const auto f1 = make_person(Gender::Female, {}, {}, model, c, rng);
  CHECK(cosine_distance(m1.embedding, m2.embedding) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_distance(m1.embedding, f1.embedding) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("embeddings are unit norm") {
  const auto& w = default_world();
  for (const auto& rec : w.pedigree) {
    const auto v = w.store.embedding(rec.person_id);
    double sq = 0;
    for (double x : v) sq += x * x;
    CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-12);
  }
}

TEST_CASE("expression model geometry") {
  const SynthConfig c;
  const auto m = ExpressionModel::create(c);
  double gg = 0;
  for (double x : m.gender_axis) gg += x * x;
  CHECK(gg == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t j = 0; j < c.latent_dim; ++j) {
    double dg = 0;
    for (std::size_t i = 0; i < c.dim; ++i) dg += m.loading(i, j) * m.gender_axis[i];
    CHECK(std::abs(dg) < 1e-12);
    for (std::size_t k = 0; k < c.latent_dim; ++k) {
      double dk = 0;
      for (std::size_t i = 0; i < c.dim; ++i) dk += m.loading(i, j) * m.loading(i, k);
      CHECK(dk == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("config validation") {
  SynthConfig c;
  c.min_children = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.dim = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.noise_weight = -0.1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.heritability = c.gender_weight = c.noise_weight = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("one family with a son and a daughter enumerates every relation") {
  // Search seeds for a family whose two children differ in gender.
  for (std::uint64_t seed = 1; seed < 100; ++seed) {
    SynthConfig c;
    c.seed = seed;
    c.families = {1, 0, 0};
    c.max_children = 2;
    const auto w = generate_world(c);
    std::map<std::string, Gender> child_gender;
    for (const auto& r : w.pedigree) {
      if (r.role == PedigreeRole::Child) child_gender[r.person_id] = r.gender;
    }
    REQUIRE(child_gender.size() == 2);
    if (child_gender.begin()->second == std::next(child_gender.begin())->second) continue;

    std::map<KinshipRelation, int> through_children;
    std::map<KinshipRelation, int> all;
    for (const auto& p : w.split(Split::Train).pairs.pairs) {
      CHECK(p.label == PairLabel::Kin);
      ++all[p.relation];
      if (child_gender.contains(p.id2)) ++through_children[p.relation];
    }
    for (auto r : {KinshipRelation::SIBS, KinshipRelation::FS, KinshipRelation::FD, KinshipRelation::MS,
                   KinshipRelation::MD, KinshipRelation::GFGS, KinshipRelation::GFGD, KinshipRelation::GMGS,
                   KinshipRelation::GMGD}) {
      CHECK(through_children[r] == 1);
    }
    CHECK(through_children.size() == 9);
    // The grandparents also pair with the lineal parent, a son in family 0.
    CHECK(all[KinshipRelation::FS] == 2);
    CHECK(all[KinshipRelation::MS] == 2);
    CHECK(w.split(Split::Train).pairs.pairs.size() == 11);
    return;
  }
  FAIL("no seed produced a mixed-gender sibling pair");
}

TEST_CASE("generation is deterministic per seed") {
  const auto c = gen::small_world(11);
  CHECK(serialize(generate_world(c)) == serialize(generate_world(c)));
  auto other = c;
  other.seed = 12;
  CHECK(serialize(generate_world(c)) != serialize(generate_world(other)));
}

TEST_CASE("every kin pair agrees with the pedigree") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = generate_world(gen::small_world(seed, 8, 3, 3));
    std::map<std::string, const PedigreeRecord*> by_id;
    for (const auto& r : w.pedigree) by_id[r.person_id] = &r;
    auto parents_of = [&](const std::string& id) {
      const auto* r = by_id.at(id);
      return std::pair{r->father_id, r->mother_id};
    };
    for (auto s : kAllSplits) {
      for (const auto& p : w.split(s).pairs.pairs) {
        if (p.label != PairLabel::Kin) continue;
        const auto [f1, m1] = parents_of(p.id1);
        const auto [f2, m2] = parents_of(p.id2);
        const auto r = p.relation;
        if (r == KinshipRelation::BB || r == KinshipRelation::SS || r == KinshipRelation::SIBS) {
          CHECK(!f1.empty());
          CHECK(f1 == f2);
          CHECK(m1 == m2);
        } else if (r == KinshipRelation::FD || r == KinshipRelation::FS || r == KinshipRelation::MD ||
                   r == KinshipRelation::MS) {
          CHECK((f2 == p.id1 || m2 == p.id1));
        } else {
          const bool via_father = !f2.empty() && (parents_of(f2).first == p.id1 || parents_of(f2).second == p.id1);
          const bool via_mother = !m2.empty() && (parents_of(m2).first == p.id1 || parents_of(m2).second == p.id1);
          CHECK((via_father || via_mother));
        }
        CHECK(genders_consistent(r, by_id.at(p.id1)->gender, by_id.at(p.id2)->gender));
      }
    }
  }
}

TEST_CASE("written world loads back with the same content") {
  const auto w = generate_world(gen::small_world(4));
  const auto dir = std::filesystem::temp_directory_path() / "kinship_synth_roundtrip";
  std::filesystem::remove_all(dir);
  const auto paths = write_world(w, dir);
  CHECK(paths.size() == 8);
  const auto loaded = load_dataset(dir);
  const auto direct = dataset_from_world(w);
  for (auto s : kAllSplits) {
    CHECK(loaded.pairs_of(s).pairs == direct.pairs_of(s).pairs);
    CHECK(loaded.tri_of(s).samples == direct.tri_of(s).samples);
  }
  std::ostringstream a, b;
  write_embeddings(loaded.store, a);
  write_embeddings(direct.store, b);
  CHECK(a.str() == b.str());
  std::filesystem::remove_all(dir);
}

TEST_CASE("default world kin counts (frozen fixture)") {
  const auto& w = default_world();
  std::map<KinshipRelation, std::size_t> counts;
  for (const auto& p : w.split(Split::Train).pairs.pairs) {
    CHECK(p.label == PairLabel::Kin);
    ++counts[p.relation];
  }
  using R = KinshipRelation;
  const std::map<R, std::size_t> expected = {{R::BB, 138},   {R::SIBS, 319}, {R::SS, 159},  {R::FD, 543},
                                             {R::FS, 515},   {R::MD, 543},   {R::MS, 515},  {R::GFGD, 393},
                                             {R::GFGS, 365}, {R::GMGD, 393}, {R::GMGS, 365}};
  CHECK(counts == expected);
  for (auto r : {R::FS, R::FD, R::MS, R::MD}) CHECK(counts[r] >= 500);
  CHECK(w.store.size() == 2731);
}

TEST_CASE("validation and test splits hold one non-kin per kin pair") {
  const auto& w = default_world();
  for (auto s : {Split::Val, Split::Test}) {
    std::size_t kin = 0, nonkin = 0;
    for (const auto& p : w.split(s).pairs.pairs) (p.label == PairLabel::Kin ? kin : nonkin)++;
    CHECK(kin == nonkin);
    std::size_t tk = 0, tn = 0;
    for (const auto& t : w.split(s).tri.samples) (t.label == PairLabel::Kin ? tk : tn)++;
    CHECK(tk == tn);
  }
}

TEST_CASE("unrelated same-gender faces are closer than opposite-gender faces") {
  const auto& w = default_world();
  std::vector<std::string> ids;
  for (const auto& r : w.pedigree) ids.push_back(r.person_id);
  Rng rng(2024);
  double same = 0, opposite = 0;
  std::size_t n_same = 0, n_opposite = 0;
  while (n_same < 1000 || n_opposite < 1000) {
    const auto& a = ids[rng.index(ids.size())];
    const auto& b = ids[rng.index(ids.size())];
    const auto& pa = w.store.person(a);
    const auto& pb = w.store.person(b);
    if (pa.family_id == pb.family_id) continue;
    const double d = cosine_distance(w.store.embedding(a), w.store.embedding(b));
    if (pa.gender == pb.gender) {
      same += d;
      ++n_same;
    } else {
      opposite += d;
      ++n_opposite;
    }
  }
  CHECK(same / n_same < opposite / n_opposite);
}

TEST_CASE("cosine kin/non-kin overlap is larger for opposite-gender relations") {
  const auto& w = default_world();
  const auto scored = score_pairs(nullptr, w.store, w.split(Split::Test).pairs, Scorer::CosineBaseline);
  const auto opp = select_relations(scored, kOppositeGenderRelations);
  const auto same = select_relations(scored, kSameGenderRelations);
  CHECK(threshold_overlap(opp, Direction::LowerIsKin) > threshold_overlap(same, Direction::LowerIsKin));
  CHECK(histogram_overlap(histogram(opp, kDefaultBins, 0.0, 2.0)) >
        histogram_overlap(histogram(same, kDefaultBins, 0.0, 2.0)));
}
