#include "kinship/synth.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "kinship/errors.hpp"
#include "text_io.hpp"

namespace kinship {
namespace {

constexpr std::uint64_t kExpressionStream = 1;
constexpr std::uint64_t kPairStreamBase = 16;
constexpr std::uint64_t kTriStreamBase = 32;

Vector gaussian(Rng& rng, std::size_t n, double scale) {
  Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Removes the components of v along each (unit) basis vector, twice for
// numerical safety, and normalizes.
void orthonormalize(Vector& v, const std::vector<Vector>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      const double c = dot(v, b);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
    }
  }
  const double n = norm(v);
  for (double& x : v) x /= n;
}

std::string padded(std::size_t value, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(total).size());
  std::string s = std::to_string(value);
  return std::string(width - std::min(width, s.size()), '0') + s;
}

constexpr std::string_view split_prefix(Split s) {
  switch (s) {
    case Split::Train:
      return "tr";
    case Split::Val:
      return "va";
    case Split::Test:
      return "te";
  }
  return "tr";
}

struct FamilyBuild {
  std::vector<KinPair> kin;
  std::vector<TriSample> tri;
};

}  // namespace

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

std::string_view role_name(PedigreeRole role) noexcept {
  switch (role) {
    case PedigreeRole::Grandfather:
      return "grandfather";
    case PedigreeRole::Grandmother:
      return "grandmother";
    case PedigreeRole::Parent:
      return "parent";
    case PedigreeRole::Spouse:
      return "spouse";
    case PedigreeRole::Child:
      return "child";
  }
  return "child";
}

void SynthConfig::validate() const {
  if (dim < 2) throw ValidationError("synth dim must be at least 2");
  if (latent_dim < 1) throw ValidationError("synth latent_dim must be at least 1");
  if (latent_dim + 1 > dim) throw ValidationError("synth latent_dim must be below dim");
  if (min_children < 2) throw ValidationError("families need at least 2 children");
  if (max_children < min_children) throw ValidationError("max_children below min_children");
  for (double w : {heritability, gender_weight, noise_weight, innovation_ratio}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("synth weights must be finite and >= 0");
  }
  if (!(heritability + gender_weight + noise_weight > 0.0)) {
    throw ValidationError("synth weights must not all be zero");
  }
  if (!(ancestry_share >= 0.0 && ancestry_share <= 1.0)) {
    throw ValidationError("ancestry_share must lie in [0, 1]");
  }
  if (!(cross_gender_expression >= -1.0 && cross_gender_expression <= 1.0)) {
    throw ValidationError("cross_gender_expression must lie in [-1, 1]");
  }
}

ExpressionModel ExpressionModel::create(const SynthConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, kExpressionStream));
  std::vector<Vector> basis;
  for (std::size_t j = 0; j <= config.latent_dim; ++j) {
    Vector v = gaussian(rng, config.dim, 1.0);
    orthonormalize(v, basis);
    basis.push_back(std::move(v));
  }
  ExpressionModel model;
  model.gender_axis = basis[0];
  model.loading = Matrix(config.dim, config.latent_dim);
  for (std::size_t j = 0; j < config.latent_dim; ++j) {
    for (std::size_t i = 0; i < config.dim; ++i) model.loading(i, j) = basis[j + 1][i];
  }
  model.cross_cos = config.cross_gender_expression;
  return model;
}

Vector ExpressionModel::express(std::span<const double> latent, Gender gender) const {
  Vector expressed(latent.begin(), latent.end());
  if (gender == Gender::Female) {
    const double c = cross_cos;
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (std::size_t i = 0; i + 1 < expressed.size(); i += 2) {
      const double a = latent[i];
      const double b = latent[i + 1];
      expressed[i] = c * a - s * b;
      expressed[i + 1] = s * a + c * b;
    }
  }
  Vector out(loading.rows, 0.0);
  for (std::size_t i = 0; i < loading.rows; ++i) out[i] = dot(loading.row(i), expressed);
  return out;
}

SynthPerson make_person(Gender gender, std::span<const double> parent_mean,
                        std::span<const double> ancestry, const ExpressionModel& model,
                        const SynthConfig& config, Rng& rng) {
  const std::size_t k = config.latent_dim;
  const double unit = 1.0 / std::sqrt(static_cast<double>(k));
  SynthPerson person;
  person.latent.assign(k, 0.0);
  if (parent_mean.empty()) {
    const double own = std::sqrt(1.0 - (ancestry.empty() ? 0.0 : config.ancestry_share));
    const double shared = ancestry.empty() ? 0.0 : std::sqrt(config.ancestry_share);
    for (std::size_t j = 0; j < k; ++j) {
      const double xi = unit * rng.normal();
      const double c = ancestry.empty() ? 0.0 : ancestry[j];
      person.latent[j] = config.noise_weight * (shared * c + own * xi);
    }
  } else {
    const double innovation = config.noise_weight * config.innovation_ratio;
    for (std::size_t j = 0; j < k; ++j) {
      person.latent[j] = config.heritability * parent_mean[j] + innovation * unit * rng.normal();
    }
  }

  const double s = gender == Gender::Male ? 1.0 : -1.0;
  person.embedding = model.express(person.latent, gender);
  for (std::size_t i = 0; i < person.embedding.size(); ++i) {
    person.embedding[i] += config.gender_weight * s * model.gender_axis[i];
  }
  const double n = norm(person.embedding);
  if (!(n > 0.0)) throw NumericalError("synthetic embedding has zero norm");
  for (double& x : person.embedding) x /= n;
  return person;
}

SynthWorld generate_world(const SynthConfig& config) {
  config.validate();
  const ExpressionModel model = ExpressionModel::create(config);
  const std::size_t k = config.latent_dim;
  const double unit = 1.0 / std::sqrt(static_cast<double>(k));

  SynthWorld world;
  world.store = EmbeddingStore(config.dim);
  std::array<FamilyBuild, 3> builds;

  for (Split split : kAllSplits) {
    const auto si = static_cast<std::size_t>(split);
    const std::size_t n_families = config.families[si];
    auto& build = builds[si];
    for (std::size_t f = 0; f < n_families; ++f) {
      Rng rng(mix_seed(config.seed, ((static_cast<std::uint64_t>(si) + 1) << 32) | f));
      const std::string family = std::string(split_prefix(split)) + padded(f + 1, n_families);
      const Vector ancestry = gaussian(rng, k, unit);

      struct Member {
        std::string id;
        Gender gender;
        Vector latent;
      };
      auto add = [&](std::string suffix, Gender gender, const Member* father,
                     const Member* mother, PedigreeRole role) {
        Vector mean;
        if (father != nullptr) {
          double w = 0.5;
          if (config.blend == ChildBlend::RandomConvex) w = rng.uniform();
          mean.resize(k);
          for (std::size_t j = 0; j < k; ++j) {
            mean[j] = w * father->latent[j] + (1.0 - w) * mother->latent[j];
          }
        }
        auto person = make_person(gender, mean, ancestry, model, config, rng);
        Member m{family + "_" + suffix, gender, std::move(person.latent)};
        world.store.add({m.id, family, gender}, std::move(person.embedding));
        world.pedigree.push_back({m.id, family, gender, role, father ? father->id : "",
                                  mother ? mother->id : "", split});
        return m;
      };

      const Member gf = add("gf", Gender::Male, nullptr, nullptr, PedigreeRole::Grandfather);
      const Member gm = add("gm", Gender::Female, nullptr, nullptr, PedigreeRole::Grandmother);
      // Alternating keeps the parent-child relations balanced across the split.
      const Gender parent_gender = f % 2 == 0 ? Gender::Male : Gender::Female;
      const Member parent = add("p", parent_gender, &gf, &gm, PedigreeRole::Parent);
      const Member spouse = add("s", opposite(parent_gender), nullptr, nullptr, PedigreeRole::Spouse);
      const Member& father = parent_gender == Gender::Male ? parent : spouse;
      const Member& mother = parent_gender == Gender::Male ? spouse : parent;

      const std::size_t n_children =
          config.min_children + rng.index(config.max_children - config.min_children + 1);
      std::vector<Member> children;
      for (std::size_t c = 0; c < n_children; ++c) {
        const Gender g = rng.bernoulli(0.5) ? Gender::Male : Gender::Female;
        children.push_back(add("c" + std::to_string(c + 1), g, &father, &mother, PedigreeRole::Child));
      }

      for (std::size_t i = 0; i < children.size(); ++i) {
        for (std::size_t j = i + 1; j < children.size(); ++j) {
          build.kin.push_back({children[i].id, children[j].id,
                               sibling_relation(children[i].gender, children[j].gender),
                               PairLabel::Kin});
        }
      }
      for (const auto& c : children) {
        build.kin.push_back({father.id, c.id, parent_child_relation(Gender::Male, c.gender), PairLabel::Kin});
        build.kin.push_back({mother.id, c.id, parent_child_relation(Gender::Female, c.gender), PairLabel::Kin});
      }
      build.kin.push_back({gf.id, parent.id, parent_child_relation(Gender::Male, parent.gender), PairLabel::Kin});
      build.kin.push_back({gm.id, parent.id, parent_child_relation(Gender::Female, parent.gender), PairLabel::Kin});
      for (const auto& c : children) {
        build.kin.push_back({gf.id, c.id, grandparent_relation(Gender::Male, c.gender), PairLabel::Kin});
        build.kin.push_back({gm.id, c.id, grandparent_relation(Gender::Female, c.gender), PairLabel::Kin});
      }

      build.tri.push_back({gf.id, gm.id, parent.id, parent.gender, PairLabel::Kin});
      for (const auto& c : children) {
        build.tri.push_back({father.id, mother.id, c.id, c.gender, PairLabel::Kin});
      }
    }
  }

  for (Split split : kAllSplits) {
    const auto si = static_cast<std::size_t>(split);
    auto& build = builds[si];
    auto& out = world.splits[si];
    const std::string name(split_name(split));

    out.pairs.provenance = "pairs_" + name;
    out.pairs.pairs = build.kin;
    if (split != Split::Train && !build.kin.empty()) {
      const PairSet kin{build.kin, {}};
      const auto nonkin =
          resample_nonkin(kin, world.store, mix_seed(config.seed, kPairStreamBase + si), 0);
      out.pairs.pairs.insert(out.pairs.pairs.end(), nonkin.pairs.begin(), nonkin.pairs.end());
    }

    // Non-kin tri samples keep the parents and swap in a same-gender child
    // from another family of the split.
    out.tri.provenance = "tri_" + name;
    out.tri.samples = build.tri;
    Rng rng(mix_seed(config.seed, kTriStreamBase + si));
    std::vector<const TriSample*> eligible;
    for (const auto& t : build.tri) {
      const auto& family = world.store.person(t.child_id).family_id;
      eligible.clear();
      for (const auto& other : build.tri) {
        if (other.child_gender == t.child_gender &&
            world.store.person(other.child_id).family_id != family) {
          eligible.push_back(&other);
        }
      }
      if (eligible.empty()) continue;
      const auto* pick = eligible[rng.index(eligible.size())];
      out.tri.samples.push_back({t.father_id, t.mother_id, pick->child_id, t.child_gender,
                                 PairLabel::NonKin});
    }
  }
  return world;
}

void write_pedigree(const std::vector<PedigreeRecord>& pedigree, std::ostream& out) {
  out << "person_id,family_id,gender,role,father_id,mother_id,split\n";
  for (const auto& p : pedigree) {
    out << p.person_id << ',' << p.family_id << ',' << gender_code(p.gender) << ','
        << role_name(p.role) << ',' << p.father_id << ',' << p.mother_id << ','
        << split_name(p.split) << '\n';
  }
}

std::vector<std::filesystem::path> write_world(const SynthWorld& world,
                                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  written.push_back(dir / "embeddings.csv");
  save_embeddings(world.store, written.back());
  for (Split s : kAllSplits) {
    written.push_back(dir / ("pairs_" + std::string(split_name(s)) + ".csv"));
    save_pairs(world.split(s).pairs, written.back());
  }
  for (Split s : kAllSplits) {
    written.push_back(dir / ("tri_" + std::string(split_name(s)) + ".csv"));
    save_tri(world.split(s).tri, written.back());
  }
  written.push_back(dir / "pedigree.csv");
  auto out = detail::open_output(written.back());
  write_pedigree(world.pedigree, out);
  return written;
}

}  // namespace kinship
