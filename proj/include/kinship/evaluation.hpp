#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kinship/comparator.hpp"
#include "kinship/embedding_store.hpp"
#include "kinship/pairs.hpp"
#include "kinship/training.hpp"

namespace kinship {

enum class Scorer : std::uint8_t { Comparator, CosineBaseline };
enum class Direction : std::uint8_t { HigherIsKin, LowerIsKin };
enum class Objective : std::uint8_t { MacroAccuracy, MicroAccuracy };

/// Comparator scores are probabilities (higher = kin); cosine distances
/// are lower for kin.
constexpr Direction default_direction(Scorer s) noexcept {
  return s == Scorer::Comparator ? Direction::HigherIsKin : Direction::LowerIsKin;
}

struct ScoredPair {
  KinPair pair;
  double score = 0.0;
};

/// `params` may be null for the cosine baseline.
std::vector<ScoredPair> score_pairs(const ComparatorParams* params, const EmbeddingStore& store,
                                    const PairSet& pairs, Scorer scorer);

/// Scores pairs as if their relation were unknown.
std::vector<ScoredPair> score_pairs_unknown(const ComparatorParams& params,
                                            const EmbeddingStore& store, const PairSet& pairs,
                                            PoolMode mode);

constexpr bool predicted_kin(double score, double threshold, Direction d) noexcept {
  return d == Direction::HigherIsKin ? score >= threshold : score <= threshold;
}

struct Calibration {
  double threshold = 0.0;
  double objective = 0.0;
};

/// Exhaustive over the midpoints of consecutive distinct scores plus one
/// sentinel beyond each end (the adjacent representable doubles). Ties go
/// to the smallest threshold. Throws ValidationError unless both classes
/// are present.
Calibration calibrate_threshold(std::span<const ScoredPair> scored, Objective objective,
                                Direction direction);

/// Single group: plain accuracy.
Calibration calibrate_scores(std::span<const double> scores, std::span<const PairLabel> labels,
                             Direction direction);

/// One threshold per relation instead of a shared one. Entries
/// stay empty for relations without both classes.
std::array<std::optional<Calibration>, kRelationCount> calibrate_per_relation(
    std::span<const ScoredPair> scored, Direction direction);

/// Macro (default) or micro accuracy of a fixed threshold.
double objective_at(std::span<const ScoredPair> scored, double threshold, Direction direction,
                    Objective objective = Objective::MacroAccuracy);

struct RelationStats {
  bool present = false;
  std::size_t count = 0;
  std::size_t kin = 0;
  std::size_t nonkin = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::optional<double> auc;
};

struct EvaluationReport {
  std::array<RelationStats, kRelationCount> relations;
  double macro = 0.0;  // mean over present relations
  double micro = 0.0;
  std::size_t total = 0;
  double threshold = 0.0;
  Direction direction = Direction::HigherIsKin;
  std::vector<KinshipRelation> missing;
};

EvaluationReport accuracy_report(std::span<const ScoredPair> scored, double threshold,
                                 Direction direction, bool with_auc = false);

/// `relation,accuracy,count` in canonical relation order, then an
/// `average` row with the macro accuracy. Missing relations get an empty
/// accuracy and count 0.
void write_report(const EvaluationReport& report, std::ostream& out);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t kin = 0;
  std::size_t nonkin = 0;
};

struct HistogramTable {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<HistogramBin> bins;
  std::size_t kin_total = 0;
  std::size_t nonkin_total = 0;
};

inline constexpr std::size_t kDefaultBins = 50;

/// Bin edges lo + (hi - lo) * i / n_bins. Scores outside the range land in
/// the end bins. `relations` selects a subset; empty means all. Throws
/// ValidationError for n_bins == 0, an empty range or an empty selection.
HistogramTable histogram(std::span<const ScoredPair> scored, std::size_t n_bins, double lo,
                         double hi, std::span<const KinshipRelation> relations = {});

/// Sum over bins of min(kin frequency, non-kin frequency), each normalized
/// by its class total.
double histogram_overlap(const HistogramTable& table);

/// 1 - max over thresholds of (true positive rate - false positive rate).
double threshold_overlap(std::span<const ScoredPair> scored, Direction direction);

/// `bin_lo,bin_hi,kin,nonkin`.
void write_histogram(const HistogramTable& table, std::ostream& out);

/// Mann-Whitney statistic via average ranks: the fraction of (kin, non-kin)
/// combinations ranked correctly, ties counting one half. Throws
/// ValidationError unless both classes are present.
double auc(std::span<const ScoredPair> scored, Direction direction);
double auc_scores(std::span<const double> scores, std::span<const PairLabel> labels,
                  Direction direction);

std::vector<ScoredPair> select_relations(std::span<const ScoredPair> scored,
                                         std::span<const KinshipRelation> relations);

inline constexpr std::array<KinshipRelation, 3> kOppositeGenderRelations = {
    KinshipRelation::FD, KinshipRelation::MS, KinshipRelation::SIBS};
inline constexpr std::array<KinshipRelation, 4> kSameGenderRelations = {
    KinshipRelation::FS, KinshipRelation::MD, KinshipRelation::BB, KinshipRelation::SS};

struct TriScore {
  TriSample sample;
  double z_fc = 0.0;
  double z_mc = 0.0;
  double fused = 0.0;
};

/// (father, child) scored as FS/FD and (mother, child) as MS/MD by the
/// child's gender; fused = (z_fc + z_mc) / 2.
TriScore tri_score(const ComparatorParams& params, const EmbeddingStore& store,
                   const TriSample& sample);
std::vector<TriScore> score_tri(const ComparatorParams& params, const EmbeddingStore& store,
                                const TriSet& tri);

enum class TriChannel : std::uint8_t { Fused, FatherOnly, MotherOnly };
std::vector<double> tri_channel(std::span<const TriScore> scores, TriChannel channel);
std::vector<PairLabel> tri_labels(std::span<const TriScore> scores);

/// Accuracy of a fixed threshold on single-group scores.
double accuracy_at(std::span<const double> scores, std::span<const PairLabel> labels,
                   double threshold, Direction direction);

/// Validation macro accuracy as train() reports it: calibrated on the same set.
double calibrated_macro_accuracy(const ComparatorParams& params, const EmbeddingStore& store,
                                 const PairSet& pairs);

struct RelationTop1 {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

/// Share of kin pairs whose highest attention weight lands on the expert
/// of their true relation. Requires an attention head.
RelationTop1 relation_top1(const ComparatorParams& params, const EmbeddingStore& store,
                           const PairSet& pairs);

struct AblationCell {
  Activation activation = Activation::LReLU;
  double dropout = 0.2;
  std::size_t hidden = 192;

  bool operator==(const AblationCell&) const = default;
};

/// Rows of the activation / dropout / layer-size table, in table order,
/// ending with the default setting.
std::vector<AblationCell> one_factor_grid();
std::vector<AblationCell> cartesian_grid(std::span<const Activation> activations,
                                         std::span<const double> dropouts,
                                         std::span<const std::size_t> hidden_sizes);

struct AblationRow {
  AblationCell cell;
  double accuracy = 0.0;
};

/// One independent training run per cell with the shared seed; the
/// accuracy is the calibrated validation macro accuracy. `jobs` > 1 runs
/// cells on worker threads; results keep cell order.
std::vector<AblationRow> ablation_run(const TrainConfig& train_config,
                                      const ComparatorConfig& base, const EmbeddingStore& store,
                                      const PairSet& train_pairs, const PairSet& val_pairs,
                                      std::span<const AblationCell> cells, std::size_t jobs = 1);

/// `activation,dropout,hidden,accuracy`.
void write_ablation(std::span<const AblationRow> rows, std::ostream& out);

}  // namespace kinship
