#include "kinship/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "kinship/errors.hpp"
#include "text_io.hpp"

namespace kinship {
namespace {

struct Labeled {
  double score;
  bool kin;
  std::size_t group;
};

std::vector<Labeled> labeled(std::span<const ScoredPair> scored) {
  std::vector<Labeled> out;
  out.reserve(scored.size());
  for (const auto& s : scored) {
    out.push_back({s.score, s.pair.label == PairLabel::Kin, relation_index(s.pair.relation)});
  }
  return out;
}

std::vector<Labeled> labeled(std::span<const double> scores, std::span<const PairLabel> labels) {
  if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in length");
  std::vector<Labeled> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back({scores[i], labels[i] == PairLabel::Kin, 0});
  }
  return out;
}

void require_both_classes(std::span<const Labeled> items) {
  const bool any_kin = std::any_of(items.begin(), items.end(), [](const Labeled& l) { return l.kin; });
  const bool any_non = std::any_of(items.begin(), items.end(), [](const Labeled& l) { return !l.kin; });
  if (!any_kin || !any_non) throw ValidationError("need both kin and non-kin samples");
  for (const auto& l : items) {
    if (!std::isfinite(l.score)) throw NumericalError("non-finite score");
  }
}

double objective_value(std::span<const std::size_t> correct, std::span<const std::size_t> count,
                       Objective objective) {
  if (objective == Objective::MicroAccuracy) {
    std::size_t c = 0;
    std::size_t n = 0;
    for (std::size_t g = 0; g < count.size(); ++g) {
      c += correct[g];
      n += count[g];
    }
    return static_cast<double>(c) / static_cast<double>(n);
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t g = 0; g < count.size(); ++g) {
    if (count[g] == 0) continue;
    sum += static_cast<double>(correct[g]) / static_cast<double>(count[g]);
    ++present;
  }
  return sum / static_cast<double>(present);
}

// Ascending sweep over the candidate thresholds. The predicted class of a
// score only changes when the threshold passes it, so per-group correct
// counts update in O(1) per score.
Calibration calibrate_core(std::vector<Labeled> items, std::size_t n_groups, Objective objective,
                           Direction direction) {
  require_both_classes(items);
  std::sort(items.begin(), items.end(),
            [](const Labeled& a, const Labeled& b) { return a.score < b.score; });
  std::vector<std::size_t> count(n_groups, 0);
  std::vector<std::size_t> correct(n_groups, 0);
  const bool higher = direction == Direction::HigherIsKin;
  for (const auto& l : items) {
    ++count[l.group];
    // Threshold below every score: all kin (higher) or all non-kin (lower).
    if (l.kin == higher) ++correct[l.group];
  }

  const double inf = std::numeric_limits<double>::infinity();
  Calibration best{std::nextafter(items.front().score, -inf), objective_value(correct, count, objective)};
  std::size_t i = 0;
  while (i < items.size()) {
    const double value = items[i].score;
    for (; i < items.size() && items[i].score == value; ++i) {
      const auto& l = items[i];
      // The threshold now passes this score, flipping its prediction.
      if (l.kin == higher) {
        --correct[l.group];
      } else {
        ++correct[l.group];
      }
    }
    double threshold;
    if (i == items.size()) {
      threshold = std::nextafter(value, inf);
    } else {
      const double next = items[i].score;
      threshold = (value + next) * 0.5;
      if (higher && !(threshold > value)) threshold = next;
      if (!higher && !(threshold < next)) threshold = value;
    }
    const double obj = objective_value(correct, count, objective);
    if (obj > best.objective) best = {threshold, obj};
  }
  return best;
}

double auc_core(std::vector<Labeled> items, Direction direction) {
  require_both_classes(items);
  if (direction == Direction::LowerIsKin) {
    for (auto& l : items) l.score = -l.score;
  }
  std::sort(items.begin(), items.end(),
            [](const Labeled& a, const Labeled& b) { return a.score < b.score; });
  double kin_rank_sum = 0.0;
  std::size_t n_kin = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    // Ranks i+1..j share their average.
    const double rank = static_cast<double>(i + 1 + j) * 0.5;
    for (std::size_t t = i; t < j; ++t) {
      if (items[t].kin) {
        kin_rank_sum += rank;
        ++n_kin;
      }
    }
    i = j;
  }
  const std::size_t n_non = items.size() - n_kin;
  const double nk = static_cast<double>(n_kin);
  const double u = kin_rank_sum - nk * (nk + 1.0) * 0.5;
  return u / (nk * static_cast<double>(n_non));
}

std::size_t bin_of(double x, const HistogramTable& t) {
  const std::size_t n = t.bins.size();
  const double width = t.hi - t.lo;
  double pos = std::floor((x - t.lo) / width * static_cast<double>(n));
  std::size_t idx = pos <= 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(pos));
  while (idx + 1 < n && x >= t.bins[idx + 1].lo) ++idx;
  while (idx > 0 && x < t.bins[idx].lo) --idx;
  return idx;
}

}  // namespace

std::vector<ScoredPair> score_pairs(const ComparatorParams* params, const EmbeddingStore& store,
                                    const PairSet& pairs, Scorer scorer) {
  if (scorer == Scorer::Comparator && params == nullptr) {
    throw ValidationError("comparator scoring needs a model");
  }
  std::vector<ScoredPair> out;
  out.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    const auto f1 = store.embedding(p.id1);
    const auto f2 = store.embedding(p.id2);
    const double score = scorer == Scorer::Comparator ? pair_score(*params, f1, f2, p.relation)
                                                      : cosine_distance(f1, f2);
    out.push_back({p, score});
  }
  return out;
}

std::vector<ScoredPair> score_pairs_unknown(const ComparatorParams& params,
                                            const EmbeddingStore& store, const PairSet& pairs,
                                            PoolMode mode) {
  std::vector<ScoredPair> out;
  out.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    const auto f_c = concat_features(store.embedding(p.id1), store.embedding(p.id2));
    out.push_back({p, score_unknown(params, f_c, mode)});
  }
  return out;
}

Calibration calibrate_threshold(std::span<const ScoredPair> scored, Objective objective,
                                Direction direction) {
  return calibrate_core(labeled(scored), kRelationCount, objective, direction);
}

Calibration calibrate_scores(std::span<const double> scores, std::span<const PairLabel> labels,
                             Direction direction) {
  return calibrate_core(labeled(scores, labels), 1, Objective::MicroAccuracy, direction);
}

std::array<std::optional<Calibration>, kRelationCount> calibrate_per_relation(
    std::span<const ScoredPair> scored, Direction direction) {
  std::array<std::optional<Calibration>, kRelationCount> out;
  for (auto r : kAllRelations) {
    const std::array<KinshipRelation, 1> one = {r};
    const auto subset = select_relations(scored, one);
    const bool kin = std::any_of(subset.begin(), subset.end(),
                                 [](const ScoredPair& s) { return s.pair.label == PairLabel::Kin; });
    const bool non = std::any_of(subset.begin(), subset.end(),
                                 [](const ScoredPair& s) { return s.pair.label == PairLabel::NonKin; });
    if (kin && non) out[relation_index(r)] = calibrate_threshold(subset, Objective::MacroAccuracy, direction);
  }
  return out;
}

double objective_at(std::span<const ScoredPair> scored, double threshold, Direction direction,
                    Objective objective) {
  std::vector<std::size_t> count(kRelationCount, 0);
  std::vector<std::size_t> correct(kRelationCount, 0);
  for (const auto& s : scored) {
    const auto g = relation_index(s.pair.relation);
    ++count[g];
    if (predicted_kin(s.score, threshold, direction) == (s.pair.label == PairLabel::Kin)) ++correct[g];
  }
  if (scored.empty()) throw ValidationError("no scored pairs");
  return objective_value(correct, count, objective);
}

EvaluationReport accuracy_report(std::span<const ScoredPair> scored, double threshold,
                                 Direction direction, bool with_auc) {
  EvaluationReport report;
  report.threshold = threshold;
  report.direction = direction;
  std::size_t correct_total = 0;
  for (const auto& s : scored) {
    auto& r = report.relations[relation_index(s.pair.relation)];
    r.present = true;
    ++r.count;
    const bool kin = s.pair.label == PairLabel::Kin;
    ++(kin ? r.kin : r.nonkin);
    if (predicted_kin(s.score, threshold, direction) == kin) {
      ++r.correct;
      ++correct_total;
    }
  }
  report.total = scored.size();
  double sum = 0.0;
  std::size_t present = 0;
  for (auto rel : kAllRelations) {
    auto& r = report.relations[relation_index(rel)];
    if (!r.present) {
      report.missing.push_back(rel);
      continue;
    }
    r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.count);
    sum += r.accuracy;
    ++present;
    if (with_auc && r.kin > 0 && r.nonkin > 0) {
      const std::array<KinshipRelation, 1> one = {rel};
      r.auc = auc(select_relations(scored, one), direction);
    }
  }
  report.macro = present > 0 ? sum / static_cast<double>(present) : 0.0;
  report.micro = report.total > 0
                     ? static_cast<double>(correct_total) / static_cast<double>(report.total)
                     : 0.0;
  return report;
}

void write_report(const EvaluationReport& report, std::ostream& out) {
  out << "relation,accuracy,count\n";
  for (auto rel : kAllRelations) {
    const auto& r = report.relations[relation_index(rel)];
    out << relation_code(rel) << ',';
    if (r.present) out << detail::format_double(r.accuracy);
    out << ',' << r.count << '\n';
  }
  out << "average," << detail::format_double(report.macro) << ',' << report.total << '\n';
}

HistogramTable histogram(std::span<const ScoredPair> scored, std::size_t n_bins, double lo,
                         double hi, std::span<const KinshipRelation> relations) {
  if (n_bins == 0) throw ValidationError("histogram needs at least one bin");
  if (!(hi > lo)) throw ValidationError("histogram range is empty");
  HistogramTable table;
  table.lo = lo;
  table.hi = hi;
  table.bins.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    table.bins[i].lo = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
    table.bins[i].hi = lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(n_bins);
  }
  for (const auto& s : scored) {
    if (!relations.empty() &&
        std::find(relations.begin(), relations.end(), s.pair.relation) == relations.end()) {
      continue;
    }
    auto& bin = table.bins[bin_of(s.score, table)];
    if (s.pair.label == PairLabel::Kin) {
      ++bin.kin;
      ++table.kin_total;
    } else {
      ++bin.nonkin;
      ++table.nonkin_total;
    }
  }
  if (table.kin_total + table.nonkin_total == 0) throw ValidationError("histogram input is empty");
  return table;
}

double histogram_overlap(const HistogramTable& table) {
  if (table.kin_total == 0 || table.nonkin_total == 0) {
    throw ValidationError("overlap needs both kin and non-kin counts");
  }
  double overlap = 0.0;
  for (const auto& b : table.bins) {
    overlap += std::min(static_cast<double>(b.kin) / static_cast<double>(table.kin_total),
                        static_cast<double>(b.nonkin) / static_cast<double>(table.nonkin_total));
  }
  return overlap;
}

double threshold_overlap(std::span<const ScoredPair> scored, Direction direction) {
  auto items = labeled(scored);
  require_both_classes(items);
  if (direction == Direction::LowerIsKin) {
    for (auto& l : items) l.score = -l.score;
  }
  std::sort(items.begin(), items.end(),
            [](const Labeled& a, const Labeled& b) { return a.score > b.score; });
  double n_kin = 0.0;
  for (const auto& l : items) n_kin += l.kin ? 1.0 : 0.0;
  const double n_non = static_cast<double>(items.size()) - n_kin;
  // Lower the threshold one distinct score at a time; everything above it is kin.
  double tp = 0.0;
  double fp = 0.0;
  double best = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    const double value = items[i].score;
    for (; i < items.size() && items[i].score == value; ++i) (items[i].kin ? tp : fp) += 1.0;
    best = std::max(best, tp / n_kin - fp / n_non);
  }
  return 1.0 - best;
}

void write_histogram(const HistogramTable& table, std::ostream& out) {
  out << "bin_lo,bin_hi,kin,nonkin\n";
  for (const auto& b : table.bins) {
    out << detail::format_double(b.lo) << ',' << detail::format_double(b.hi) << ',' << b.kin << ','
        << b.nonkin << '\n';
  }
}

double auc(std::span<const ScoredPair> scored, Direction direction) {
  return auc_core(labeled(scored), direction);
}

double auc_scores(std::span<const double> scores, std::span<const PairLabel> labels,
                  Direction direction) {
  return auc_core(labeled(scores, labels), direction);
}

std::vector<ScoredPair> select_relations(std::span<const ScoredPair> scored,
                                         std::span<const KinshipRelation> relations) {
  std::vector<ScoredPair> out;
  for (const auto& s : scored) {
    if (std::find(relations.begin(), relations.end(), s.pair.relation) != relations.end()) {
      out.push_back(s);
    }
  }
  return out;
}

TriScore tri_score(const ComparatorParams& params, const EmbeddingStore& store,
                   const TriSample& sample) {
  validate_tri(sample, store);
  const auto child = store.embedding(sample.child_id);
  TriScore t;
  t.sample = sample;
  t.z_fc = pair_score(params, store.embedding(sample.father_id), child,
                      parent_child_relation(Gender::Male, sample.child_gender));
  t.z_mc = pair_score(params, store.embedding(sample.mother_id), child,
                      parent_child_relation(Gender::Female, sample.child_gender));
  t.fused = (t.z_fc + t.z_mc) / 2.0;
  return t;
}

std::vector<TriScore> score_tri(const ComparatorParams& params, const EmbeddingStore& store,
                                const TriSet& tri) {
  std::vector<TriScore> out;
  out.reserve(tri.samples.size());
  for (const auto& s : tri.samples) out.push_back(tri_score(params, store, s));
  return out;
}

std::vector<double> tri_channel(std::span<const TriScore> scores, TriChannel channel) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    switch (channel) {
      case TriChannel::Fused:
        out.push_back(s.fused);
        break;
      case TriChannel::FatherOnly:
        out.push_back(s.z_fc);
        break;
      case TriChannel::MotherOnly:
        out.push_back(s.z_mc);
        break;
    }
  }
  return out;
}

RelationTop1 relation_top1(const ComparatorParams& params, const EmbeddingStore& store,
                           const PairSet& pairs) {
  if (!params.attention) throw ValidationError("model has no attention head");
  RelationTop1 out;
  for (const auto& p : pairs.pairs) {
    if (p.label != PairLabel::Kin) continue;
    const auto expert = params.config.expert_of(p.relation);
    if (!expert) continue;
    const auto a = attention_forward(params, concat_features(store.embedding(p.id1), store.embedding(p.id2)));
    const auto best = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
    if (best == *expert) ++out.correct;
    ++out.total;
  }
  if (out.total == 0) throw ValidationError("no kin pairs to predict relations for");
  out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.total);
  return out;
}

std::vector<PairLabel> tri_labels(std::span<const TriScore> scores) {
  std::vector<PairLabel> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s.sample.label);
  return out;
}

double accuracy_at(std::span<const double> scores, std::span<const PairLabel> labels,
                   double threshold, Direction direction) {
  if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in length");
  if (scores.empty()) throw ValidationError("no scores");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (predicted_kin(scores[i], threshold, direction) == (labels[i] == PairLabel::Kin)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double calibrated_macro_accuracy(const ComparatorParams& params, const EmbeddingStore& store,
                                 const PairSet& pairs) {
  const auto scored = score_pairs(&params, store, pairs, Scorer::Comparator);
  return calibrate_threshold(scored, Objective::MacroAccuracy, Direction::HigherIsKin).objective;
}

std::vector<AblationCell> one_factor_grid() {
  using enum Activation;
  return {
      {ReLU, 0.2, 192},  {PReLU, 0.2, 192}, {Tanh, 0.2, 192},
      {LReLU, 0.0, 192}, {LReLU, 0.1, 192}, {LReLU, 0.3, 192}, {LReLU, 0.4, 192},
      {LReLU, 0.2, 64},  {LReLU, 0.2, 128}, {LReLU, 0.2, 256}, {LReLU, 0.2, 512},
      {LReLU, 0.2, 1024},
      {LReLU, 0.2, 192},
  };
}

std::vector<AblationCell> cartesian_grid(std::span<const Activation> activations,
                                         std::span<const double> dropouts,
                                         std::span<const std::size_t> hidden_sizes) {
  std::vector<AblationCell> out;
  for (auto a : activations) {
    for (double d : dropouts) {
      for (auto h : hidden_sizes) out.push_back({a, d, h});
    }
  }
  return out;
}

std::vector<AblationRow> ablation_run(const TrainConfig& train_config,
                                      const ComparatorConfig& base, const EmbeddingStore& store,
                                      const PairSet& train_pairs, const PairSet& val_pairs,
                                      std::span<const AblationCell> cells, std::size_t jobs) {
  if (cells.empty()) throw ValidationError("ablation grid is empty");
  const PairSet val = validation_set(val_pairs, store, train_config.seed);
  std::vector<AblationRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    ComparatorConfig model = base;
    model.activation = cells[i].activation;
    model.dropout = cells[i].dropout;
    model.hidden = cells[i].hidden;
    const auto result = train(train_config, model, store, train_pairs, val);
    rows[i] = {cells[i], calibrated_macro_accuracy(result.params, store, val)};
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            run_cell(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_ablation(std::span<const AblationRow> rows, std::ostream& out) {
  out << "activation,dropout,hidden,accuracy\n";
  for (const auto& r : rows) {
    out << activation_name(r.cell.activation) << ',' << detail::format_double(r.cell.dropout) << ','
        << r.cell.hidden << ',' << detail::format_double(r.accuracy) << '\n';
  }
}

}  // namespace kinship
