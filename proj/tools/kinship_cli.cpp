// kinship: command-line runner for synthetic worlds, comparator training
// and evaluation. Exit status 0 on success, 1 on validation failure, 2 on
// usage errors. Every run writes manifest.json (config echo, seed, CRC32 of
// each artifact) into its output directory.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kinship/comparator.hpp"
#include "kinship/dataset.hpp"
#include "kinship/errors.hpp"
#include "kinship/evaluation.hpp"
#include "kinship/model_io.hpp"
#include "kinship/run_config.hpp"
#include "kinship/synth.hpp"
#include "kinship/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kinship;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> data;
  std::optional<std::string> model;
  std::optional<std::string> out;
  std::optional<std::size_t> hidden;
  std::optional<std::string> activation;
  std::optional<double> dropout;
  std::optional<std::string> sharing;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> attention_epochs;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> families_train;
  std::optional<std::size_t> families_val;
  std::optional<std::size_t> families_test;
  std::optional<std::size_t> bins;
  std::optional<std::string> objective;
  std::optional<std::size_t> jobs;

  // Subcommand specific.
  std::string split = "test";
  std::string scorer = "comparator";
  bool calibrate = false;
  std::string id1;
  std::string id2;
  std::string relation;
  std::optional<double> threshold;
  std::string father;
  std::string mother;
  std::string child;
  std::string relations_filter;
  std::string grid = "one-factor";
  std::vector<std::string> grid_activations;
  std::vector<double> grid_dropouts;
  std::vector<std::size_t> grid_hidden;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--out", f.out, "Output directory (default: current directory)");
}

void add_data(CLI::App* cmd, Flags& f) { cmd->add_option("--data", f.data, "World directory"); }
void add_model(CLI::App* cmd, Flags& f) { cmd->add_option("--model", f.model, "Model file"); }

void add_training(CLI::App* cmd, Flags& f) {
  cmd->add_option("--hidden", f.hidden, "Hidden layer size");
  cmd->add_option("--activation", f.activation, "lrelu | relu | prelu | tanh");
  cmd->add_option("--dropout", f.dropout, "Dropout on f_c");
  cmd->add_option("--sharing", f.sharing, "per-expert | shared-trunk | entirely-local");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--batch-size", f.batch_size, "Batch size");
  cmd->add_option("--attention-epochs", f.attention_epochs, "Attention head epochs (0 skips)");
}

json overrides_from(const Flags& f) {
  json o = json::object();
  if (f.seed) o["seed"] = *f.seed;
  if (f.data) o["paths"]["data"] = *f.data;
  if (f.model) o["paths"]["model"] = *f.model;
  if (f.out) o["paths"]["out"] = *f.out;
  if (f.hidden) o["model"]["hidden"] = *f.hidden;
  if (f.activation) o["model"]["activation"] = *f.activation;
  if (f.dropout) o["model"]["dropout"] = *f.dropout;
  if (f.sharing) o["model"]["sharing"] = *f.sharing;
  if (f.epochs) o["train"]["epochs"] = *f.epochs;
  if (f.batch_size) o["train"]["batch_size"] = *f.batch_size;
  if (f.attention_epochs) o["train"]["attention_epochs"] = *f.attention_epochs;
  if (f.dim) o["synth"]["dim"] = *f.dim;
  if (f.families_train) o["synth"]["families"]["train"] = *f.families_train;
  if (f.families_val) o["synth"]["families"]["val"] = *f.families_val;
  if (f.families_test) o["synth"]["families"]["test"] = *f.families_test;
  if (f.bins) o["eval"]["bins"] = *f.bins;
  if (f.objective) o["eval"]["objective"] = *f.objective;
  if (f.jobs) o["eval"]["jobs"] = *f.jobs;
  return o;
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

class Run {
 public:
  Run(std::string command, RunConfig config)
      : command_(std::move(command)), config_(std::move(config)) {
    out_ = config_.paths.out.empty() ? fs::path(".") : fs::path(config_.paths.out);
    fs::create_directories(out_);
  }

  const RunConfig& config() const { return config_; }
  fs::path path(const std::string& name) const { return out_ / name; }

  void artifact(const fs::path& p) { artifacts_.push_back(p); }
  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write_manifest() const {
    json artifacts = json::object();
    for (const auto& p : artifacts_) artifacts[p.filename().string()] = hex32(file_crc32(p));
    json manifest = {{"command", command_},
                     {"seed", config_.seed},
                     {"config", config_to_json(config_)},
                     {"artifacts", artifacts}};
    if (!extra_.empty()) manifest["results"] = extra_;
    std::ofstream out(out_ / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (out_ / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }

 private:
  std::string command_;
  RunConfig config_;
  fs::path out_;
  std::vector<fs::path> artifacts_;
  json extra_ = json::object();
};

Split parse_split(const std::string& name) {
  for (Split s : kAllSplits) {
    if (split_name(s) == name) return s;
  }
  throw ConfigError("--split must be train, val or test");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

int cmd_synth(Run& run) {
  const auto world = generate_world(run.config().synth);
  for (const auto& p : write_world(world, run.path(""))) run.artifact(p);
  run.note("persons", world.store.size());
  run.write_manifest();
  std::cout << "wrote " << world.store.size() << " persons to " << run.path("").string() << '\n';
  return kExitOk;
}

ComparatorConfig model_config(const RunConfig& config, const Dataset& data) {
  ComparatorConfig model = config.model;
  model.embedding_dim = data.store.dim();
  return model;
}

int cmd_train(Run& run) {
  const auto& config = run.config();
  const auto data = load_dataset(require_path(config, "data"));
  const auto model = model_config(config, data);
  auto result = train(config.train, model, data.store, data.pairs_of(Split::Train),
                      data.pairs_of(Split::Val), [](const EpochRecord& r) {
                        std::cout << "epoch " << r.epoch << " lr " << r.lr << " loss " << r.train_loss
                                  << " val_macro_acc " << r.val_macro_acc << '\n';
                      });
  auto params = std::move(result.params);
  if (config.attention_epochs > 0) {
    TrainConfig head = config.train;
    head.epochs = config.attention_epochs;
    params = train_attention(params, data.store, data.pairs_of(Split::Train), head);
  }
  const auto model_path = config.paths.model.empty() ? run.path("model.kinc") : fs::path(config.paths.model);
  save_model(params, model_path);
  run.artifact(model_path);

  const auto history_path = run.path("history.csv");
  {
    auto out = open_out(history_path);
    out << "epoch,lr,train_loss,val_macro_acc\n";
    for (const auto& r : result.history) {
      out << r.epoch << ',' << json(r.lr).dump() << ',' << json(r.train_loss).dump() << ','
          << json(r.val_macro_acc).dump() << '\n';
    }
  }
  run.artifact(history_path);
  if (!result.history.empty()) run.note("val_macro_acc", result.history.back().val_macro_acc);
  run.write_manifest();
  return kExitOk;
}

int cmd_eval(Run& run, const Flags& f) {
  const auto& config = run.config();
  const auto data = load_dataset(require_path(config, "data"));
  const Split split = parse_split(f.split);
  const Scorer scorer = f.scorer == "cosine" ? Scorer::CosineBaseline : Scorer::Comparator;
  if (f.scorer != "cosine" && f.scorer != "comparator") throw ConfigError("--scorer must be comparator or cosine");
  const Direction direction = default_direction(scorer);

  std::optional<ComparatorParams> params;
  fs::path model_path;
  if (scorer == Scorer::Comparator) {
    model_path = require_path(config, "model");
    params = load_model(model_path);
  }
  const ComparatorParams* p = params ? &*params : nullptr;

  double threshold = 0.0;
  if (scorer == Scorer::CosineBaseline || f.calibrate) {
    const auto val = validation_set(data.pairs_of(Split::Val), data.store, config.seed);
    const auto scored_val = score_pairs(p, data.store, val, scorer);
    const auto cal = calibrate_threshold(scored_val, config.eval.objective, direction);
    threshold = cal.threshold;
    run.note("calibration_objective", cal.objective);
    if (params && f.calibrate) {
      params->threshold = threshold;
      save_model(*params, model_path);
      run.artifact(model_path);
    }
  } else {
    if (!params->threshold) {
      throw ValidationError("model has no calibrated threshold; run eval --calibrate first");
    }
    threshold = *params->threshold;
  }

  const auto scored = score_pairs(p, data.store, data.pairs_of(split), scorer);
  const auto report = accuracy_report(scored, threshold, direction, true);
  const auto report_path = run.path("report.csv");
  {
    auto out = open_out(report_path);
    write_report(report, out);
  }
  run.artifact(report_path);
  for (auto r : report.missing) {
    std::cerr << "warning: relation " << relation_code(r) << " absent from the " << f.split
              << " split; excluded from the average\n";
  }
  if (config.eval.per_relation && p != nullptr) {
    const auto val = validation_set(data.pairs_of(Split::Val), data.store, config.seed);
    const auto per = calibrate_per_relation(score_pairs(p, data.store, val, scorer), direction);
    const auto path = run.path("report_per_relation.csv");
    auto out = open_out(path);
    out << "relation,threshold,accuracy,count\n";
    for (auto r : kAllRelations) {
      const auto& cal = per[relation_index(r)];
      const std::array<KinshipRelation, 1> one = {r};
      const auto subset = select_relations(scored, one);
      if (!cal || subset.empty()) continue;
      out << relation_code(r) << ',' << json(cal->threshold).dump() << ','
          << json(accuracy_report(subset, cal->threshold, direction).macro).dump() << ','
          << subset.size() << '\n';
    }
    out.close();
    run.artifact(path);
  }
  run.note("threshold", threshold);
  run.note("macro_accuracy", report.macro);
  run.write_manifest();
  std::cout << "threshold " << threshold << " macro accuracy " << report.macro << '\n';
  return kExitOk;
}

int cmd_verify(Run& run, const Flags& f) {
  const auto& config = run.config();
  const auto data = load_dataset(require_path(config, "data"));
  const auto params = load_model(require_path(config, "model"));
  const auto relation = parse_relation(f.relation);
  if (!relation) throw ConfigError("--relation must be one of the 11 relation codes");
  const bool same_family = data.store.person(f.id1).family_id == data.store.person(f.id2).family_id;
  validate_pair(KinPair{f.id1, f.id2, *relation, same_family ? PairLabel::Kin : PairLabel::NonKin}, data.store);
  double threshold = 0.0;
  if (f.threshold) {
    threshold = *f.threshold;
  } else if (params.threshold) {
    threshold = *params.threshold;
  } else {
    throw ValidationError("model has no calibrated threshold; pass --threshold or run eval --calibrate");
  }
  const auto v = verify(params, data.store.embedding(f.id1), data.store.embedding(f.id2), *relation, threshold);
  const std::string decision = v.decision == Decision::Kin ? "Kin" : "NonKin";
  std::cout << "score " << json(v.score).dump() << " threshold " << json(threshold).dump() << " decision "
            << decision << '\n';
  run.note("score", v.score);
  run.note("decision", decision);
  run.write_manifest();
  return kExitOk;
}

int cmd_tri(Run& run, const Flags& f) {
  const auto& config = run.config();
  const auto data = load_dataset(require_path(config, "data"));
  const auto params = load_model(require_path(config, "model"));
  const auto val = score_tri(params, data.store, data.tri_of(Split::Val));
  const auto val_labels = tri_labels(val);

  const auto report_path = run.path("tri_report.csv");
  auto out = open_out(report_path);
  out << "channel,threshold,accuracy,count\n";
  const Split split = parse_split(f.split);
  const auto eval = score_tri(params, data.store, data.tri_of(split));
  const auto eval_labels = tri_labels(eval);
  double fused_threshold = 0.0;
  for (auto [channel, name] : {std::pair{TriChannel::Fused, "fused"}, std::pair{TriChannel::FatherOnly, "father"},
                               std::pair{TriChannel::MotherOnly, "mother"}}) {
    const auto cal = calibrate_scores(tri_channel(val, channel), val_labels, Direction::HigherIsKin);
    const double acc = accuracy_at(tri_channel(eval, channel), eval_labels, cal.threshold, Direction::HigherIsKin);
    out << name << ',' << json(cal.threshold).dump() << ',' << json(acc).dump() << ',' << eval.size() << '\n';
    run.note(std::string(name) + "_accuracy", acc);
    if (channel == TriChannel::Fused) fused_threshold = cal.threshold;
    std::cout << name << " threshold " << cal.threshold << " accuracy " << acc << '\n';
  }
  out.close();
  run.artifact(report_path);

  if (!f.child.empty()) {
    const TriSample sample{f.father, f.mother, f.child, data.store.person(f.child).gender, PairLabel::Kin};
    const auto t = tri_score(params, data.store, sample);
    std::cout << "z_fc " << json(t.z_fc).dump() << " z_mc " << json(t.z_mc).dump() << " fused "
              << json(t.fused).dump() << " decision " << (t.fused >= fused_threshold ? "Kin" : "NonKin")
              << '\n';
    run.note("fused", t.fused);
  }
  run.write_manifest();
  return kExitOk;
}

std::vector<KinshipRelation> parse_relation_list(const std::string& text) {
  std::vector<KinshipRelation> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto r = parse_relation(item);
    if (!r) throw ConfigError("unknown relation code '" + item + "'");
    out.push_back(*r);
  }
  return out;
}

int cmd_histogram(Run& run, const Flags& f) {
  const auto& config = run.config();
  const auto data = load_dataset(require_path(config, "data"));
  const Scorer scorer = f.scorer == "cosine" ? Scorer::CosineBaseline : Scorer::Comparator;
  if (f.scorer != "cosine" && f.scorer != "comparator") throw ConfigError("--scorer must be comparator or cosine");
  std::optional<ComparatorParams> params;
  if (scorer == Scorer::Comparator) params = load_model(require_path(config, "model"));
  const auto scored = score_pairs(params ? &*params : nullptr, data.store, data.pairs_of(parse_split(f.split)), scorer);
  const auto relations = parse_relation_list(f.relations_filter);
  const double hi = scorer == Scorer::CosineBaseline ? 2.0 : 1.0;
  const auto table = histogram(scored, config.eval.bins, 0.0, hi, relations);
  const auto path = run.path("hist.csv");
  {
    auto out = open_out(path);
    write_histogram(table, out);
  }
  run.artifact(path);
  const double overlap = histogram_overlap(table);
  run.note("overlap", overlap);
  run.write_manifest();
  std::cout << "overlap " << overlap << '\n';
  return kExitOk;
}

int cmd_ablate(Run& run, const Flags& f) {
  const auto& config = run.config();
  const auto data = load_dataset(require_path(config, "data"));
  std::vector<AblationCell> cells;
  if (f.grid == "one-factor") {
    cells = one_factor_grid();
  } else if (f.grid == "cartesian") {
    std::vector<Activation> acts;
    for (const auto& a : f.grid_activations) {
      const auto parsed = parse_activation(a);
      if (!parsed) throw ConfigError("unknown activation '" + a + "'");
      acts.push_back(*parsed);
    }
    if (acts.empty()) acts.push_back(config.model.activation);
    auto drops = f.grid_dropouts;
    if (drops.empty()) drops.push_back(config.model.dropout);
    auto hidden = f.grid_hidden;
    if (hidden.empty()) hidden.push_back(config.model.hidden);
    cells = cartesian_grid(acts, drops, hidden);
  } else {
    throw ConfigError("--grid must be one-factor or cartesian");
  }
  const auto rows = ablation_run(config.train, model_config(config, data), data.store,
                                 data.pairs_of(Split::Train), data.pairs_of(Split::Val), cells,
                                 config.eval.jobs);
  const auto path = run.path("ablation.csv");
  {
    auto out = open_out(path);
    write_ablation(rows, out);
  }
  run.artifact(path);
  run.write_manifest();
  write_ablation(rows, std::cout);
  return kExitOk;
}

int cmd_gradcheck(Run& run, const Flags& f) {
  std::vector<Activation> acts = {Activation::LReLU, Activation::ReLU, Activation::PReLU, Activation::Tanh};
  std::vector<SharingMode> modes = {SharingMode::PerExpert, SharingMode::SharedTrunk, SharingMode::EntirelyLocal};
  if (f.activation) {
    const auto a = parse_activation(*f.activation);
    if (!a) throw ConfigError("unknown activation '" + *f.activation + "'");
    acts = {*a};
  }
  if (f.sharing) {
    const auto m = parse_sharing(*f.sharing);
    if (!m) throw ConfigError("unknown sharing mode '" + *f.sharing + "'");
    modes = {*m};
  }
  double worst = 0.0;
  for (auto a : acts) {
    for (auto m : modes) {
      GradcheckOptions options;
      options.activation = a;
      options.sharing = m;
      const auto r = gradcheck(options, run.config().seed);
      std::cout << activation_name(a) << ' ' << sharing_name(m) << " max_rel_error "
                << json(r.max_rel_error).dump() << " entries " << r.entries_checked << '\n';
      worst = std::max(worst, r.max_rel_error);
    }
  }
  std::cout << "max relative error " << json(worst).dump() << '\n';
  run.note("max_rel_error", worst);
  run.write_manifest();
  return worst < 1e-6 ? kExitOk : kExitValidation;
}

int cmd_predict(Run& run, const Flags& f) {
  const auto& config = run.config();
  const auto data = load_dataset(require_path(config, "data"));
  const auto params = load_model(require_path(config, "model"));
  if (!params.attention) throw ValidationError("model has no attention head; train with --attention-epochs > 0");
  const Split split = parse_split(f.split);
  const auto& pairs = data.pairs_of(split);

  if (!f.id1.empty()) {
    const auto f_c = concat_features(data.store.embedding(f.id1), data.store.embedding(f.id2));
    const auto a = attention_forward(params, f_c);
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::cout << relation_code(params.config.relations[i]) << ' ' << json(a[i]).dump() << '\n';
    }
  }

  const auto top = relation_top1(params, data.store, pairs);
  const double top1 = top.accuracy;
  const std::size_t total = top.total;

  const auto eval_pairs = validation_set(pairs, data.store, config.seed);
  const auto path = run.path("relation_report.csv");
  auto out = open_out(path);
  out << "metric,value\n";
  out << "top1_accuracy," << json(top1).dump() << '\n';
  std::cout << "top1 accuracy " << top1 << " over " << total << " kin pairs\n";
  run.note("top1_accuracy", top1);
  for (auto mode : {PoolMode::SoftAttention, PoolMode::HardAttention, PoolMode::MeanPool, PoolMode::MaxPool}) {
    const double a = auc(score_pairs_unknown(params, data.store, eval_pairs, mode), Direction::HigherIsKin);
    out << "auc_" << pool_name(mode) << ',' << json(a).dump() << '\n';
    std::cout << "unknown-relation AUC " << pool_name(mode) << ' ' << a << '\n';
    run.note("auc_" + std::string(pool_name(mode)), a);
  }
  out.close();
  run.artifact(path);
  run.write_manifest();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinship comparator: synthetic worlds, training and evaluation"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic embedding world");
  add_common(synth, f);
  synth->add_option("--dim", f.dim, "Embedding dimension");
  synth->add_option("--families-train", f.families_train, "Training families");
  synth->add_option("--families-val", f.families_val, "Validation families");
  synth->add_option("--families-test", f.families_test, "Test families");

  auto* train_cmd = app.add_subcommand("train", "Train the comparator (and attention head)");
  add_common(train_cmd, f);
  add_data(train_cmd, f);
  add_model(train_cmd, f);
  add_training(train_cmd, f);

  auto* eval = app.add_subcommand("eval", "Per-relation accuracy report");
  add_common(eval, f);
  add_data(eval, f);
  add_model(eval, f);
  eval->add_option("--split", f.split, "Split to report on (default test)");
  eval->add_option("--scorer", f.scorer, "comparator | cosine");
  eval->add_flag("--calibrate", f.calibrate, "Calibrate on val and store the threshold in the model");
  eval->add_option("--objective", f.objective, "macro | micro");

  auto* verify_cmd = app.add_subcommand("verify", "Score one pair");
  add_common(verify_cmd, f);
  add_data(verify_cmd, f);
  add_model(verify_cmd, f);
  verify_cmd->add_option("--id1", f.id1, "First person")->required();
  verify_cmd->add_option("--id2", f.id2, "Second person")->required();
  verify_cmd->add_option("--relation", f.relation, "Relation code")->required();
  verify_cmd->add_option("--threshold", f.threshold, "Override the stored threshold");

  auto* tri = app.add_subcommand("tri-verify", "Father-mother-child verification");
  add_common(tri, f);
  add_data(tri, f);
  add_model(tri, f);
  tri->add_option("--split", f.split, "Split to report on (default test)");
  tri->add_option("--father", f.father, "Father id");
  tri->add_option("--mother", f.mother, "Mother id");
  tri->add_option("--child", f.child, "Child id");

  auto* hist = app.add_subcommand("histogram", "Kin / non-kin score histogram");
  add_common(hist, f);
  add_data(hist, f);
  add_model(hist, f);
  hist->add_option("--split", f.split, "Split (default test)");
  hist->add_option("--scorer", f.scorer, "comparator | cosine");
  hist->add_option("--relations", f.relations_filter, "Comma-separated relation codes (default all)");
  hist->add_option("--bins", f.bins, "Bin count");

  auto* ablate = app.add_subcommand("ablate", "Activation / dropout / layer-size grid");
  add_common(ablate, f);
  add_data(ablate, f);
  add_training(ablate, f);
  ablate->add_option("--grid", f.grid, "one-factor | cartesian");
  ablate->add_option("--activations", f.grid_activations, "Cartesian grid activations")->delimiter(',');
  ablate->add_option("--dropouts", f.grid_dropouts, "Cartesian grid dropouts")->delimiter(',');
  ablate->add_option("--hidden-sizes", f.grid_hidden, "Cartesian grid hidden sizes")->delimiter(',');
  ablate->add_option("--jobs", f.jobs, "Worker threads for grid cells");

  auto* grad = app.add_subcommand("gradcheck", "Backprop against finite differences");
  add_common(grad, f);
  grad->add_option("--activation", f.activation, "Restrict to one activation");
  grad->add_option("--sharing", f.sharing, "Restrict to one sharing mode");

  auto* predict = app.add_subcommand("predict-relation", "Attention head relation prediction");
  add_common(predict, f);
  add_data(predict, f);
  add_model(predict, f);
  predict->add_option("--split", f.split, "Split (default test)");
  predict->add_option("--id1", f.id1, "First person of a single query");
  predict->add_option("--id2", f.id2, "Second person of a single query");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    // gradcheck reads activation and sharing as restrictions, not as model config.
    Flags for_config = f;
    if (grad->parsed()) {
      for_config.activation.reset();
      for_config.sharing.reset();
    }
    auto config = resolve_config(f.config ? std::optional<fs::path>(*f.config) : std::nullopt,
                                 overrides_from(for_config));
    CLI::App* active = app.get_subcommands().front();
    Run run(active->get_name(), std::move(config));
    if (synth->parsed()) return cmd_synth(run);
    if (train_cmd->parsed()) return cmd_train(run);
    if (eval->parsed()) return cmd_eval(run, f);
    if (verify_cmd->parsed()) return cmd_verify(run, f);
    if (tri->parsed()) return cmd_tri(run, f);
    if (hist->parsed()) return cmd_histogram(run, f);
    if (ablate->parsed()) return cmd_ablate(run, f);
    if (grad->parsed()) return cmd_gradcheck(run, f);
    if (predict->parsed()) return cmd_predict(run, f);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}
