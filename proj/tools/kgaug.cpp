#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgaug/clustering.hpp"
#include "kgaug/error.hpp"
#include "kgaug/kg_embed.hpp"
#include "kgaug/kg_store.hpp"
#include "kgaug/model.hpp"
#include "kgaug/retrieval.hpp"
#include "kgaug/run_config.hpp"
#include "kgaug/synth.hpp"
#include "kgaug/word_vectors.hpp"

namespace fs = std::filesystem;
using namespace kgaug;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;

// Shared flags. Empty optionals leave the config value alone.
struct Common {
  std::string preset = "desk";
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> fraction;
  std::optional<std::size_t> clusters;
  std::optional<std::size_t> kg_dim;
  std::optional<std::size_t> epochs;
  std::string out;

  RunConfig resolve() const {
    RunConfig c = RunConfig::preset(preset);
    if (!config_file.empty()) c.merge(fs::path(config_file));
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) c.set("seed", std::to_string(*seed));
    if (mode) c.set("mode", *mode);
    if (fraction) c.set("fraction", std::to_string(*fraction));
    if (clusters) c.set("clusters", std::to_string(*clusters));
    if (kg_dim) c.set("kg_dim", std::to_string(*kg_dim));
    if (epochs) c.set("epochs", std::to_string(*epochs));
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--preset", c.preset, "Base settings: desk, news20 or snli")->capture_default_str();
  cmd->add_option("--config", c.config_file, "key=value file applied over the preset");
  cmd->add_option("--set", c.sets, "Extra key=value override (repeatable)");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--mode", c.mode, "plain | vanilla_kg | conv_kg");
  cmd->add_option("--fraction", c.fraction, "Training fraction in (0, 1]");
  cmd->add_option("--clusters", c.clusters, "Number of entity/relation clusters");
  cmd->add_option("--kg-dim", c.kg_dim, "KG embedding dimension");
  cmd->add_option("--epochs", c.epochs, "Joint training epochs");
  auto* out = cmd->add_option("--out", c.out, "Output directory");
  if (out_required) out->required();
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  fn(out);
  if (!out) throw IoError("error writing " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string format(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Flat key=value. The timestamp lives only here so that every other
// artifact is byte-identical across reruns.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config) {
    add("command", std::move(command));
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    add("timestamp", buf);
    add("kg_preset", config.preset_name());
    for (const auto& [k, v] : config.values()) add("config." + k, v);
  }
  void add(const std::string& key, const std::string& value) { lines_ += key + "=" + value + "\n"; }
  void add(const std::string& key, double value) { add(key, format(value)); }
  void save(const fs::path& dir) const {
    write_file(dir / "manifest.txt", [&](std::ostream& o) { o << lines_; });
  }

 private:
  std::string lines_;
};

std::optional<WordVectors> maybe_words(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_word_vectors(fs::path(path));
}

// KG artifacts: entities.emb and relations.emb from `embed`, plus optional
// entity_clusters.tsv / relation_clusters.tsv from `cluster`.
KgContext load_kg(const std::string& dir, const RunConfig& config, Mode mode, Manifest& manifest) {
  if (dir.empty()) {
    if (uses_kg(mode)) throw ConfigError("mode " + to_string(mode) + " needs --kg");
    return {};
  }
  const fs::path base(dir);
  EmbeddingTable entities = read_embeddings(base / "entities.emb");
  EmbeddingTable relations = read_embeddings(base / "relations.emb");
  if (entities.dim() != config.get_size("kg_dim") || relations.dim() != entities.dim()) {
    throw ConfigError("KG embeddings have dimension " + std::to_string(entities.dim()) + " but kg_dim is " +
                      config.get("kg_dim"));
  }
  manifest.add("kg_entities", std::to_string(entities.size()));
  manifest.add("kg_relations", std::to_string(relations.size()));
  if (mode != Mode::conv_kg) return make_kg_context(std::move(entities), std::move(relations), 0, 0);

  const std::size_t l = config.clusters();
  KgContext kg = make_kg_context(entities, relations, l, config.get_u64("seed"));
  auto load_assignment = [&](const char* file, const EmbeddingTable& table, std::vector<std::size_t>& assignment,
                             std::size_t& count) {
    if (!fs::exists(base / file)) return false;
    assignment = read_clusters(base / file, table.names);
    count = 0;
    for (std::size_t c : assignment) count = std::max(count, c + 1);
    return true;
  };
  const bool entity_file = load_assignment("entity_clusters.tsv", kg.entities, kg.entity_assignment, kg.entity_clusters);
  const bool relation_file =
      load_assignment("relation_clusters.tsv", kg.relations, kg.relation_assignment, kg.relation_clusters);
  manifest.add("entity_clusters", std::to_string(kg.entity_clusters));
  manifest.add("entity_clusters_source", entity_file ? "file" : "balanced_kmeans");
  if (kg.relation_clusters == 0) {
    manifest.add("relation_clustering", "skipped (" + std::to_string(relations.size()) + " relations < " +
                                            std::to_string(l) + " clusters; vanilla attention over relations)");
  } else {
    manifest.add("relation_clustering", relation_file ? "file" : "balanced_kmeans");
    manifest.add("relation_clusters", std::to_string(kg.relation_clusters));
  }
  return kg;
}

void record_metrics(Manifest& manifest, const Metrics& m) {
  manifest.add("train_examples", std::to_string(m.train_examples));
  manifest.add("test_accuracy", m.test_accuracy);
  if (m.pretrain_accuracy >= 0) manifest.add("pretrain_accuracy", m.pretrain_accuracy);
  for (std::size_t i = 0; i < m.attention_entropy.size(); ++i) {
    manifest.add("attention_entropy.epoch" + std::to_string(i + 1), m.attention_entropy[i]);
  }
  if (uses_kg(m.mode)) {
    const FactAudit a = fact_audit();
    manifest.add("fact_identity_checks", std::to_string(a.passes));
    manifest.add("fact_identity_violations", std::to_string(a.violations));
  }
}

struct DataArgs {
  std::string train, test, kg, word_vectors;
};

void add_data(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--train", d.train, "Training set (label<TAB>text)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--test", d.test, "Test set (label<TAB>text)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--kg", d.kg, "Directory with entities.emb and relations.emb")->check(CLI::ExistingDirectory);
  cmd->add_option("--word-vectors", d.word_vectors, "Pretrained word vectors (word v1 ... vd)")
      ->check(CLI::ExistingFile);
}

int cmd_synth(const Common& common) {
  const RunConfig config = common.resolve();
  const SynthData data = make_synth(config.synth());
  write_synth(fs::path(common.out), data);
  std::cout << "wrote " << data.train.examples.size() << " train and " << data.test.examples.size()
            << " test documents, " << data.triples.size() << " triples to " << common.out << "\n";
  return 0;
}

int cmd_embed(const Common& common, const std::string& triples, const std::string& descriptions,
              const std::string& words_path) {
  const RunConfig config = common.resolve();
  TripleFile file = parse_triples(fs::path(triples));
  if (!descriptions.empty()) parse_descriptions(fs::path(descriptions), file.vocab);
  const std::optional<WordVectors> words = maybe_words(words_path);
  TransEConfig tc = config.transe();
  const TransEResult result = train_transe(file.vocab, file.triples, tc, words ? &*words : nullptr);
  const fs::path out(common.out);
  make_dir(out);
  write_file(out / "entities.emb", [&](std::ostream& o) { write_embeddings(o, result.entities); });
  write_file(out / "relations.emb", [&](std::ostream& o) { write_embeddings(o, result.relations); });
  Manifest manifest("embed", config);
  manifest.add("triples", std::to_string(file.triples.size()));
  manifest.add("duplicate_triples", std::to_string(file.duplicates));
  manifest.add("description_projection", result.projection.empty() ? "none" : "trained");
  if (!result.epoch_loss.empty()) manifest.add("final_epoch_loss", result.epoch_loss.back());
  manifest.save(out);
  std::cout << result.entities.size() << " entities, " << result.relations.size() << " relations, dim "
            << result.entities.dim() << "\n";
  return 0;
}

int cmd_cluster(const Common& common, const std::string& embeddings) {
  const RunConfig config = common.resolve();
  const EmbeddingTable table = read_embeddings(fs::path(embeddings));
  const ClusterSet set =
      balanced_kmeans(table, ClusterConfig{config.clusters(), 100, 5, config.get_u64("seed")});
  const fs::path out(common.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  write_file(out, [&](std::ostream& o) { write_clusters(o, table.names, set); });
  std::cout << set.size() << " clusters of up to " << set.rows << " rows, objective " << format(set.objective)
            << "\n";
  return 0;
}

int cmd_train(const Common& common, const DataArgs& args, bool pretrain_only) {
  RunConfig config = common.resolve();
  TrainConfig tc = config.train();
  if (pretrain_only) {
    if (!uses_kg(tc.model.mode)) throw ConfigError("pretrain needs a KG mode (vanilla_kg or conv_kg)");
    if (tc.pretrain_epochs == 0) throw ConfigError("pretrain needs pretrain_epochs > 0");
    tc.epochs = 0;
  }
  Manifest manifest(pretrain_only ? "pretrain" : "train", config);
  const Dataset train = read_dataset(fs::path(args.train));
  const Dataset test = read_dataset(fs::path(args.test), &train.labels);
  const KgContext kg = load_kg(args.kg, config, tc.model.mode, manifest);
  const std::optional<WordVectors> words = maybe_words(args.word_vectors);

  RunResult result = run_experiment(train, test, kg, tc, words ? &*words : nullptr);
  const fs::path out(common.out);
  make_dir(out);
  write_file(out / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, result.metrics); });
  save_model(out / "model.json", result.model);
  if (tc.model.mode == Mode::conv_kg) {
    manifest.add("entity_cluster_rows", std::to_string(result.model.entity_clusters().rows));
    manifest.add("entity_conv_schedule",
                 tc.model.identity_encoder ? describe(identity_schedule(result.model.entity_clusters().rows))
                                           : describe(plan_schedule(result.model.entity_clusters().rows)));
  }
  record_metrics(manifest, result.metrics);
  manifest.save(out);
  const double acc = pretrain_only ? result.metrics.pretrain_accuracy : result.metrics.test_accuracy;
  std::cout << (pretrain_only ? "retrieval-only test accuracy " : "test accuracy ") << format(acc) << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path, const std::string& head_name) {
  Model model = load_model(fs::path(model_path));
  const Dataset data = read_dataset(fs::path(data_path), &model.labels());
  Model::Head head = Model::Head::joint;
  if (head_name == "retrieval") {
    head = Model::Head::retrieval;
  } else if (head_name != "joint") {
    throw ConfigError("--head must be joint or retrieval");
  }
  const Evaluation ev = evaluate(model, data, head);
  std::cout << "examples=" << data.examples.size() << "\naccuracy=" << format(ev.accuracy)
            << "\nloss=" << format(ev.loss) << "\n";
  return 0;
}

int cmd_sweep(const Common& common, const DataArgs& args, const std::vector<std::string>& mode_names) {
  RunConfig config = common.resolve();
  TrainConfig tc = config.train();
  std::vector<Mode> modes;
  for (const auto& m : mode_names) modes.push_back(parse_mode(m));
  bool conv = false;
  for (Mode m : modes) conv = conv || m == Mode::conv_kg;
  Manifest manifest("sweep", config);
  const Dataset train = read_dataset(fs::path(args.train));
  const Dataset test = read_dataset(fs::path(args.test), &train.labels);
  bool any_kg = false;
  for (Mode m : modes) any_kg = any_kg || uses_kg(m);
  const KgContext kg = load_kg(args.kg, config, conv ? Mode::conv_kg : (any_kg ? Mode::vanilla_kg : Mode::plain),
                               manifest);
  const std::optional<WordVectors> words = maybe_words(args.word_vectors);
  const auto rows = fraction_sweep(train, test, kg, tc, config.get_doubles("fractions"), modes,
                                   words ? &*words : nullptr);
  const fs::path out(common.out);
  make_dir(out);
  write_file(out / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, rows); });
  manifest.save(out);
  write_sweep_csv(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph augmented text classification"};
  app.require_subcommand(1);

  Common common;
  DataArgs data;
  std::string triples, descriptions, words, embeddings, model_path, eval_data, head = "joint";
  std::vector<std::string> sweep_modes{"plain", "conv_kg"};

  auto* synth = app.add_subcommand("synth", "Generate the synthetic fact-determined benchmark");
  add_common(synth, common);

  auto* embed = app.add_subcommand("embed", "Train TransE embeddings and dump them");
  add_common(embed, common);
  embed->add_option("--triples", triples, "head<TAB>relation<TAB>tail file")->required()->check(CLI::ExistingFile);
  embed->add_option("--descriptions", descriptions, "entity<TAB>description file")->check(CLI::ExistingFile);
  embed->add_option("--word-vectors", words, "Word vectors for description features")->check(CLI::ExistingFile);

  auto* cluster = app.add_subcommand("cluster", "Balanced k-means over an embedding dump");
  add_common(cluster, common);
  cluster->add_option("--embeddings", embeddings, "Embedding dump")->required()->check(CLI::ExistingFile);

  auto* pretrain = app.add_subcommand("pretrain", "Train the retrieval-only head");
  add_common(pretrain, common);
  add_data(pretrain, data);

  auto* train = app.add_subcommand("train", "Optional pretraining, then joint training");
  add_common(train, common);
  add_data(train, data);

  auto* eval = app.add_subcommand("eval", "Accuracy of a saved model on a dataset");
  eval->add_option("--model", model_path, "model.json from train")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "label<TAB>text file")->required()->check(CLI::ExistingFile);
  eval->add_option("--head", head, "joint or retrieval")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Accuracy per training fraction and mode");
  add_common(sweep, common);
  add_data(sweep, data);
  sweep->add_option("--modes", sweep_modes, "Modes to compare")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(common);
    if (*embed) return cmd_embed(common, triples, descriptions, words);
    if (*cluster) return cmd_cluster(common, embeddings);
    if (*pretrain) return cmd_train(common, data, true);
    if (*train) return cmd_train(common, data, false);
    if (*eval) return cmd_eval(model_path, eval_data, head);
    if (*sweep) return cmd_sweep(common, data, sweep_modes);
  } catch (const TrainingError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kExitTraining;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
