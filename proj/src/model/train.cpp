#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "kgaug/error.hpp"
#include "kgaug/model.hpp"
#include "kgaug/numerics/adam.hpp"
#include "kgaug/numerics/ops.hpp"

namespace kgaug {

using num::Graph;
using num::Var;

namespace {

constexpr std::size_t eval_batch = 256;

// Independent streams per purpose so that, e.g., the pretraining shuffle
// does not shift the joint-training shuffle.
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  return std::mt19937_64(seq);
}

struct Encoded {
  std::vector<TokenSequence> sequences;
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
};

Encoded encode_dataset(const Model& model, const Dataset& data) {
  if (data.num_classes() != model.num_classes()) {
    throw DimensionError("dataset has " + std::to_string(data.num_classes()) + " classes, model " +
                         std::to_string(model.num_classes()));
  }
  Encoded out;
  out.sequences.reserve(data.examples.size());
  for (const LabeledText& ex : data.examples) {
    out.sequences.push_back(model.tokenize(ex.text));
    out.labels.push_back(ex.label);
  }
  return out;
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

double entropy(std::span<const double> row) {
  double h = 0.0;
  for (double w : row) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

Evaluation evaluate_encoded(Model& model, const Encoded& data, Model::Head head) {
  Evaluation ev;
  if (data.size() == 0) return ev;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += eval_batch) {
    const std::size_t end = std::min(data.size(), start + eval_batch);
    std::vector<const TokenSequence*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&data.sequences[i]);
    Graph g(false);
    Model::Output out = model.forward(g, batch, head);
    const num::Tensor& probs = out.probs.value();
    for (std::size_t i = start; i < end; ++i) {
      const auto row = probs.row(i - start);
      const std::size_t pred = argmax(row);
      ev.predictions.push_back(pred);
      correct += pred == data.labels[i];
      ev.loss -= std::log(std::max(row[data.labels[i]], 1e-300));
      if (out.entity_weights.valid()) ev.entropy += entropy(out.entity_weights.value().row(i - start));
    }
  }
  const double n = static_cast<double>(data.size());
  ev.loss /= n;
  ev.accuracy = static_cast<double>(correct) / n;
  ev.entropy /= n;
  return ev;
}

void run_stage(Model& model, Model::Head head, const Encoded& train, const Encoded& test, const TrainConfig& config,
               std::size_t epochs, const std::string& prefix, Metrics& metrics) {
  if (epochs == 0) return;
  if (train.size() == 0) throw DomainError("training set is empty");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  num::Adam adam(model.parameters(head), num::AdamConfig{config.learning_rate});
  std::mt19937_64 rng = stream(config.seed, head == Model::Head::joint ? 2 : 1);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool track_entropy = head == Model::Head::joint && uses_kg(model.config().mode);

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0, batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const TokenSequence*> batch;
      std::vector<std::size_t> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train.sequences[order[i]]);
        labels.push_back(train.labels[order[i]]);
      }
      auto where = [&] {
        return prefix + "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no + 1);
      };
      try {
        adam.zero_grad();
        Graph g;
        Model::Output out = model.forward(g, batch, head);
        Var loss = num::cross_entropy(out.probs, labels);
        const double value = loss.value().item();
        if (!std::isfinite(value)) throw TrainingError("non-finite loss");
        for (std::size_t i = 0; i < labels.size(); ++i) correct += argmax(out.probs.value().row(i)) == labels[i];
        loss_sum += value * static_cast<double>(labels.size());
        g.backward(loss);
        adam.step();
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at " + where());
      } catch (const DomainError& e) {
        throw TrainingError(std::string(e.what()) + " at " + where());
      }
    }
    const double n = static_cast<double>(train.size());
    metrics.rows.push_back({epoch, prefix + "train", loss_sum / n, static_cast<double>(correct) / n});
    if (test.size() > 0) {
      Evaluation ev;
      try {
        ev = evaluate_encoded(model, test, head);
      } catch (const DomainError& e) {
        throw TrainingError(std::string(e.what()) + " at " + prefix + "epoch " + std::to_string(epoch) +
                            ", evaluation");
      }
      if (!std::isfinite(ev.loss)) {
        throw TrainingError("non-finite test loss at " + prefix + "epoch " + std::to_string(epoch) + ", evaluation");
      }
      metrics.rows.push_back({epoch, prefix + "test", ev.loss, ev.accuracy});
      if (track_entropy) metrics.attention_entropy.push_back(ev.entropy);
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Evaluation evaluate(Model& model, const Dataset& data, Model::Head head) {
  return evaluate_encoded(model, encode_dataset(model, data), head);
}

void pretrain_retrieval(Model& model, const Dataset& train, const Dataset& test, const TrainConfig& config,
                        Metrics& metrics) {
  if (!uses_kg(model.config().mode)) throw ConfigError("plain mode has no retrieval branch to pretrain");
  const Encoded tr = encode_dataset(model, train);
  const Encoded te = encode_dataset(model, test);
  run_stage(model, Model::Head::retrieval, tr, te, config, config.pretrain_epochs, "pretrain_", metrics);
  const Encoded& scored = te.size() > 0 ? te : tr;
  metrics.pretrain_accuracy = evaluate_encoded(model, scored, Model::Head::retrieval).accuracy;
}

Metrics train(Model& model, const Dataset& train, const Dataset& test, const TrainConfig& config) {
  Metrics metrics;
  metrics.mode = model.config().mode;
  metrics.fraction = config.fraction;
  metrics.seed = config.seed;
  metrics.train_examples = train.examples.size();
  if (config.pretrain_epochs > 0 && uses_kg(model.config().mode)) pretrain_retrieval(model, train, test, config, metrics);
  const Encoded tr = encode_dataset(model, train);
  const Encoded te = encode_dataset(model, test);
  run_stage(model, Model::Head::joint, tr, te, config, config.epochs, "", metrics);
  if (te.size() > 0) {
    metrics.test_accuracy =
        config.epochs > 0 ? metrics.rows.back().accuracy : evaluate_encoded(model, te, Model::Head::joint).accuracy;
  }
  return metrics;
}

Dataset stratified_subsample(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DomainError("fraction must be in (0, 1], got " + format_double(fraction));
  }
  if (fraction == 1.0) return data;
  std::vector<std::vector<std::size_t>> by_label(data.num_classes());
  for (std::size_t i = 0; i < data.examples.size(); ++i) by_label[data.examples[i].label].push_back(i);
  std::mt19937_64 rng = stream(seed, 3);
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_label.size(); ++c) {
    auto& idx = by_label[c];
    if (idx.empty()) continue;
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    if (k == 0) {
      throw DomainError("fraction " + format_double(fraction) + " leaves label '" + data.labels[c] +
                        "' with no example");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(keep.begin(), keep.end());
  Dataset out;
  out.labels = data.labels;
  for (std::size_t i : keep) out.examples.push_back(data.examples[i]);
  return out;
}

RunResult run_experiment(const Dataset& train_data, const Dataset& test, const KgContext& kg,
                         const TrainConfig& config, const WordVectors* pretrained) {
  Dataset subset = stratified_subsample(train_data, config.fraction, config.seed);
  TextVocab vocab;
  for (const LabeledText& ex : subset.examples) vocab.add_text(ex.text);
  if (pretrained != nullptr) {
    for (const std::string& w : pretrained->words.names()) vocab.add_text(w);
  }
  Model model(config.model, std::move(vocab), train_data.labels, kg, config.seed, pretrained);
  Metrics metrics = train(model, subset, test, config);
  return RunResult{std::move(model), std::move(metrics)};
}

std::vector<SweepRow> fraction_sweep(const Dataset& train_data, const Dataset& test, const KgContext& kg,
                                     const TrainConfig& config, const std::vector<double>& fractions,
                                     const std::vector<Mode>& modes, const WordVectors* pretrained) {
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    for (Mode mode : modes) {
      TrainConfig c = config;
      c.fraction = f;
      c.model.mode = mode;
      rows.push_back({f, mode, run_experiment(train_data, test, kg, c, pretrained).metrics.test_accuracy});
    }
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const Metrics& metrics, bool header) {
  if (header) out << "epoch,split,mode,fraction,seed,loss,accuracy\n";
  for (const MetricRow& r : metrics.rows) {
    out << r.epoch << ',' << r.split << ',' << to_string(metrics.mode) << ',' << format_double(metrics.fraction)
        << ',' << metrics.seed << ',' << format_double(r.loss) << ',' << format_double(r.accuracy) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "fraction,mode,accuracy\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.fraction) << ',' << to_string(r.mode) << ',' << format_double(r.accuracy) << '\n';
  }
}

}  // namespace kgaug
