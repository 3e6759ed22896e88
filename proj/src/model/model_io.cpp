#include <fstream>

#include "json.hpp"
#include "kgaug/error.hpp"
#include "kgaug/model.hpp"

namespace kgaug {

using json = nlohmann::json;
using num::Tensor;

namespace {

constexpr int format_version = 1;

json tensor_json(const Tensor& t) { return json{{"shape", t.shape()}, {"data", t.values()}}; }

Tensor tensor_from(const json& j) {
  return Tensor(j.at("shape").get<num::Shape>(), j.at("data").get<std::vector<double>>());
}

json table_json(const EmbeddingTable& t) { return json{{"names", t.names}, {"vectors", tensor_json(t.vectors)}}; }

EmbeddingTable table_from(const json& j, TableKind kind) {
  EmbeddingTable t;
  t.kind = kind;
  t.names = j.at("names").get<std::vector<std::string>>();
  t.vectors = tensor_from(j.at("vectors"));
  if (t.vectors.size() != 0 && t.vectors.rows() != t.names.size()) {
    throw DimensionError("embedding table rows do not match its names");
  }
  return t;
}

}  // namespace

void save_model(std::ostream& out, Model& model) {
  const ModelConfig& c = model.config();
  const KgContext& kg = model.kg();
  json params = json::object();
  for (num::Parameter* p : model.all_parameters()) params[p->name] = tensor_json(p->value);
  json j{
      {"format", format_version},
      {"config",
       {{"mode", to_string(c.mode)},
        {"word_dim", c.word_dim},
        {"hidden_dim", c.hidden_dim},
        {"max_len", c.max_len},
        {"word_sigma", c.word_sigma},
        {"train_words", c.train_words},
        {"shared_encoder", c.shared_encoder},
        {"finetune_kg", c.finetune_kg},
        {"relu_after_pool", c.relu_after_pool},
        {"identity_encoder", c.identity_encoder}}},
      {"labels", model.labels()},
      {"vocab", model.vocab().words().names()},
      {"kg",
       {{"entities", table_json(kg.entities)},
        {"relations", table_json(kg.relations)},
        {"entity_assignment", kg.entity_assignment},
        {"entity_clusters", kg.entity_clusters},
        {"relation_assignment", kg.relation_assignment},
        {"relation_clusters", kg.relation_clusters},
        {"entity_members", model.entity_clusters().members}}},
      {"params", params},
  };
  out << j.dump() << '\n';
}

void save_model(const std::filesystem::path& path, Model& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  save_model(out, model);
  if (!out) throw IoError("error writing " + path.string());
}

Model load_model(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 1, std::string("invalid model JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<int>() != format_version) throw ConfigError(source + ": unsupported model format");
    const json& jc = j.at("config");
    ModelConfig c;
    c.mode = parse_mode(jc.at("mode").get<std::string>());
    c.word_dim = jc.at("word_dim");
    c.hidden_dim = jc.at("hidden_dim");
    c.max_len = jc.at("max_len");
    c.word_sigma = jc.at("word_sigma");
    c.train_words = jc.at("train_words");
    c.shared_encoder = jc.at("shared_encoder");
    c.finetune_kg = jc.at("finetune_kg");
    c.relu_after_pool = jc.at("relu_after_pool");
    c.identity_encoder = jc.at("identity_encoder");
    const json& jk = j.at("kg");
    KgContext kg;
    kg.entities = table_from(jk.at("entities"), TableKind::entity);
    kg.relations = table_from(jk.at("relations"), TableKind::relation);
    kg.entity_assignment = jk.at("entity_assignment").get<std::vector<std::size_t>>();
    kg.entity_clusters = jk.at("entity_clusters");
    kg.relation_assignment = jk.at("relation_assignment").get<std::vector<std::size_t>>();
    kg.relation_clusters = jk.at("relation_clusters");
    auto members = jk.at("entity_members").get<std::vector<std::vector<std::size_t>>>();

    Model model(c, TextVocab::from_words(j.at("vocab").get<std::vector<std::string>>()),
                j.at("labels").get<std::vector<std::string>>(), std::move(kg), 0);
    if (!members.empty()) model.set_entity_members(std::move(members));
    const json& params = j.at("params");
    for (num::Parameter* p : model.all_parameters()) {
      if (!params.contains(p->name)) throw ConfigError(source + ": missing parameter " + p->name);
      Tensor t = tensor_from(params.at(p->name));
      if (t.shape() != p->value.shape()) {
        throw DimensionError(source + ": parameter " + p->name + " has shape " + num::shape_string(t.shape()) +
                             ", model expects " + num::shape_string(p->value.shape()));
      }
      p->value = std::move(t);
    }
    if (params.size() != model.all_parameters().size()) throw ConfigError(source + ": unexpected extra parameters");
    return model;
  } catch (const json::exception& e) {
    throw ParseError(source, 1, std::string("malformed model: ") + e.what());
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return load_model(in, path.string());
}

}  // namespace kgaug
