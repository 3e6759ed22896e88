#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "kgaug/kg_embed.hpp"
#include "kgaug/model.hpp"
#include "kgaug/synth.hpp"

namespace kgaug {

// Flat key=value settings. A preset supplies every key; a config file and
// then explicit overrides replace values. Unknown keys and values that do
// not parse as the key's type are ConfigErrors.
class RunConfig {
 public:
  // "desk" (default), "news20" and "snli".
  static std::vector<std::string> preset_names();
  static RunConfig preset(const std::string& name = "desk");
  static std::vector<std::string> keys();

  void set(const std::string& key, const std::string& value);
  // `key=value` lines; '#' starts a comment, blank lines are skipped. A
  // `preset=` line is not allowed here (choose presets before merging).
  void merge(std::istream& in, const std::string& source = "<stream>");
  void merge(const std::filesystem::path& path);

  const std::string& get(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  const std::string& preset_name() const { return preset_; }
  const std::map<std::string, std::string>& values() const { return values_; }
  // Sorted `key=value` lines.
  void write(std::ostream& out) const;

  TransEConfig transe() const;
  TrainConfig train() const;
  SynthConfig synth() const;
  std::size_t clusters() const { return get_size("clusters"); }

 private:
  std::string preset_;
  std::map<std::string, std::string> values_;
};

}  // namespace kgaug
