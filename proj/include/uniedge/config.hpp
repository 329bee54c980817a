#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "uniedge/dataio.hpp"
#include "uniedge/model.hpp"
#include "uniedge/trainer.hpp"

namespace uniedge {

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string help;
};

// Every accepted key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

// Flat `key = value` document. Blank lines and `#` comments are ignored;
// unknown keys and malformed values raise BadConfig naming the key.
class Config {
 public:
  Config();  // all defaults

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);
  const std::string& raw(std::string_view key) const;

  std::string get_string(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;  // positive
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  ModelConfig model() const;
  TrainConfig train() const;
  WindowSpec windows() const;
  std::uint64_t seed() const;

  std::string to_text() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace uniedge
