#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rflab::cli {

using ParamValue =
    std::variant<std::int64_t, double, bool, std::string, std::vector<std::int64_t>, std::vector<double>>;

enum class ParamType { integer, real, boolean, text, int_list, real_list };

struct ParamSpec {
  std::string name;  // JSON key; the flag is --name with '_' replaced by '-'
  ParamType type;
  ParamValue default_value;
  std::string help;
};

/// Bad config file, bad flag value or unknown key.  Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string subcommand;
  std::map<std::string, ParamValue> params;
  std::uint64_t seed = 0;
  std::string out = "out";
  int jobs = 1;

  std::int64_t get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_text(const std::string& key) const;
  const std::vector<std::int64_t>& get_int_list(const std::string& key) const;
  const std::vector<double>& get_real_list(const std::string& key) const;

  /// Flat JSON object: seed, then the parameters in name order; out and jobs when
  /// `runtime` is set.  from_json(to_json(true)) reproduces the config.
  std::string to_json(bool runtime = true) const;
};

std::vector<std::string> subcommand_names();
/// Throws ConfigError for an unknown subcommand.
const std::vector<ParamSpec>& parameters(const std::string& subcommand);

/// Defaults, with the seed taken from RF_LAB_SEED when set.
ExperimentConfig default_config(const std::string& subcommand);

/// Overlays a JSON object onto cfg.  Unknown keys, type mismatches and syntax errors
/// (reported with line and column) throw ConfigError.
void apply_json(ExperimentConfig& cfg, std::string_view text);

/// default_config overlaid with the file.
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& subcommand);

/// Parses a flag value ("3", "0.5", "true", "64,256") into the parameter's type.
ParamValue parse_value(const ParamSpec& spec, const std::string& raw);

/// Full command-line entry point: 0 success, 1 usage or config error, 2 invariant violation.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace rflab::cli
