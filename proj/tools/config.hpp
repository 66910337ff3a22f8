#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcdiff/randfield.hpp"
#include "qcdiff/scheme.hpp"

namespace qcdiff::cli {

// Config problems carry the offending field path so the exit-2 diagnostic
// can name it.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& msg)
      : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

struct ExperimentConfig {
  Scheme scheme = Scheme::fibonacci();
  Window window{0};
  std::shared_ptr<FieldSampler> sampler;
  std::string sampler_kind;

  std::vector<double> radii; // strictly increasing van Hove radii
  double k_min = 0.0, k_max = 1.0;
  std::size_t k_count = 2;
  double peak_threshold = 0.05;
  double candidate_radius = 3.0;
  std::size_t seed_count = 1;
  std::uint64_t seed_base = 1;
  std::string out_dir = "out";

  std::optional<DependencySet> partition_dset; // defaults to the sampler's d-set
  std::optional<Coords> partition_g;           // defaults to the largest d-set element

  std::string hash_hex; // hash of the raw config bytes, echoed into outputs
};

// FNV-1a over the raw bytes; what output files cite in their header line.
std::string config_hash_hex(const std::string& text);

ExperimentConfig parse_config(const std::string& text); // throws ConfigError
ExperimentConfig load_config(const std::string& path);  // throws ConfigError

} // namespace qcdiff::cli
