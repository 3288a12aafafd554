#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "platelab/core/keyvalue.hpp"
#include "platelab/geometry/domain.hpp"
#include "platelab/material/plate.hpp"
#include "platelab/plate_solver/couple.hpp"
#include "platelab/plate_solver/plate_grid.hpp"
#include "platelab/plate_solver/solver.hpp"
#include "platelab/stability_lab/stability.hpp"

namespace platelab::cli {

struct KeyInfo {
  std::string key;
  std::string fallback;  // empty when required or unset
  std::string help;
};

// Every key an experiment config may contain.
const std::vector<KeyInfo>& config_keys();
std::string config_help();

struct InvertSettings {
  int k_modes = 2;
  int budget = 500;
  int restarts = 3;
  std::uint64_t seed = 0;
  double data_resolution_factor = 2.0;
  std::optional<std::vector<double>> init;
  std::optional<std::vector<double>> truth;
  std::optional<std::filesystem::path> data;
};

struct SweepSettings {
  std::string family = "dilation";
  std::vector<double> sizes;
  geometry::Vec2 direction{1.0, 0.0};
  double data_resolution_factor = 2.0;
  double noise = 0.0;
};

struct VerifySettings {
  std::optional<geometry::Vec2> point;
  std::vector<double> radii;
  std::vector<double> ladder;
  std::vector<double> boundary_ladder;
  std::vector<double> fractions;
  std::vector<double> rhos;
  std::size_t max_centers = 400;
  stability_lab::Trials trials;
};

struct ExperimentConfig {
  ExperimentConfig(geometry::GeometrySpec g, material::IsotropicPlate p, plate_solver::CoupleField c)
      : geometry(std::move(g)), plate(std::move(p)), couple(std::move(c)) {}

  KeyValueDocument document;
  std::filesystem::path path;
  std::filesystem::path geometry_file;
  std::filesystem::path material_file;
  std::optional<std::filesystem::path> couple_file;
  geometry::GeometrySpec geometry;
  material::IsotropicPlate plate;
  plate_solver::CoupleField couple;
  plate_solver::GridOptions grid;
  plate_solver::SolverOptions solver;
  std::size_t trace_samples = 256;
  double trace_noise = 0.0;
  std::vector<double> energy_levels;
  InvertSettings invert;
  SweepSettings sweep;
  VerifySettings verify;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  // Input files that feed the experiment (for the manifest).
  std::vector<std::filesystem::path> inputs() const;
};

// Parses and validates; relative paths resolve against the config directory.
// Throws ConfigError naming the key or file at fault.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_document(const KeyValueDocument& doc, const std::filesystem::path& base_dir);

std::string sha256_file(const std::filesystem::path& path);
// JSON {"inputs": [{"path", "sha256"}...]} with paths as given.
std::string manifest_json(const std::vector<std::filesystem::path>& files);

}  // namespace platelab::cli
