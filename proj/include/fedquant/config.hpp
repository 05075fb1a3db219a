#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedquant/federation.hpp"

namespace fedquant {

// Experiment configuration file: JSON with a fixed schema, validated
// strictly (unknown keys are errors, every message names the offending
// field by its dotted path). Shipped presets cover the common setups; a
// preset is just a parsed config and can be dumped back to JSON.

enum class DataKind : std::uint8_t { synthetic, idx };

struct SyntheticSpec {
    std::uint32_t classes = 4;
    std::uint32_t per_class = 150;      // training samples per class
    std::uint32_t test_per_class = 40;
    std::uint32_t feature_dim = 16;
    float spread = 0.35f;
};

struct IdxSpec {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
};

struct CostGrid {
    std::vector<std::uint32_t> bucket_levels = {64, 128};
    std::vector<std::uint32_t> qsgd_levels = {64, 128};
    std::uint32_t refresh_period = 10;
    std::uint32_t boundary_bits = 16;
};

struct SweepSpec {
    std::string axis;           // "alpha" | "levels" | "seeds"; empty = none
    std::vector<double> values; // axis values (levels/seeds must be integers)
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

struct ExperimentSpec {
    std::vector<std::uint32_t> model_widths = {16, 24, 4};
    DataKind data_kind = DataKind::synthetic;
    SyntheticSpec synthetic;
    IdxSpec idx;
    FederationConfig federation;
    CostGrid cost;
    SweepSpec sweep;
    std::string out_dir; // optional; flags and environment can override
};

// Parses and validates config text; `origin` names the source in errors
// (file path or preset name). Throws config_error.
ExperimentSpec parse_config_text(const std::string& text, const std::string& origin);

ExperimentSpec load_config_file(const std::string& path);

// Built-in presets: "synthetic-smoke", "mnist-reference", "dirichlet-sweep".
ExperimentSpec load_preset(const std::string& name);
std::vector<std::string> preset_names();
// The preset's JSON source, byte-for-byte what parse_config_text consumes.
std::string preset_text(const std::string& name);

// Canonical JSON echo of a parsed spec (stable key order, used in the
// reproducibility manifest).
std::string config_to_json(const ExperimentSpec& spec);

// Train/test pair described by the data section. Synthetic data derives
// from the federation seed ("data" / "data-test" streams).
std::pair<Dataset, Dataset> load_datasets(const ExperimentSpec& spec);

} // namespace fedquant
