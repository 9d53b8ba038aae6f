#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/blend.hpp"
#include "typeblend/error.hpp"
#include "typeblend/glyph.hpp"
#include "typeblend/priors.hpp"
#include "typeblend/service.hpp"

namespace typeblend {

// A configuration problem; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorCode::invalid_input, "config field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
EnvLookup process_env();

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<bool> mock_backends;
};

struct PipelineConfig {
  std::string text;
  std::string font_id;
  int canvas_size = kDefaultCanvasSize;
  std::vector<Rect> boxes;  // empty: the whole canvas
  glyph::Mapping mapping = glyph::Mapping::one_to_one;

  std::filesystem::path image;
  std::vector<backends::SegmentPrompt> prompts;

  std::string prompt;
  std::string negative_prompt;
  priors::PriorSelection flags;
  double strength = backends::kDefaultStrength;
  int rounds = blend::kDefaultRounds;
  int candidates_per_round = blend::kDefaultCandidatesPerRound;
  std::uint64_t seed = 0;
  blend::DiscriminationConfig discrimination;

  std::filesystem::path fonts_dir;
  std::filesystem::path style_db;
  std::filesystem::path mock_fixtures;
  std::filesystem::path out = "typeblend-out";
  bool mock_backends = true;
};

// Reads a JSON config. Precedence per setting: CLI flag > environment
// (TYPEBLEND_SEED, TYPEBLEND_OUT, TYPEBLEND_MOCK_BACKENDS, TYPEBLEND_DATA_DIR)
// > config file > default. Relative paths resolve against the config file.
PipelineConfig load_pipeline_config(const std::filesystem::path& file, const CliOverrides& cli,
                                    const std::filesystem::path& default_data_dir,
                                    const EnvLookup& env = process_env());

// Mock backends from the fixture file, or remote backends from BACKEND_* env.
backends::Backends make_backends(bool mock, const std::filesystem::path& mock_fixtures);

struct PipelineSummary {
  std::vector<std::filesystem::path> files;  // relative to the output directory, sorted
  std::vector<std::string> warnings;
  int best_round = 0;
};

// Writes the typeface parts, imagery cutout, priors, one winner per round
// (PNG + JSON sidecar), the composed logo, its vector design and the
// spectrum evaluation of every winner.
PipelineSummary run_pipeline(const PipelineConfig& cfg, const backends::Backends& backends);

}  // namespace typeblend
