#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/image.hpp"
#include "typeblend/imagery.hpp"
#include "typeblend/priors.hpp"

namespace typeblend::blend {

inline constexpr double kDefaultLambda = 0.5;
inline constexpr int kDefaultRounds = 4;
inline constexpr int kDefaultCandidatesPerRound = 4;

enum class VarianceMode {
  within_candidate,   // variance of each candidate's own scores
  across_candidates,  // variance of the per-candidate score sums over the set
};

std::string_view to_string(VarianceMode m);
VarianceMode variance_mode_from_string(std::string_view s);

struct DiscriminationConfig {
  double lambda = kDefaultLambda;
  VarianceMode variance = VarianceMode::within_candidate;
  void validate() const;
};

struct ScoreSet {
  double s1 = 0.0;
  double s2 = 0.0;
  std::optional<double> s3;
};

struct BlendRequest {
  Image typeface;                      // I_t
  imagery::ImagerySelection imagery;   // I_i
  std::string user_prompt;             // T_p, may be empty
  std::string negative_prompt;
  priors::PriorSelection flags;
  priors::DesignPriors priors;
  double strength = backends::kDefaultStrength;
  int rounds = kDefaultRounds;
  int candidates_per_round = kDefaultCandidatesPerRound;
  std::uint64_t seed = 0;
  std::vector<Image> positive_refs;
  std::vector<Image> negative_refs;

  void validate() const;
};

struct ScoredCandidate {
  Image image;
  double s1 = 0.0;
  double s2 = 0.0;
  std::optional<double> s3;
  double f = 0.0;
  int round = 0;
  std::uint64_t seed = 0;
  std::string prompt;

  ScoreSet scores() const { return {s1, s2, s3}; }
};

struct BlendResult {
  std::vector<ScoredCandidate> winners;  // one per completed round
  std::vector<std::vector<ScoredCandidate>> rounds;  // every scored candidate
  std::vector<std::string> warnings;
};

// Scene, style and user prompt joined with ", "; words already used by an
// earlier part are dropped (case-insensitive).
std::string compose_prompt(const BlendRequest& req);
std::string compose_prompt(std::span<const std::string> parts);

// Dark-on-light saliency: Otsu threshold on luma, then a 3x3 closing.
// Transparent pixels count as white.
Mask saliency(const Image& image);
int otsu_threshold(const Image& image);
Mask close3x3(const Mask& mask);
double mask_agreement(const Mask& a, const Mask& b);

double typeface_score(const Image& typeface, const Image& candidate);
double cosine_to_unit(double cosine);
double imagery_score(const backends::Embedder& embedder, const Image& imagery, const Image& candidate);
double prompt_score(const backends::Embedder& embedder, std::string_view prompt, const Image& candidate);

double population_variance(std::span<const double> values);
std::vector<double> aggregate(std::span<const ScoreSet> scores, const DiscriminationConfig& cfg = {});

// Index of the best f; ties go to the lowest seed.
std::size_t select_winner(std::span<const ScoredCandidate> candidates);

// Image passed to the generator: the deformed outline raster when the shape
// prior is on, the typeface image otherwise.
Image init_image(const BlendRequest& req);

BlendResult run_blend(const BlendRequest& req, const backends::Backends& backends,
                      const DiscriminationConfig& cfg = {});

}  // namespace typeblend::blend
