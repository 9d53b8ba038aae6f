#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "typeblend/backends.hpp"
#include "typeblend/blend.hpp"
#include "typeblend/glyph.hpp"
#include "typeblend/imagery.hpp"
#include "typeblend/priors.hpp"
#include "typeblend/spectrum.hpp"
#include "typeblend/vector.hpp"

namespace typeblend {

enum class CandidateOrigin { generate, refine };
std::string_view to_string(CandidateOrigin o);
CandidateOrigin candidate_origin_from_string(std::string_view s);

struct GalleryItem {
  std::string id;
  blend::ScoredCandidate candidate;
  CandidateOrigin origin = CandidateOrigin::generate;
  int generation = 0;  // which generate call produced it (refinements inherit)
};

struct SpectrumRecord {
  std::string candidate_id;
  spectrum::SpectrumPosition position;
  std::optional<double> target;  // set for refinements
};

struct GenerationSettings {
  std::string prompt;
  std::string negative_prompt;
  double strength = backends::kDefaultStrength;
  int rounds = blend::kDefaultRounds;
  int candidates_per_round = blend::kDefaultCandidatesPerRound;
  std::uint64_t seed = 0;
};

struct SessionState {
  std::string id;
  std::string created_at;
  std::string updated_at;

  std::string topic;
  std::vector<backends::Idea> ideas;

  std::optional<glyph::RenderedTypeface> typeface;
  std::optional<glyph::TypefaceSelection> selection;
  std::optional<Image> imagery_source;
  std::optional<imagery::ImagerySelection> imagery;

  priors::PriorSelection flags;
  priors::DesignPriors priors;
  GenerationSettings generation;
  int generation_count = 0;
  std::vector<std::string> warnings;  // from the last generation

  std::vector<GalleryItem> gallery;
  spectrum::FeedbackLog feedback;
  std::vector<SpectrumRecord> spectrum_history;
  std::optional<std::string> current;  // candidate id

  std::optional<vector::VectorDesign> design;
  std::optional<std::string> design_source;  // candidate id the design was traced from

  std::uint64_t next_seed = 0;
  int next_candidate = 1;

  const GalleryItem* find(std::string_view candidate_id) const;
  // Throws Error(not_found) for an unknown id.
  const GalleryItem& at(std::string_view candidate_id) const;
  std::map<std::string, Image> gallery_images() const;
  // Throws Error(conflict) on a broken reference or duplicate id.
  void validate() const;
};

// Sessions live in memory and, when a root directory is given, in
// <root>/<id>/state.json plus PNG blobs. Every committed mutation is on disk
// before mutate() returns.
class SessionStore {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;
  using IdSource = std::function<std::string()>;

  explicit SessionStore(std::filesystem::path root = {}, Clock clock = {}, IdSource ids = {});

  std::string create();
  bool contains(std::string_view id) const;
  std::vector<std::string> ids() const;

  // fn runs on a copy under the session's exclusive lock; the copy replaces
  // the state only if fn returns normally.
  void mutate(std::string_view id, const std::function<void(SessionState&)>& fn);
  // Shared lock; readers run concurrently with each other.
  void read(std::string_view id, const std::function<void(const SessionState&)>& fn) const;
  SessionState snapshot(std::string_view id) const;

  const std::filesystem::path& root() const { return root_; }
  std::string now() const;

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    SessionState state;
  };
  std::shared_ptr<Entry> entry(std::string_view id) const;
  void persist(const SessionState& s) const;
  void load_all();

  std::filesystem::path root_;
  Clock clock_;
  IdSource ids_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>, std::less<>> sessions_;
};

std::string iso8601(std::chrono::system_clock::time_point t);

// JSON text of the state with rasters inlined as base64 PNG.
std::string session_to_json(const SessionState& s);
SessionState session_from_json(std::string_view text);

}  // namespace typeblend
