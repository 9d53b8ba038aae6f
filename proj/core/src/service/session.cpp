#include "typeblend/session.hpp"

#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "typeblend/error.hpp"
#include "wire.hpp"

namespace typeblend {

std::string_view to_string(CandidateOrigin o) { return o == CandidateOrigin::generate ? "generate" : "refine"; }

CandidateOrigin candidate_origin_from_string(std::string_view s) {
  if (s == "generate") return CandidateOrigin::generate;
  if (s == "refine") return CandidateOrigin::refine;
  throw Error(ErrorCode::invalid_input, "unknown candidate origin '" + std::string(s) + "'");
}

const GalleryItem* SessionState::find(std::string_view candidate_id) const {
  for (const auto& g : gallery)
    if (g.id == candidate_id) return &g;
  return nullptr;
}

const GalleryItem& SessionState::at(std::string_view candidate_id) const {
  const auto* g = find(candidate_id);
  if (!g) throw Error(ErrorCode::not_found, "unknown candidate '" + std::string(candidate_id) + "'");
  return *g;
}

std::map<std::string, Image> SessionState::gallery_images() const {
  std::map<std::string, Image> out;
  for (const auto& g : gallery) out.emplace(g.id, g.candidate.image);
  return out;
}

void SessionState::validate() const {
  std::set<std::string> seen;
  for (const auto& g : gallery)
    if (!seen.insert(g.id).second) throw Error(ErrorCode::conflict, "duplicate candidate id " + g.id);
  if (current && !find(*current)) throw Error(ErrorCode::conflict, "current candidate " + *current + " is not in the gallery");
  if (design && (!design_source || !find(*design_source)))
    throw Error(ErrorCode::conflict, "design does not reference a gallery candidate");
  for (const auto& id : feedback.positives)
    if (!find(id)) throw Error(ErrorCode::conflict, "feedback names unknown candidate " + id);
  for (const auto& id : feedback.negatives)
    if (!find(id)) throw Error(ErrorCode::conflict, "feedback names unknown candidate " + id);
  feedback.validate();
}

std::string iso8601(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

std::string session_to_json(const SessionState& s) {
  wire::InlineRasters r;
  return wire::session(s, r).dump();
}

SessionState session_from_json(std::string_view text) {
  wire::InlineRasters r;
  try {
    return wire::session(wire::json::parse(text), r);
  } catch (const wire::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("invalid session JSON: ") + e.what());
  }
}

namespace {

std::string random_id() {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  return true;
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path root, Clock clock, IdSource ids)
    : root_(std::move(root)), clock_(std::move(clock)), ids_(std::move(ids)) {
  if (!clock_) clock_ = [] { return std::chrono::system_clock::now(); };
  if (!ids_) ids_ = random_id;
  if (!root_.empty()) {
    std::filesystem::create_directories(root_);
    load_all();
  }
}

std::string SessionStore::now() const { return iso8601(clock_()); }

void SessionStore::load_all() {
  for (const auto& dir : std::filesystem::directory_iterator(root_)) {
    const auto state = dir.path() / "state.json";
    if (!dir.is_directory() || !std::filesystem::exists(state)) continue;
    try {
      std::ifstream in(state);
      std::stringstream ss;
      ss << in.rdbuf();
      wire::BlobRasters blobs(dir.path() / "blobs");
      auto e = std::make_shared<Entry>();
      e->state = wire::session(wire::json::parse(ss.str()), blobs);
      sessions_[e->state.id] = std::move(e);
    } catch (const std::exception& ex) {
      std::cerr << "typeblend: skipping unreadable session " << dir.path() << ": " << ex.what() << "\n";
    }
  }
}

void SessionStore::persist(const SessionState& s) const {
  if (root_.empty()) return;
  const auto dir = root_ / s.id;
  std::filesystem::create_directories(dir);
  wire::BlobRasters blobs(dir / "blobs");
  const std::string text = wire::session(s, blobs).dump(1);
  const auto tmp = dir / "state.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, dir / "state.json");
}

std::string SessionStore::create() {
  auto e = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard lock(map_mutex_);
    do id = ids_();
    while (sessions_.count(id));
    if (!valid_id(id)) throw Error(ErrorCode::invalid_argument, "session id source produced '" + id + "'");
    e->state.id = id;
    e->state.created_at = e->state.updated_at = now();
    sessions_[id] = e;
  }
  std::unique_lock lock(e->mutex);
  persist(e->state);
  return id;
}

bool SessionStore::contains(std::string_view id) const {
  std::lock_guard lock(map_mutex_);
  return sessions_.find(id) != sessions_.end();
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(map_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(std::string_view id) const {
  std::lock_guard lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + std::string(id) + "'");
  return it->second;
}

void SessionStore::mutate(std::string_view id, const std::function<void(SessionState&)>& fn) {
  const auto e = entry(id);
  std::unique_lock lock(e->mutex);
  SessionState next = e->state;
  fn(next);
  next.validate();
  next.updated_at = now();
  persist(next);
  e->state = std::move(next);
}

void SessionStore::read(std::string_view id, const std::function<void(const SessionState&)>& fn) const {
  const auto e = entry(id);
  std::shared_lock lock(e->mutex);
  fn(e->state);
}

SessionState SessionStore::snapshot(std::string_view id) const {
  SessionState out;
  read(id, [&](const SessionState& s) { out = s; });
  return out;
}

}  // namespace typeblend
