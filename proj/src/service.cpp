#include "streamclust/service.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "streamclust/timefmt.hpp"

namespace streamclust {

namespace {

TextPipeline make_text(const ServiceConfig& config) {
  config.validate();
  StopwordSet stopwords = config.stopwords_path ? StopwordSet::load(*config.stopwords_path) : StopwordSet::english();
  IdfModel idf = config.idf_path ? IdfModel::load(*config.idf_path) : IdfModel{};
  return TextPipeline(std::move(stopwords), std::move(idf));
}

Json optional_label(const std::optional<Label>& l) { return l ? Json(*l) : Json(nullptr); }

Json summary_json(const TopicSummary& s) {
  return {{"id", s.id},         {"label", s.label},       {"new_terms", s.new_terms}, {"size", s.size},
          {"timeline", s.timeline}, {"color", s.color}, {"prev_id", optional_label(s.prev_id)}};
}

Json delta_json(const UpdateDelta& d) {
  Json prev = Json::array();
  for (const auto& p : d.prev) {
    Json moved = Json::array();
    for (const auto& f : p.moved_out) moved.push_back({{"target", f.target}, {"count", f.count}});
    prev.push_back({{"topic", p.topic},
                    {"matched", optional_label(p.matched)},
                    {"prev_size", p.prev_size},
                    {"retained", p.retained},
                    {"removed", p.removed},
                    {"moved_out", std::move(moved)}});
  }
  Json curr = Json::array();
  for (const auto& c : d.curr)
    curr.push_back({{"topic", c.topic},
                    {"matched", optional_label(c.matched)},
                    {"size", c.size},
                    {"retained", c.retained},
                    {"moved_in", c.moved_in},
                    {"added", c.added}});
  return {{"first", d.first},
          {"prev", std::move(prev)},
          {"curr", std::move(curr)},
          {"unmatched_prev", d.unmatched_prev},
          {"unmatched_curr", d.unmatched_curr}};
}

Json overview_json(const TopicOverviewState& s) {
  Json summaries = Json::array();
  for (const auto& t : s.summaries) summaries.push_back(summary_json(t));
  return {{"update", s.update}, {"summaries", std::move(summaries)}, {"delta", delta_json(s.delta)}};
}

Json filter_json(const Filter& f) {
  if (const auto* q = std::get_if<QueryFilter>(&f)) {
    std::string query;
    for (const auto& t : q->terms) query += (query.empty() ? "" : " ") + t;
    return {{"type", "search"}, {"query", query}};
  }
  return {{"type", "topics"}, {"topics", std::get<CentroidFilter>(f).selected}};
}

[[noreturn]] void fail(std::string kind, std::string message) {
  throw CommandError{std::move(kind), std::move(message)};
}

// Fields a delta carries; everything in the view except the session block
// and the post texts.
constexpr const char* kUpdateFields[] = {"update",           "window",      "summaries",       "delta",
                                         "selection",        "phrases",     "phrase_selection", "highlighted",
                                         "representatives",  "pending",     "coverage",        "history"};

void prune_posts(Json& view) {
  std::set<std::string> keep;
  for (const auto& r : view["representatives"]) keep.insert(r.at("post_id").get<std::string>());
  Json posts = Json::object();
  for (auto it = view["posts"].begin(); it != view["posts"].end(); ++it)
    if (keep.count(it.key())) posts[it.key()] = it.value();
  view["posts"] = std::move(posts);
}

}  // namespace

// ---- events ----------------------------------------------------------------

Json ClientEvent::to_json() const { return {{"seq", seq}, {"kind", kind}, {"payload", payload}}; }

ClientEvent ClientEvent::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("seq") || !j.contains("kind") || !j.contains("payload"))
    throw std::invalid_argument("event: expected seq, kind and payload");
  ClientEvent e;
  e.seq = j["seq"].get<std::uint64_t>();
  e.kind = j["kind"].get<std::string>();
  e.payload = j["payload"];
  if (e.kind != "snapshot" && e.kind != "delta" && e.kind != "session")
    throw std::invalid_argument("event: unknown kind " + e.kind);
  return e;
}

void apply_event(Json& view, const ClientEvent& event) {
  if (event.kind == "snapshot") {
    view = event.payload;
  } else if (event.kind == "session") {
    view["session"] = event.payload.at("session");
  } else if (event.kind == "delta") {
    for (const char* key : kUpdateFields) view[key] = event.payload.at(key);
    if (!view.contains("posts") || !view["posts"].is_object()) view["posts"] = Json::object();
    for (auto it = event.payload.at("new_posts").begin(); it != event.payload.at("new_posts").end(); ++it)
      view["posts"][it.key()] = it.value();
    prune_posts(view);
  } else {
    throw std::invalid_argument("event: unknown kind " + event.kind);
  }
}

std::string state_hash(const Json& view) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : view.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- engine ----------------------------------------------------------------

Engine::Engine(ServiceConfig config) : Engine(config, make_text(config)) {}

Engine::Engine(ServiceConfig config, TextPipeline text)
    : config_(std::move(config)),
      text_(std::move(text)),
      window_(config_.window),
      ingestor_(text_, window_, config_.lang_filter),
      tree_(config_.pipeline) {
  config_.validate();
  views_[tree_.active().id()] = {};
  view_ = build_view();
}

Engine::SessionView& Engine::active_view() { return views_[tree_.active().id()]; }

std::vector<DocumentPtr> Engine::selection_posts() const {
  const Session& s = tree_.active();
  std::vector<DocumentPtr> out;
  if (s.selection().empty()) return out;
  for (auto i : s.selection_indices()) out.push_back(s.items().docs[i]);
  return out;
}

void Engine::refresh_phrases() {
  SessionView& sv = active_view();
  const auto posts = selection_posts();
  if (posts.empty()) {
    sv.phrases.clear();
  } else {
    const auto& items = tree_.active().items();
    sv.phrases = summarize_phrases(posts, items.start, items.end, text_, sv.phrases, config_.phrases);
  }
  std::vector<std::string> kept;
  for (const auto& p : sv.phrase_selection)
    if (std::any_of(sv.phrases.begin(), sv.phrases.end(), [&](const PhraseStats& s) { return s.display == p; }))
      kept.push_back(p);
  sv.phrase_selection = std::move(kept);
}

void Engine::update_active(const WindowSnapshot& snapshot, bool keep_pending) {
  Session& s = tree_.active();
  const Json prev_posts = view_.value("posts", Json::object());
  const UpdateResult result = s.run_update(snapshot, text_.vocabulary());
  SessionView& sv = active_view();

  std::set<std::string> current;
  for (const auto& r : s.representatives()) current.insert(r.post_id());
  std::vector<std::string> pending;
  if (keep_pending)
    for (const auto& id : sv.pending)
      if (current.count(id)) pending.push_back(id);
  if (!result.empty && !result.delta.first)
    for (auto r : result.new_representatives) {
      const auto& id = result.representatives[r].post_id();
      if (std::find(pending.begin(), pending.end(), id) == pending.end()) pending.push_back(id);
    }
  sv.pending = std::move(pending);
  if (sv.history_index && *sv.history_index >= s.history_size())
    sv.history_index = s.history_size() ? std::optional<std::size_t>(s.history_size() - 1) : std::nullopt;
  refresh_phrases();

  view_ = build_view();
  Json payload = Json::object();
  for (const char* key : kUpdateFields) payload[key] = view_[key];
  Json fresh = Json::object();
  for (auto it = view_["posts"].begin(); it != view_["posts"].end(); ++it)
    if (!prev_posts.contains(it.key())) fresh[it.key()] = it.value();
  payload["new_posts"] = std::move(fresh);
  publish("delta", payload);
}

Json Engine::session_json() const {
  const Session& s = tree_.active();
  Json filters = Json::array();
  for (const auto& f : s.filters()) filters.push_back(filter_json(f));
  Json path = Json::array();
  for (std::size_t d = 0; d <= tree_.depth(); ++d) path.push_back(tree_.at_depth(d).id());
  return {{"id", s.id()},
          {"parent", s.parent() ? Json(*s.parent()) : Json(nullptr)},
          {"depth", tree_.depth()},
          {"path", std::move(path)},
          {"filters", std::move(filters)}};
}

Json Engine::build_view() const {
  const Session& s = tree_.active();
  const SessionView& sv = views_.at(s.id());
  const auto& items = s.items();
  const auto& selection = s.selection();

  Json summaries = Json::array();
  for (const auto& t : s.summaries()) summaries.push_back(summary_json(t));

  Json phrases = Json::array();
  for (const auto& p : sv.phrases)
    phrases.push_back({{"display", p.display},
                       {"doc_freq", p.doc_freq},
                       {"score", p.score},
                       {"temporal", p.temporal},
                       {"barcode", p.barcode},
                       {"is_new", p.is_new}});

  Json highlighted = Json::array();
  if (!sv.phrase_selection.empty()) {
    const auto posts = selection_posts();
    std::vector<std::vector<TokenId>> chosen;
    for (const auto& name : sv.phrase_selection)
      for (const auto& p : sv.phrases)
        if (p.display == name) chosen.push_back(p.tokens);
    for (auto i : phrase_intersection(chosen, posts)) highlighted.push_back(posts[i]->post.id);
  }

  Json reps = Json::array();
  Json posts = Json::object();
  std::set<std::string> shown;
  for (const auto& r : s.representatives()) {
    if (!std::binary_search(selection.begin(), selection.end(), r.topic)) continue;
    const std::size_t color = r.topic < s.summaries().size() ? s.summaries()[r.topic].color : 0;
    reps.push_back({{"post_id", r.post_id()},
                    {"subtopic", r.subtopic},
                    {"terms", r.subtopic_terms},
                    {"topic", r.topic},
                    {"color", color},
                    {"similarity", r.similarity},
                    {"similar_count", r.similar_count},
                    {"is_new", r.is_new}});
    posts[r.post_id()] = {{"text", r.doc->post.text}, {"published_at", r.doc->post.effective_date()}};
    shown.insert(r.post_id());
  }
  Json pending = Json::array();
  for (const auto& id : sv.pending)
    if (shown.count(id)) pending.push_back(id);

  CoverageHistogram cov{};
  if (!selection.empty()) cov = s.selection_coverage();

  return {{"session", session_json()},
          {"update", s.updates()},
          {"window", {{"start", items.start}, {"end", items.end}, {"size", items.size()}}},
          {"summaries", std::move(summaries)},
          {"delta", delta_json(s.delta())},
          {"selection", selection},
          {"phrases", std::move(phrases)},
          {"phrase_selection", sv.phrase_selection},
          {"highlighted", std::move(highlighted)},
          {"representatives", std::move(reps)},
          {"pending", std::move(pending)},
          {"coverage", cov},
          {"history",
           {{"size", s.history_size()},
            {"index", sv.history_index ? Json(*sv.history_index) : Json(nullptr)}}},
          {"posts", std::move(posts)}};
}

void Engine::publish(const std::string& kind, const Json& payload) {
  for (auto& [handle, sub] : subscribers_) sub.listener(ClientEvent{++sub.seq, kind, payload});
}

void Engine::publish_snapshot() { publish("snapshot", view_); }

void Engine::tick(Timestamp now) {
  std::lock_guard lock(mutex_);
  window_.evict_expired(now);
  last_snapshot_ = window_.snapshot();
  update_active(last_snapshot_, true);
}

Json Engine::handle_command(const Json& command) {
  std::lock_guard lock(mutex_);
  try {
    return {{"ok", true}, {"data", run_command(command)}};
  } catch (const CommandError& e) {
    return {{"ok", false}, {"error", e.kind}, {"message", e.message}};
  } catch (const Json::exception& e) {
    return {{"ok", false}, {"error", "invalid"}, {"message", e.what()}};
  }
}

Json Engine::run_command(const Json& command) {
  if (!command.is_object() || !command.contains("cmd") || !command["cmd"].is_string())
    fail("invalid", "expected {\"cmd\": ...}");
  const std::string cmd = command["cmd"].get<std::string>();
  Session& s = tree_.active();
  if (command.contains("update") && command["update"].get<std::uint64_t>() != s.updates())
    fail("stale", "command refers to update " + command["update"].dump() + ", current is " +
                      std::to_string(s.updates()));
  SessionView& sv = active_view();

  // Mutations acknowledge on the session channel, then resend the view.
  const auto announce = [&](const std::string& action) {
    view_ = build_view();
    publish("session", {{"action", action}, {"session", view_["session"]}});
    publish_snapshot();
  };

  if (cmd == "select_topics") {
    std::vector<Label> topics;
    for (const auto& t : command.at("topics")) {
      const auto v = t.get<std::int64_t>();
      if (v < 0) fail("stale", "unknown topic " + t.dump());
      topics.push_back(static_cast<Label>(v));
    }
    try {
      s.select(std::move(topics));
    } catch (const std::out_of_range& e) {
      fail("stale", e.what());
    }
    sv.phrase_selection.clear();
    refresh_phrases();
    for (auto& p : sv.phrases) p.is_new = false;
    announce(cmd);
    return {{"selection", s.selection()}};
  }
  if (cmd == "select_phrases") {
    std::vector<std::string> chosen;
    for (const auto& p : command.at("phrases")) {
      const auto name = p.get<std::string>();
      if (std::none_of(sv.phrases.begin(), sv.phrases.end(), [&](const PhraseStats& x) { return x.display == name; }))
        fail("stale", "unknown phrase '" + name + "'");
      if (std::find(chosen.begin(), chosen.end(), name) == chosen.end()) chosen.push_back(name);
    }
    sv.phrase_selection = std::move(chosen);
    announce(cmd);
    return {{"phrase_selection", sv.phrase_selection}, {"highlighted", view_["highlighted"]}};
  }
  if (cmd == "dive_in" || cmd == "search") {
    try {
      if (cmd == "dive_in") {
        if (s.selection().empty()) fail("rejected", "dive_in needs a topic selection");
        tree_.dive_in(s.selection());
      } else {
        tree_.search(command.at("query").get<std::string>(), text_);
      }
    } catch (const std::invalid_argument& e) {
      fail("rejected", e.what());
    }
    views_[tree_.active().id()] = {};
    announce(cmd);
    // The child clusters the most recent snapshot right away.
    update_active(last_snapshot_, false);
    return {{"session", view_["session"]}};
  }
  if (cmd == "go_back") {
    const auto child = s.id();
    if (!tree_.go_back()) fail("rejected", "already at the root session");
    views_.erase(child);
    announce(cmd);
    return {{"session", view_["session"]}};
  }
  if (cmd == "set_history") {
    const Json& idx = command.at("index");
    if (idx.is_null()) {
      sv.history_index.reset();
      announce(cmd);
      return Json::object();
    }
    const auto i = idx.get<std::int64_t>();
    if (i < 0 || static_cast<std::size_t>(i) >= s.history_size()) fail("stale", "history index out of range");
    sv.history_index = static_cast<std::size_t>(i);
    announce(cmd);
    return {{"index", i}, {"state", overview_json(s.history_at(static_cast<std::size_t>(i)))}};
  }
  if (cmd == "get_similar") {
    const auto id = command.at("rep").get<std::string>();
    const auto& reps = s.representatives();
    const auto it = std::find_if(reps.begin(), reps.end(), [&](const RepresentativeItem& r) { return r.post_id() == id; });
    if (it == reps.end()) fail("stale", "unknown representative " + id);
    Json posts = Json::array();
    for (const auto& p : s.similar_to(static_cast<std::size_t>(it - reps.begin()))) {
      const auto& doc = *s.items().docs[p.index];
      posts.push_back({{"id", doc.post.id},
                       {"text", doc.post.text},
                       {"published_at", doc.post.effective_date()},
                       {"similarity", p.similarity}});
    }
    return {{"rep", id}, {"posts", std::move(posts)}};
  }
  if (cmd == "insert_new_reps") {
    Json inserted = view_["pending"];
    sv.pending.clear();
    announce(cmd);
    return {{"inserted", std::move(inserted)}};
  }
  fail("invalid", "unknown command " + cmd);
}

Json Engine::view() const {
  std::lock_guard lock(mutex_);
  return view_;
}

std::string Engine::view_hash() const { return state_hash(view()); }

std::uint64_t Engine::update_count() const {
  std::lock_guard lock(mutex_);
  return tree_.active().updates();
}

std::size_t Engine::session_depth() const {
  std::lock_guard lock(mutex_);
  return tree_.depth();
}

std::uint64_t Engine::subscribe(Listener listener) {
  std::lock_guard lock(mutex_);
  const auto handle = next_handle_++;
  auto& sub = subscribers_[handle];
  sub.listener = std::move(listener);
  sub.listener(ClientEvent{++sub.seq, "snapshot", view_});
  return handle;
}

void Engine::unsubscribe(std::uint64_t handle) {
  std::lock_guard lock(mutex_);
  subscribers_.erase(handle);
}

Engine::Listener event_recorder(std::ostream& out) {
  return [&out](const ClientEvent& e) { out << e.to_json().dump() << '\n' << std::flush; };
}

// ---- headless replay -------------------------------------------------------

std::string format_update(const Json& view) {
  std::ostringstream os;
  const auto& w = view.at("window");
  os << "update " << view.at("update").get<std::uint64_t>() << " window "
     << format_iso8601(w.at("start").get<Timestamp>()) << " .. " << format_iso8601(w.at("end").get<Timestamp>())
     << " posts " << w.at("size").get<std::size_t>() << " topics " << view.at("summaries").size() << '\n';
  const auto& delta = view.at("delta");
  for (const auto& s : view.at("summaries")) {
    const auto id = s.at("id").get<std::size_t>();
    const auto& c = delta.at("curr").at(id);
    os << "  T" << id << " size " << s.at("size").get<std::size_t>() << " color " << s.at("color").get<std::size_t>();
    if (s.at("prev_id").is_null())
      os << " new";
    else
      os << " from T" << s.at("prev_id").get<std::size_t>();
    os << " retained " << c.at("retained").get<std::size_t>() << " moved_in " << c.at("moved_in").get<std::size_t>()
       << " added " << c.at("added").get<std::size_t>() << " |";
    for (const auto& t : s.at("label")) os << ' ' << t.get<std::string>();
    const auto& fresh = s.at("new_terms");
    if (!fresh.empty() && !delta.at("first").get<bool>()) {
      os << " | new:";
      for (const auto& t : fresh) os << ' ' << t.get<std::string>();
    }
    os << '\n';
  }
  for (const auto& p : delta.at("prev")) {
    if (p.at("matched").is_null()) os << "  gone T" << p.at("topic").get<std::size_t>() << '\n';
    for (const auto& f : p.at("moved_out"))
      os << "  flow T" << p.at("topic").get<std::size_t>() << " -> T" << f.at("target").get<std::size_t>() << ' '
         << f.at("count").get<std::size_t>() << '\n';
  }
  return os.str();
}

std::size_t run_headless_replay(std::istream& in, Engine& engine, double speed, std::ostream& out) {
  const auto interval = static_cast<Timestamp>(std::llround(engine.config().update_interval_secs * 1000.0));
  std::optional<Timestamp> next;
  std::size_t ticks = 0;
  const auto fire = [&](Timestamp at) {
    engine.tick(at);
    out << format_update(engine.view());
    ++ticks;
  };
  std::atomic<bool> stop{false};
  replay_stream(in, engine.ingestor(), speed, stop, [&](std::optional<Timestamp> t) {
    if (!t) return;
    if (!next) {
      next = *t + interval;
      return;
    }
    while (*t >= *next) {
      fire(*next);
      *next += interval;
    }
  });
  if (next) fire(*next);
  return ticks;
}

}  // namespace streamclust
