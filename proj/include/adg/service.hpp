#pragma once

// HTTP service: feedback generation, prompt/graph lookup and revision
// sessions. Routing is a pure function of (method, path, headers, body) so it
// can be exercised without sockets; `serve` binds it to an httplib server.
//
// Data directory layout:
//   templates.json      template registry
//   prompts.json        corpus document (prompts only are used)
//   adg/*.json          one graph per prompt
//   sessions/<id>/      session.json, attempt-NNNN.json, report-NNNN.json

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "adg/corpus.hpp"
#include "adg/embedding.hpp"
#include "adg/error.hpp"
#include "adg/feedback.hpp"
#include "adg/graph.hpp"
#include "adg/similarity.hpp"

namespace adg {

enum class Condition { explanation_only, feedback };

inline std::string_view to_string(Condition c) {
  return c == Condition::feedback ? "feedback" : "explanation_only";
}

inline Condition parse_condition(std::string_view name) {
  if (name == "feedback") return Condition::feedback;
  if (name == "explanation_only") return Condition::explanation_only;
  throw Error("schema", "condition must be 'feedback' or 'explanation_only'", "condition");
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir;
  // tried in order; names: remote_embedding, token_tfidf, char_ngram
  std::vector<std::string> providers{"char_ngram"};
  std::optional<RemoteEmbeddingConfig> remote;
  std::string language = "en";
  std::string auth_token;  // empty disables auth
  int default_max_attempts = 2;
  FeedbackConfig feedback;
};

struct HttpResult {
  int status = 200;
  detail::ordered_json body;
};

/// Maps error codes to HTTP statuses.
inline int status_for(const std::string& code) {
  if (code == "unknown-prompt" || code == "unknown-session" || code == "not-found") return 404;
  if (code == "session-closed") return 409;
  if (code == "unauthorized") return 401;
  if (code.rfind("provider-", 0) == 0) return 503;
  if (code == "schema" || code == "syntax" || code == "unknown-field" || code == "span-out-of-range" ||
      code == "score-range" || code == "unknown-criterion" || code == "missing-score" || code == "invalid-utf8" ||
      code == "empty-cue") {
    return 422;
  }
  return 500;
}

inline detail::ordered_json error_body(const Error& e) {
  return {{"code", e.code()}, {"message", e.message()}, {"subject", e.subject()}};
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

inline std::string random_id(std::string_view prefix) {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return std::string(prefix) + buf;
}

/// Counts calls that reach the wrapped provider.
class CountingProvider final : public SimilarityProvider {
 public:
  explicit CountingProvider(std::shared_ptr<const SimilarityProvider> inner) : inner_(std::move(inner)) {}
  ProviderKind kind() const override { return inner_->kind(); }
  SimilarityScores score(std::string_view cue, std::span<const std::string> candidates) const override {
    ++calls_;
    return inner_->score(cue, candidates);
  }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const SimilarityProvider> inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// Write-once storage for session documents. `read` of a missing document
/// throws unknown-session; `write_new` of an existing one throws conflict.
/// Callers serialize access per session id.
class SessionStore {
 public:
  virtual ~SessionStore() = default;
  virtual bool has(const std::string& id, const std::string& name) const = 0;
  virtual detail::ordered_json read(const std::string& id, const std::string& name) const = 0;
  virtual void write_new(const std::string& id, const std::string& name, const detail::ordered_json& doc) = 0;

  bool exists(const std::string& id) const { return has(id, "session.json"); }

  std::size_t attempt_count(const std::string& id) const {
    std::size_t n = 0;
    while (has(id, attempt_name(n + 1))) ++n;
    return n;
  }

  static std::string attempt_name(std::size_t index) { return numbered("attempt-", index); }
  static std::string report_name(std::size_t index) { return numbered("report-", index); }

 private:
  static std::string numbered(const char* prefix, std::size_t index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%04zu.json", prefix, index);
    return buf;
  }
};

/// One directory per session, one JSON file per document. Files are written
/// to a temporary name and renamed into place.
class FileSessionStore final : public SessionStore {
 public:
  explicit FileSessionStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error("io", "cannot create session directory " + root_.string(), root_.string());
  }

  bool has(const std::string& id, const std::string& name) const override {
    return std::filesystem::exists(dir(id) / name);
  }

  detail::ordered_json read(const std::string& id, const std::string& name) const override {
    const auto path = dir(id) / name;
    if (!std::filesystem::exists(path)) throw Error("unknown-session", "no session '" + id + "'", id);
    return detail::ordered_json::parse(detail::read_file(path.string()));
  }

  void write_new(const std::string& id, const std::string& name, const detail::ordered_json& doc) override {
    const auto d = dir(id);
    std::filesystem::create_directories(d);
    const auto path = d / name;
    if (std::filesystem::exists(path)) throw Error("conflict", "document already recorded: " + path.string(), id);
    const auto tmp = d / (name + ".tmp");
    detail::write_file(tmp.string(), doc.dump(2) + "\n");
    std::filesystem::rename(tmp, path);
  }

 private:
  std::filesystem::path dir(const std::string& id) const {
    if (id.empty() || id.find_first_of("/\\.") != std::string::npos) {
      throw Error("unknown-session", "no session '" + id + "'", id);
    }
    return root_ / id;
  }

  std::filesystem::path root_;
};

class Service {
 public:
  using LogSink = std::function<void(const std::string&)>;

  /// Sessions go to `store`, or to <data_dir>/sessions when none is given.
  explicit Service(ServiceConfig config, LogSink log = {}, std::shared_ptr<SessionStore> store = {})
      : config_(std::move(config)), log_(std::move(log)), sessions_(std::move(store)) {
    const auto& dir = config_.data_dir;
    if (!std::filesystem::is_directory(dir)) throw Error("io", "data directory missing: " + dir.string());
    if (!sessions_) sessions_ = std::make_shared<FileSessionStore>(dir / "sessions");
    const auto probe = dir / ".write-probe";
    detail::write_file(probe.string(), "");
    std::filesystem::remove(probe);

    registry_ = load_registry_file((dir / "templates.json").string());
    const auto corpus = load_corpus(detail::read_file((dir / "prompts.json").string()));
    for (const auto& p : corpus.prompts) prompts_.emplace(p.id, p);
    if (std::filesystem::is_directory(dir / "adg")) {
      std::vector<std::filesystem::path> files;
      for (const auto& entry : std::filesystem::directory_iterator(dir / "adg")) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        auto g = load_adg_file(f.string());
        graphs_by_prompt_[g.prompt_id] = g.id;
        graphs_.emplace(g.id, std::move(g));
      }
    }
    provider_ = std::make_shared<CountingProvider>(build_provider());
  }

  const ServiceConfig& config() const noexcept { return config_; }
  std::size_t provider_calls() const noexcept { return provider_->calls(); }

  /// Entry point for every request. `headers` keys are matched
  /// case-insensitively by the caller (httplib does so already).
  HttpResult handle(const std::string& method, const std::string& path, const std::string& body,
                    const std::map<std::string, std::string>& headers = {}) {
    const auto header = [&](const std::string& name) -> std::string {
      for (const auto& [k, v] : headers) {
        if (k.size() == name.size() &&
            std::equal(k.begin(), k.end(), name.begin(), [](char a, char b) { return std::tolower(a) == std::tolower(b); })) {
          return v;
        }
      }
      return {};
    };
    std::string correlation = header("X-Correlation-Id");
    if (correlation.empty()) correlation = random_id("c-");

    HttpResult result;
    try {
      if (path != "/healthz" && !config_.auth_token.empty() &&
          header("Authorization") != "Bearer " + config_.auth_token) {
        throw Error("unauthorized", "missing or invalid bearer token");
      }
      result = route(method, path, body, correlation);
    } catch (const Error& e) {
      result = {status_for(e.code()), error_body(e)};
    } catch (const nlohmann::json::exception& e) {
      result = {422, error_body(Error("syntax", e.what()))};
    } catch (const std::exception& e) {
      result = {500, error_body(Error("internal", e.what()))};
    }
    if (log_) {
      log_(detail::ordered_json{{"correlation_id", correlation},
                                {"method", method},
                                {"path", path},
                                {"status", result.status},
                                {"request", body},
                                {"response", result.body}}
               .dump());
    }
    return result;
  }

  /// Blocks serving HTTP until `stop()` is called.
  void serve() {
    const auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> headers(req.headers.begin(), req.headers.end());
      auto r = handle(req.method, req.path, req.body, headers);
      res.status = r.status;
      res.set_content(r.body.dump(2) + "\n", "application/json");
    };
    server_.Get(".*", adapt);
    server_.Post(".*", adapt);
    if (!server_.listen(config_.host, config_.port)) {
      throw Error("io", "cannot listen on " + config_.host + ":" + std::to_string(config_.port));
    }
  }

  /// Binds to an ephemeral port and returns it; call `serve_bound` after.
  int bind_any() {
    const int port = server_.bind_to_any_port(config_.host);
    if (port < 0) throw Error("io", "cannot bind " + config_.host);
    config_.port = port;
    return port;
  }

  void serve_bound() {
    const auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> headers(req.headers.begin(), req.headers.end());
      auto r = handle(req.method, req.path, req.body, headers);
      res.status = r.status;
      res.set_content(r.body.dump(2) + "\n", "application/json");
    };
    server_.Get(".*", adapt);
    server_.Post(".*", adapt);
    server_.listen_after_bind();
  }

  void stop() { server_.stop(); }

 private:
  std::shared_ptr<const SimilarityProvider> build_provider() {
    std::vector<std::shared_ptr<const SimilarityProvider>> chain;
    for (const auto& name : config_.providers) {
      if (name == "char_ngram") {
        chain.push_back(std::make_shared<CharNgramProvider>());
      } else if (name == "token_tfidf") {
        std::vector<std::string> docs;
        for (const auto& [id, g] : graphs_) {
          for (const auto& n : g.nodes) docs.push_back(n.text);
        }
        chain.push_back(std::make_shared<TokenTfidfProvider>(docs));
      } else if (name == "remote_embedding") {
        if (!config_.remote) throw Error("config", "remote_embedding selected without an endpoint");
        chain.push_back(std::make_shared<RemoteEmbeddingProvider>(std::make_shared<EmbeddingClient>(*config_.remote)));
      } else {
        throw Error("config", "unknown provider '" + name + "'", name);
      }
    }
    return std::make_shared<FallbackProvider>(std::move(chain));
  }

  const PromptSpec& prompt(const std::string& id) const {
    auto it = prompts_.find(id);
    if (it == prompts_.end()) throw Error("unknown-prompt", "no prompt '" + id + "'", id);
    return it->second;
  }

  const Adg& graph_for_prompt(const std::string& prompt_id) const {
    auto it = graphs_by_prompt_.find(prompt_id);
    if (it == graphs_by_prompt_.end()) throw Error("unknown-prompt", "no graph for prompt '" + prompt_id + "'", prompt_id);
    return graphs_.at(it->second);
  }

  static nlohmann::json parse_body(const std::string& body) {
    if (body.empty()) throw Error("schema", "request body is empty");
    return detail::parse_document(body);
  }

  /// Parses {prompt_id, text, per_criterion} (response_id optional) and
  /// validates it against the prompt's rubric.
  ScoredResponse parse_submission(nlohmann::json j, const std::string& default_id,
                                  const std::optional<std::string>& prompt_id = std::nullopt) const {
    detail::require_object(j, "request");
    if (!j.contains("response_id")) j["response_id"] = default_id;
    if (prompt_id) {
      if (j.contains("prompt_id") && j["prompt_id"] != *prompt_id) {
        throw Error("schema", "prompt_id does not match the session", "prompt_id");
      }
      j["prompt_id"] = *prompt_id;
    }
    auto response = detail::parse_response(j, "request");
    validate_response(prompt(response.prompt_id), response);
    return response;
  }

  FeedbackReport generate(const ScoredResponse& response) const {
    const auto& p = prompt(response.prompt_id);
    const auto& g = graph_for_prompt(response.prompt_id);
    auto config = config_.feedback;
    config.policy.language = config_.language;
    return generate_feedback(g, registry_, p, response, *provider_, config);
  }

  static detail::ordered_json envelope(const std::string& correlation, detail::ordered_json report) {
    return {{"correlation_id", correlation}, {"generated_at", utc_timestamp()}, {"report", std::move(report)}};
  }

  HttpResult route(const std::string& method, const std::string& path, const std::string& body,
                   const std::string& correlation) {
    std::vector<std::string> parts;
    for (std::size_t i = 1; i <= path.size();) {
      const auto next = path.find('/', i);
      const auto end = next == std::string::npos ? path.size() : next;
      parts.push_back(path.substr(i, end - i));
      i = end + 1;
    }
    const auto is = [&](std::initializer_list<const char*> shape) {
      if (parts.size() != shape.size()) return false;
      std::size_t k = 0;
      for (const char* s : shape) {
        if (std::string_view(s) != "*" && parts[k] != s) return false;
        if (std::string_view(s) == "*" && parts[k].empty()) return false;
        ++k;
      }
      return true;
    };

    if (method == "GET" && is({"healthz"})) {
      return {200, {{"status", "ok"}, {"prompts", prompts_.size()}, {"graphs", graphs_.size()}}};
    }
    if (method == "POST" && is({"v1", "feedback"})) {
      const auto response = parse_submission(parse_body(body), "request");
      return {200, envelope(correlation, generate(response).to_json())};
    }
    if (method == "GET" && is({"v1", "prompts", "*"})) {
      return {200, detail::prompt_json(prompt(parts[2]))};
    }
    if (method == "GET" && is({"v1", "adg", "*"})) {
      auto it = graphs_.find(parts[2]);
      const Adg& g = it != graphs_.end() ? it->second : graph_for_prompt(parts[2]);
      return {200, detail::ordered_json::parse(serialize_adg(g))};
    }
    if (method == "POST" && is({"v1", "sessions"})) return create_session(parse_body(body));
    if (method == "POST" && is({"v1", "sessions", "*", "attempts"})) {
      return submit_attempt(parts[2], parse_body(body), correlation);
    }
    if (method == "GET" && is({"v1", "sessions", "*"})) return {200, session_document(parts[2])};
    if (method == "GET" && is({"v1", "sessions", "*", "feedback", "latest"})) return latest_feedback(parts[2]);
    throw Error("not-found", "no route for " + method + " " + path, path);
  }

  HttpResult create_session(const nlohmann::json& j) {
    detail::require_object(j, "request");
    detail::reject_unknown_fields(j, {"prompt_id", "condition", "max_attempts"}, "request");
    const auto prompt_id = detail::required_as<std::string>(j, "prompt_id", "request");
    prompt(prompt_id);
    const auto condition = parse_condition(detail::required_as<std::string>(j, "condition", "request"));
    const int max_attempts = detail::optional_as<int>(j, "max_attempts", "request").value_or(config_.default_max_attempts);
    if (max_attempts < 1) throw Error("schema", "max_attempts must be >= 1", "max_attempts");

    const auto id = random_id("s-");
    detail::ordered_json doc{{"session_id", id},
                             {"prompt_id", prompt_id},
                             {"condition", to_string(condition)},
                             {"max_attempts", max_attempts},
                             {"created_at", utc_timestamp()}};
    sessions_->write_new(id, "session.json", doc);
    return {201, doc};
  }

  // Only existing sessions get a lock, so unknown ids cannot grow the table.
  std::mutex& session_lock(const std::string& id) {
    if (!sessions_->exists(id)) throw Error("unknown-session", "no session '" + id + "'", id);
    std::lock_guard guard(lock_table_mutex_);
    auto& slot = session_locks_[id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  HttpResult submit_attempt(const std::string& id, const nlohmann::json& j, const std::string& correlation) {
    std::lock_guard lock(session_lock(id));
    const auto session = sessions_->read(id, "session.json");
    const auto n = sessions_->attempt_count(id);
    if (static_cast<int>(n) >= session["max_attempts"].get<int>()) {
      throw Error("session-closed", "session '" + id + "' accepts no more attempts", id);
    }
    const auto index = n + 1;
    const auto prompt_id = session["prompt_id"].get<std::string>();
    const auto response = parse_submission(j, id + "-a" + std::to_string(index), prompt_id);
    const auto& p = prompt(prompt_id);

    detail::ordered_json attempt = detail::response_json(response);
    attempt["index"] = index;
    attempt["submitted_at"] = utc_timestamp();
    attempt["total_score"] = total_score(p, response);
    attempt["feedback_report_id"] = nullptr;
    if (session["condition"] == "feedback") {
      const auto name = SessionStore::report_name(index);
      sessions_->write_new(id, name, envelope(correlation, generate(response).to_json()));
      attempt["feedback_report_id"] = name.substr(0, name.size() - 5);
    }
    sessions_->write_new(id, SessionStore::attempt_name(index), attempt);
    return {201, attempt};
  }

  detail::ordered_json session_document(const std::string& id) {
    std::lock_guard lock(session_lock(id));
    auto doc = sessions_->read(id, "session.json");
    const auto n = sessions_->attempt_count(id);
    doc["attempts"] = detail::ordered_json::array();
    std::optional<int> previous;
    for (std::size_t i = 1; i <= n; ++i) {
      auto a = sessions_->read(id, SessionStore::attempt_name(i));
      const int total = a["total_score"].get<int>();
      a["delta"] = previous ? detail::ordered_json(total - *previous) : detail::ordered_json(nullptr);
      previous = total;
      doc["attempts"].push_back(std::move(a));
    }
    doc["closed"] = static_cast<int>(n) >= doc["max_attempts"].get<int>();
    return doc;
  }

  /// Feedback-condition sessions get the stored report of the newest attempt;
  /// explanation-only sessions get the prompt's explanation and never touch
  /// the provider.
  HttpResult latest_feedback(const std::string& id) {
    std::lock_guard lock(session_lock(id));
    const auto session = sessions_->read(id, "session.json");
    const auto prompt_id = session["prompt_id"].get<std::string>();
    if (session["condition"] == "explanation_only") {
      return {200, {{"kind", "explanation"},
                    {"session_id", id},
                    {"prompt_id", prompt_id},
                    {"explanation", prompt(prompt_id).explanation}}};
    }
    const auto n = sessions_->attempt_count(id);
    if (n == 0) throw Error("not-found", "session '" + id + "' has no attempts yet", id);
    return {200, {{"kind", "report"}, {"session_id", id}, {"attempt", n},
                  {"feedback", sessions_->read(id, SessionStore::report_name(n))}}};
  }

  ServiceConfig config_;
  LogSink log_;
  std::shared_ptr<SessionStore> sessions_;
  std::mutex lock_table_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> session_locks_;
  TemplateRegistry registry_;
  std::map<std::string, PromptSpec> prompts_;
  std::map<std::string, Adg> graphs_;
  std::map<std::string, std::string> graphs_by_prompt_;
  std::shared_ptr<CountingProvider> provider_;
  httplib::Server server_;
};

}  // namespace adg
