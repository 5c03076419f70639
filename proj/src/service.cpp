#include "iprop/service.hpp"

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "iprop/dataset.hpp"
#include "iprop/log.hpp"
#include "iprop/optimizer.hpp"
#include "iprop/serialization.hpp"
#include "iprop/session_store.hpp"
#include "iprop/simulated_llm.hpp"
#include "iprop/text.hpp"
#include "iprop/trajectory.hpp"

namespace iprop {

namespace {

struct Slot {
  std::mutex mu;
  std::condition_variable idle_cv;
  SessionState state;
  std::shared_ptr<LlmClient> client;
  std::jthread worker;
  bool building = false;
  bool selecting = false;
  // Bumped by finish so a build started earlier cannot overwrite the result.
  std::uint64_t generation = 0;
  std::optional<json> last_error;
  std::atomic<std::size_t> done{0};
  std::atomic<std::size_t> total{0};
};

json summary(const SessionState& s) {
  return {{"session_id", s.session_id},
          {"status", to_string(s.status)},
          {"iteration", s.iteration},
          {"max_iterations", s.config.max_iterations},
          {"dataset_name", s.dataset_name},
          {"model_name", s.config.model_name},
          {"created_at", s.created_at}};
}

json candidates_payload(const SessionState& s) {
  json list = json::array();
  for (const auto& p : s.candidates) {
    json rows = json::array();
    for (const auto& ex : p.shown_examples) {
      rows.push_back({{"instance_id", ex.instance.id},
                      {"text", ex.instance.text},
                      {"gold_label", ex.instance.gold_label},
                      {"predicted_label", ex.explained.prediction.label_or_unknown()},
                      {"explanation", ex.explained.explanation}});
    }
    list.push_back({{"prompt_id", p.prompt.id},
                    {"prompt_text", p.prompt.text},
                    {"parent_id", p.prompt.parent_id ? json(*p.prompt.parent_id) : json(nullptr)},
                    {"train_subset_f1", p.train_subset_f1},
                    {"examples", std::move(rows)}});
  }
  return {{"status", to_string(s.status)}, {"iteration", s.iteration}, {"candidates", std::move(list)}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, http_status_for(e.code()), error_body(e));
}

std::string form_value(const httplib::Request& req, const char* name, std::string fallback = {}) {
  if (req.has_file(name)) return req.get_file_value(name).content;
  if (req.has_param(name)) return req.get_param_value(name);
  return fallback;
}

}  // namespace

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::InvalidState: return 409;
    case ErrorCode::InvalidChoice: return 422;
    case ErrorCode::ProviderUnreachable:
    case ErrorCode::AuthFailure:
    case ErrorCode::ResponseEmpty:
    case ErrorCode::Timeout:
    case ErrorCode::BadResponse:
    case ErrorCode::ParaphraseEmpty:
    case ErrorCode::IterationFailed: return 502;
    case ErrorCode::IdMismatch:
    case ErrorCode::EmptyEvaluation: return 500;
    default: return 400;
  }
}

json error_body(const Error& e) {
  json body = {{"error", to_string(e.code())}, {"message", e.what()}};
  if (e.details().is_object()) {
    for (const auto& [k, v] : e.details().items()) body[k] = v;
  }
  return body;
}

struct Service::Impl {
  ServiceOptions options;
  SessionStore store;
  httplib::Server server;
  std::mutex registry_mu;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> slots;

  explicit Impl(ServiceOptions opts) : options(std::move(opts)), store(options.data_dir) {
    if (!options.client_factory) {
      options.client_factory = [provider = options.provider](const SessionState& s) {
        return make_client(provider, &s.dataset, s.config.meta_prompts);
      };
    }
    if (!options.models_client) options.models_client = make_client(options.provider);
    // httplib's default sets SO_REUSEPORT, which lets a second server share a busy port.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    routes();
  }

  std::shared_ptr<Slot> find(std::string_view id) {
    std::lock_guard lock(registry_mu);
    auto it = slots.find(id);
    if (it == slots.end()) throw Error(ErrorCode::NotFound, "no session '" + std::string(id) + "'");
    return it->second;
  }

  std::shared_ptr<Slot> adopt(SessionState state) {
    auto slot = std::make_shared<Slot>();
    slot->client = options.client_factory(state);
    slot->state = std::move(state);
    std::lock_guard lock(registry_mu);
    slots[slot->state.session_id] = slot;
    return slot;
  }

  // Requires slot->mu held and status working.
  void start_build(const std::shared_ptr<Slot>& slot, std::unique_lock<std::mutex>& lock) {
    slot->building = true;
    slot->last_error.reset();
    slot->done = 0;
    slot->total = slot->state.incumbents.size() * (1 + slot->state.config.n_paraphrases);
    auto old = std::exchange(slot->worker, std::jthread([this, slot, snapshot = slot->state,
                                                         gen = slot->generation](std::stop_token stop) mutable {
      build(slot, std::move(snapshot), gen, stop);
    }));
    lock.unlock();
    // A previous worker has already committed; joining only waits for its exit.
    old = std::jthread();
    lock.lock();
  }

  void build(const std::shared_ptr<Slot>& slot, SessionState work, std::uint64_t gen,
             const std::stop_token& stop) {
    std::optional<json> failure;
    try {
      BuildOptions opts;
      opts.stop = stop;
      opts.on_progress = [&](std::size_t done, std::size_t total) {
        slot->done = done;
        slot->total = total;
      };
      build_candidates(work, *slot->client, opts);
    } catch (const Error& e) {
      failure = error_body(e);
    } catch (const std::exception& e) {
      failure = json{{"error", "Internal"}, {"message", e.what()}};
    }

    std::lock_guard lock(slot->mu);
    slot->building = false;
    if (stop.stop_requested() || gen != slot->generation ||
        slot->state.status != SessionStatus::working) {
      slot->idle_cv.notify_all();
      return;
    }
    if (failure) {
      log::warn("session " + work.session_id + ": candidate building failed: " +
                (*failure)["message"].get<std::string>());
      slot->last_error = std::move(failure);
    } else {
      try {
        store.save(work);
        slot->state = std::move(work);
      } catch (const std::exception& e) {
        slot->last_error = json{{"error", "Internal"}, {"message", e.what()}};
      }
    }
    slot->idle_cv.notify_all();
  }

  json status_payload(Slot& slot) {
    json body = summary(slot.state);
    body["progress"] = {{"done", slot.done.load()}, {"total", slot.total.load()}};
    body["last_error"] = slot.last_error ? *slot.last_error : json(nullptr);
    return body;
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("dataset")) throw Error(ErrorCode::MissingField, "multipart field 'dataset' is required");
    const auto file = req.get_file_value("dataset");
    const auto format_name = form_value(req, "format");
    const auto format = !format_name.empty()  ? parse_dataset_format(format_name)
                        : !file.filename.empty() ? format_from_path(file.filename)
                                                 : DatasetFormat::csv;
    const auto dataset = load_dataset(file.content, format, form_value(req, "text_field", "text"),
                                      form_value(req, "label_field", "label"));
    const auto seed_prompt = form_value(req, "seed_prompt");
    if (text::trim(seed_prompt).empty()) throw Error(ErrorCode::MissingField, "seed_prompt is required");

    SessionConfig config;
    config.provider = options.provider.kind;
    if (!options.provider.default_model.empty()) config.model_name = options.provider.default_model;
    if (const auto patch = form_value(req, "config"); !patch.empty()) {
      json parsed;
      try {
        parsed = json::parse(patch);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
      }
      try {
        merge_config(config, parsed);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
      }
    }

    auto name = form_value(req, "dataset_name");
    if (name.empty()) name = file.filename.empty() ? "dataset" : std::filesystem::path(file.filename).stem().string();
    auto state = init_session(config, dataset, seed_prompt, name);

    // Fails with ProviderUnreachable (502) before anything is stored.
    options.models_client->list_models();

    store.save(state);
    auto slot = adopt(std::move(state));
    std::unique_lock lock(slot->mu);
    start_build(slot, lock);
    send_json(res, 201, summary(slot->state));
  }

  void select_route(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      throw Error(ErrorCode::InvalidChoice, "body must be JSON like {\"prompt_id\": 3}");
    }
    if (!body.is_object() || !body.contains("prompt_id") || !body["prompt_id"].is_number_unsigned()) {
      throw Error(ErrorCode::InvalidChoice, "prompt_id must be a non-negative integer");
    }
    const auto choice = body["prompt_id"].get<PromptId>();
    const bool stop_after = body.value("finish", false);

    auto slot = find(id);
    std::unique_lock lock(slot->mu);
    const auto& s = slot->state;
    if (s.status != SessionStatus::awaiting_selection || slot->selecting) {
      throw Error(ErrorCode::InvalidState, "session is " + std::string(to_string(s.status)) +
                                               ", not awaiting a selection",
                  json{{"status", to_string(s.status)}});
    }
    if (body.contains("iteration") && body["iteration"] != s.iteration) {
      throw Error(ErrorCode::InvalidState, "selection is for iteration " + body["iteration"].dump() +
                                               " but the session is at iteration " + std::to_string(s.iteration),
                  json{{"status", to_string(s.status)}, {"iteration", s.iteration}});
    }
    const bool presented = std::any_of(s.candidates.begin(), s.candidates.end(),
                                       [&](const Presentation& p) { return p.prompt.id == choice; });
    if (!presented) {
      throw Error(ErrorCode::InvalidChoice, "prompt " + std::to_string(choice) + " was not presented",
                  json{{"prompt_id", choice}});
    }

    // Validation scoring makes LLM calls; readers keep seeing the current
    // snapshot while it runs.
    slot->selecting = true;
    auto work = s;
    const auto gen = slot->generation;
    lock.unlock();
    try {
      select(work, Selector::human(), choice, *slot->client, stop_after);
    } catch (...) {
      lock.lock();
      slot->selecting = false;
      slot->idle_cv.notify_all();
      throw;
    }
    lock.lock();
    slot->selecting = false;
    slot->idle_cv.notify_all();
    if (gen != slot->generation) {
      throw Error(ErrorCode::InvalidState, "session was finished during the selection");
    }
    store.save(work);
    slot->state = std::move(work);
    if (slot->state.status == SessionStatus::working) start_build(slot, lock);
    send_json(res, 200, summary(slot->state));
  }

  void finish_route(const std::string& id, httplib::Response& res) {
    auto slot = find(id);
    std::unique_lock lock(slot->mu);
    if (slot->state.status != SessionStatus::finished) {
      auto work = slot->state;
      terminate(work);
      store.save(work);
      slot->state = std::move(work);
      ++slot->generation;
      slot->worker.request_stop();
    }
    send_json(res, 200, summary(slot->state));
  }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        log::error(std::string("request ") + req.method + " " + req.path + " failed: " + e.what());
        send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
      }
    };
  }

  void routes() {
    server.set_payload_max_length(options.max_upload_bytes);

    server.Post("/api/sessions", guarded([this](const auto& req, auto& res) { create(req, res); }));

    server.Get("/api/sessions", guarded([this](const auto&, auto& res) {
      std::vector<std::shared_ptr<Slot>> all;
      {
        std::lock_guard lock(registry_mu);
        for (const auto& [id, slot] : slots) all.push_back(slot);
      }
      json list = json::array();
      for (const auto& slot : all) {
        std::lock_guard lock(slot->mu);
        list.push_back(summary(slot->state));
      }
      send_json(res, 200, list);
    }));

    server.Get("/api/sessions/:id", guarded([this](const auto& req, auto& res) {
      auto slot = find(req.path_params.at("id"));
      std::lock_guard lock(slot->mu);
      send_json(res, 200, status_payload(*slot));
    }));

    server.Get("/api/sessions/:id/candidates", guarded([this](const auto& req, auto& res) {
      auto slot = find(req.path_params.at("id"));
      std::lock_guard lock(slot->mu);
      if (slot->state.status == SessionStatus::awaiting_selection) {
        send_json(res, 200, candidates_payload(slot->state));
      } else {
        auto body = status_payload(*slot);
        body["candidates"] = json::array();
        send_json(res, 200, body);
      }
    }));

    server.Post("/api/sessions/:id/selection", guarded([this](const auto& req, auto& res) {
      select_route(req.path_params.at("id"), req, res);
    }));

    server.Post("/api/sessions/:id/finish", guarded([this](const auto& req, auto& res) {
      finish_route(req.path_params.at("id"), res);
    }));

    server.Get("/api/sessions/:id/trajectory", guarded([this](const auto& req, auto& res) {
      auto slot = find(req.path_params.at("id"));
      std::vector<TrajectoryRecord> records;
      {
        std::lock_guard lock(slot->mu);
        records = slot->state.trajectory;
      }
      if (req.get_header_value("Accept").find("text/csv") != std::string::npos) {
        res.set_content(trajectory_csv(records), "text/csv");
      } else {
        send_json(res, 200, records);
      }
    }));

    server.Get("/api/models", guarded([this](const auto&, auto& res) {
      send_json(res, 200, {{"provider", to_string(options.provider.kind)},
                           {"default_model", options.provider.default_model},
                           {"models", options.models_client->list_models()}});
    }));

    if (!options.static_dir.empty()) {
      if (!server.set_mount_point("/", options.static_dir.string())) {
        log::warn("static directory " + options.static_dir.string() + " does not exist");
      }
    }
  }

  void resume() {
    store.remove_stale_temporaries();
    for (const auto& id : store.list()) {
      SessionState state;
      try {
        state = store.load(id);
      } catch (const std::exception& e) {
        log::warn("skipping session " + id + ": " + e.what());
        continue;
      }
      if (const auto problems = check_invariants(state); !problems.empty()) {
        log::warn("skipping session " + id + ": " + problems.front());
        continue;
      }
      auto slot = adopt(std::move(state));
      std::unique_lock lock(slot->mu);
      if (slot->state.status == SessionStatus::working) {
        log::info("resuming candidate building for session " + id);
        start_build(slot, lock);
      }
    }
  }

  void shutdown() {
    server.stop();
    std::vector<std::shared_ptr<Slot>> all;
    {
      std::lock_guard lock(registry_mu);
      for (const auto& [id, slot] : slots) all.push_back(slot);
    }
    for (const auto& slot : all) {
      std::jthread worker;
      {
        std::lock_guard lock(slot->mu);
        slot->worker.request_stop();
        worker = std::move(slot->worker);
      }
    }
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { impl_->shutdown(); }

void Service::resume() { impl_->resume(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->shutdown(); }

void Service::wait_idle(const std::string& session_id) {
  auto slot = impl_->find(session_id);
  std::unique_lock lock(slot->mu);
  slot->idle_cv.wait(lock, [&] { return !slot->building && !slot->selecting; });
}

}  // namespace iprop
