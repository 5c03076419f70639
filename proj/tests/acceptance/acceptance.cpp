// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "iprop/dataset.hpp"
#include "iprop/metrics.hpp"
#include "iprop/optimizer.hpp"
#include "iprop/prompt_ops.hpp"
#include "support/fixtures.hpp"
#include "support/label_fixtures.hpp"
#include "support/metrics_oracle.hpp"
#include "support/process.hpp"

using namespace iprop;
using namespace iprop::testing;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kMetricsTolerance = 1e-12;
constexpr int kMetricsCases = 1000;
constexpr double kMetricsBudget = 5.0;
constexpr int kStratDatasets = 100;
constexpr int kStratSeeds = 10;
constexpr double kStratMaxDeviation = 1.0;
constexpr double kStratBudget = 10.0;
constexpr std::size_t kMinFixtures = 40;
constexpr double kTrendBudget = 30.0;
constexpr double kServiceBudget = 20.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

// 2/3 must be bit-exact, so compare with ==.
Outcome metrics_oracle() {
  Outcome o;
  const auto start = Clock::now();
  Rng rng(20240501);
  double worst = 0.0;
  for (int i = 0; i < kMetricsCases; ++i) {
    const auto c = random_metrics_case(rng);
    const double got = weighted_f1(predictions_of(c), gold_of(c), c.labels);
    worst = std::max(worst, std::abs(got - brute_force_weighted_f1(c)));
  }
  if (worst > kMetricsTolerance) o.fail("max deviation " + std::to_string(worst));

  const LabelSet ab({"A", "B"});
  const std::vector<Prediction> pred{{0, "A", "A"}, {1, "B", "B"}, {2, "B", "B"}};
  const std::vector<GoldLabel> gold{{0, "A"}, {1, "A"}, {2, "B"}};
  if (weighted_f1(pred, gold, ab) != 2.0 / 3.0) o.fail("hand case is not exactly 2/3");

  const double secs = seconds_since(start);
  if (secs >= kMetricsBudget) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d cases, max dev %.3g, hand case exactly 2/3", kMetricsCases, worst);
    o.detail = buf;
  }
  return o;
}

Outcome stratification() {
  Outcome o;
  const auto start = Clock::now();
  Rng rng(77);
  const std::array<double, 3> ratios{0.70, 0.15, 0.15};
  for (int d = 0; d < kStratDatasets && o.pass; ++d) {
    const auto k = 3 + rng.below(4);
    const auto n = 30 + rng.below(471);
    std::vector<std::string> names;
    for (std::uint64_t l = 0; l < k; ++l) names.push_back("label" + std::to_string(l));
    Dataset ds;
    ds.label_set = LabelSet(names);
    // Skewed but every label gets at least 3 instances.
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto label = i < 3 * k ? i % k : rng.below(k);
      ds.instances.push_back(Instance{i, "t" + std::to_string(i), names[label]});
    }
    std::map<std::string, std::size_t> per_label;
    for (const auto& inst : ds.instances) ++per_label[inst.gold_label];

    for (int s = 0; s < kStratSeeds && o.pass; ++s) {
      const auto splits = stratified_split(ds, ratios, rng.below(UINT64_MAX));
      std::vector<InstanceId> all;
      for (const auto* part : {&splits.train, &splits.validation, &splits.test}) {
        all.insert(all.end(), part->begin(), part->end());
      }
      std::sort(all.begin(), all.end());
      if (std::adjacent_find(all.begin(), all.end()) != all.end()) o.fail("splits overlap");
      if (all.size() != n) o.fail("splits not exhaustive");
      for (std::size_t p = 0; p < 3; ++p) {
        const auto& part = p == 0 ? splits.train : p == 1 ? splits.validation : splits.test;
        std::map<std::string, std::size_t> got;
        for (auto id : part) ++got[ds.instances[id].gold_label];
        for (const auto& [label, total] : per_label) {
          const double dev = std::abs(static_cast<double>(got[label]) - ratios[p] * static_cast<double>(total));
          if (dev > kStratMaxDeviation) o.fail(label + " deviates by " + std::to_string(dev));
        }
      }
    }
  }
  const double secs = seconds_since(start);
  if (secs >= kStratBudget) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = std::to_string(kStratDatasets * kStratSeeds) + " splits";
  return o;
}

Outcome label_corpus() {
  Outcome o;
  const auto fixtures = label_fixtures();
  if (fixtures.size() < kMinFixtures) o.fail("only " + std::to_string(fixtures.size()) + " fixtures");
  std::set<std::string> categories;
  for (const auto& f : fixtures) {
    categories.insert(f.category);
    // An empty expectation means UNKNOWN.
    const auto expected = f.expected.empty() ? std::nullopt : std::optional<std::string>(f.expected);
    const auto got = extract_label(f.raw, LabelSet(f.labels));
    if (got != expected) {
      o.fail("'" + f.raw + "' gave " + got.value_or("UNKNOWN") + ", expected " + expected.value_or("UNKNOWN"));
    }
  }
  for (const char* c : {"exact", "quoted", "punctuated", "preambled", "multi-label", "negated", "no-label"}) {
    if (!categories.contains(c)) o.fail(std::string("no ") + c + " fixture");
  }
  if (extract_label("Not joy but sadness", LabelSet(kEmotions)) != std::optional<std::string>("joy")) {
    o.fail("negation case");
  }
  if (o.pass) o.detail = std::to_string(fixtures.size()) + " fixtures";
  return o;
}

Outcome rising_trend() {
  Outcome o;
  const auto start = Clock::now();
  const auto ds = synthetic_dataset({"joy", "sadness", "anger"}, 20);
  auto client = quality_client(ds, 7);
  SessionConfig config;
  config.max_iterations = 15;
  const auto records = run_simulation(config, ds, seed_prompt_for(ds), *client);
  if (records.size() != 15) o.fail(std::to_string(records.size()) + " iterations");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].train_subset_f1 < records[i - 1].train_subset_f1) {
      o.fail("F1 drops at iteration " + std::to_string(i));
    }
  }
  if (!records.empty() && records.back().train_subset_f1 < records.front().train_subset_f1) {
    o.fail("final below initial");
  }
  const double secs = seconds_since(start);
  if (secs >= kTrendBudget) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "train F1 %.4f -> %.4f, %.2f s", records.front().train_subset_f1,
                  records.back().train_subset_f1, secs);
    o.detail = buf;
  }
  return o;
}

Outcome cost_invariant() {
  Outcome o;
  const auto ds = synthetic_dataset({"joy", "sadness", "anger"}, 20);
  auto client = quality_client(ds, 7);
  SessionConfig config;
  auto state = init_session(config, ds, seed_prompt_for(ds));
  const auto candidates = build_candidates(state, *client);

  std::set<InstanceId> pool(state.t_alpha.begin(), state.t_alpha.end());
  pool.insert(state.t_beta.begin(), state.t_beta.end());
  std::size_t classify = 0, explain = 0;
  std::set<std::string> classify_keys;
  bool duplicate = false;
  for (const auto& call : client->calls()) {
    const auto system = call.request.system_message.value_or("");
    if (system == kClassifySystem) {
      ++classify;
      duplicate |= !classify_keys.insert(call.request.user_message).second;
    } else if (system == kExplainSystem) {
      ++explain;
    }
  }
  if (candidates.size() != 2) o.fail(std::to_string(candidates.size()) + " candidates");
  if (classify > 2 * pool.size()) o.fail(std::to_string(classify) + " classify calls");
  if (explain > 2 * state.t_alpha.size()) o.fail(std::to_string(explain) + " explain calls");
  if (duplicate) o.fail("duplicate (prompt, instance) classification");
  if (o.pass) {
    o.detail = "classify " + std::to_string(classify) + " <= " + std::to_string(2 * pool.size()) + ", explain " +
               std::to_string(explain) + " <= " + std::to_string(2 * state.t_alpha.size());
  }
  return o;
}

/// The CLI server as a child process that can be killed and restarted.
class ServiceUnderTest {
 public:
  explicit ServiceUnderTest(const TempDir& dir) : dir_(dir), port_(free_port()) {
    write_text(dir_ / "script.json", quality_script_json());
    write_text(dir_ / "provider.toml", "provider = mock\nmock_script = script.json\n");
  }

  void start() {
    process_ = std::make_unique<Process>(
        std::vector<std::string>{IPROP_CLI_PATH, "serve", "--port", std::to_string(port_), "--data-dir",
                                 (dir_ / "data").string(), "--provider-config",
                                 (dir_ / "provider.toml").string(), "--log-level", "warn"},
        dir_ / "serve.out", dir_ / "serve.err");
    for (int i = 0; i < 1000; ++i) {
      if (client().Get("/api/models")) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    throw std::runtime_error("service did not come up: " + read_text(dir_ / "serve.err"));
  }

  void kill_and_restart() {
    process_->signal(SIGKILL);
    process_->wait();
    ++restarts_;
    start();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }

  json get(const std::string& path) const {
    auto r = client().Get(path);
    if (!r || r->status != 200) throw std::runtime_error("GET " + path + " failed");
    return json::parse(r->body);
  }

  int restarts() const { return restarts_; }

 private:
  const TempDir& dir_;
  int port_;
  int restarts_ = 0;
  std::unique_ptr<Process> process_;
};

Outcome state_machine() {
  Outcome o;
  const auto start = Clock::now();
  TempDir dir;
  try {
    ServiceUnderTest svc(dir);
    svc.start();
    const auto ds = synthetic_dataset({"joy", "sadness", "anger"}, 20);
    httplib::MultipartFormDataItems form{{"dataset", dataset_csv(ds), "emotions.csv", "text/csv"},
                                         {"seed_prompt", seed_prompt_for(ds), "", ""},
                                         {"config", R"({"max_iterations": 5})", "", ""}};
    auto created = svc.client().Post("/api/sessions", form);
    if (!created || created->status != 201) throw std::runtime_error("create failed");
    const std::string id = json::parse(created->body)["session_id"];
    const std::string base = "/api/sessions/" + id;

    // Each check after a kill: the trajectory holds exactly the committed selections.
    std::vector<json> committed;
    auto check_trajectory = [&](const std::string& when) {
      const auto t = svc.get(base + "/trajectory");
      if (t.size() != committed.size()) {
        o.fail(when + ": " + std::to_string(t.size()) + " records, expected " + std::to_string(committed.size()));
        return;
      }
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i]["iteration"] != i || t[i]["selected_prompt_id"] != committed[i]["selected_prompt_id"]) {
          o.fail(when + ": record " + std::to_string(i) + " changed");
        }
      }
    };
    auto await_candidates = [&] {
      for (int i = 0; i < 2000; ++i) {
        auto c = svc.get(base + "/candidates");
        if (c["status"] == "awaiting_selection") return c;
        if (!c["last_error"].is_null()) throw std::runtime_error("build failed: " + c["last_error"].dump());
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
      throw std::runtime_error("candidates never arrived");
    };

    svc.kill_and_restart();  // after create
    check_trajectory("after create");

    for (int round = 0; round < 3 && o.pass; ++round) {
      auto cands = await_candidates();
      svc.kill_and_restart();  // after candidates were persisted
      check_trajectory("awaiting round " + std::to_string(round));
      const auto again = await_candidates();
      if (again["candidates"] != cands["candidates"]) o.fail("candidates changed across restart");

      const auto& pick = cands["candidates"].back();
      const json body{{"prompt_id", pick["prompt_id"]}, {"iteration", cands["iteration"]}};
      auto r = svc.client().Post(base + "/selection", body.dump(), "application/json");
      if (!r || r->status != 200) throw std::runtime_error("selection failed");
      committed.push_back(json{{"selected_prompt_id", pick["prompt_id"]}});

      auto dup = svc.client().Post(base + "/selection", body.dump(), "application/json");
      if (!dup || dup->status != 409) o.fail("double selection returned " + (dup ? std::to_string(dup->status) : "nothing"));

      svc.kill_and_restart();  // after the selection was persisted
      check_trajectory("after selection " + std::to_string(round));
      auto dup_after = svc.client().Post(base + "/selection", body.dump(), "application/json");
      if (!dup_after || dup_after->status != 409) o.fail("double selection after restart accepted");
    }

    auto fin = svc.client().Post(base + "/finish", "", "application/json");
    if (!fin || fin->status != 200) throw std::runtime_error("finish failed");
    svc.kill_and_restart();
    check_trajectory("after finish");
    if (svc.get(base)["status"] != "finished") o.fail("finish not persisted");
    if (o.pass) o.detail = std::to_string(svc.restarts()) + " kill/restart cycles";
  } catch (const std::exception& e) {
    o.fail(e.what());
  }
  const double secs = seconds_since(start);
  if (secs >= kServiceBudget) o.fail("took " + std::to_string(secs) + " s");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"metrics-oracle", metrics_oracle},
      {"stratification-property", stratification},
      {"label-extraction-corpus", label_corpus},
      {"rising-trend", rising_trend},
      {"session-state-machine-crash-safety", state_machine},
      {"cost-invariant", cost_invariant},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(e.what());
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
