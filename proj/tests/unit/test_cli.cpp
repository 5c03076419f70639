#include <catch_amalgamated.hpp>

#include <httplib.h>

#include "iprop/session_store.hpp"
#include "iprop/trajectory.hpp"
#include "support/fixtures.hpp"
#include "support/process.hpp"

using namespace iprop;
using namespace iprop::testing;

namespace {

const std::string kCli = IPROP_CLI_PATH;

struct Workspace {
  TempDir dir;
  std::filesystem::path dataset = dir / "emotions.csv";
  std::filesystem::path script = dir / "script.json";

  Workspace() {
    write_text(dataset, dataset_csv(synthetic_dataset({"joy", "sadness"}, 30)));
    write_text(script, quality_script_json());
  }

  ProcessResult run(std::vector<std::string> args) {
    args.insert(args.begin(), kCli);
    return run_process(args, dir.path());
  }

  std::vector<std::string> simulate_args(const std::string& out) const {
    return {"simulate", "--dataset", dataset.string(), "--prompt",
            "Classification task with labels: joy and sadness.", "--iterations", "15", "--provider", "mock",
            "--mock-script", script.string(), "--out", (dir / out).string(), "--log-level", "warn"};
  }
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("simulate writes a 15-row trajectory and is reproducible") {
  Workspace ws;
  auto r = ws.run(ws.simulate_args("a.csv"));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("final train_f1=") != std::string::npos);
  const auto a = read_text(ws.dir / "a.csv");
  CHECK(count_lines(a) == 16);
  CHECK(a.starts_with("iter,selected_prompt_id,train_f1,val_f1\n"));
  CHECK(parse_trajectory_csv(a).size() == 15);

  REQUIRE(ws.run(ws.simulate_args("b.csv")).exit_code == 0);
  CHECK(read_text(ws.dir / "b.csv") == a);

  auto other_seed = ws.simulate_args("c.csv");
  other_seed.insert(other_seed.end(), {"--seed", "99"});
  REQUIRE(ws.run(other_seed).exit_code == 0);
  CHECK(read_text(ws.dir / "c.csv") != a);
}

TEST_CASE("simulate argument errors exit 1") {
  Workspace ws;
  auto args = ws.simulate_args("x.csv");
  args[2] = (ws.dir / "missing.csv").string();
  auto r = ws.run(args);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("missing.csv") != std::string::npos);

  args = ws.simulate_args("x.csv");
  args[6] = "0";
  r = ws.run(args);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("max_iterations") != std::string::npos);

  args = ws.simulate_args("x.csv");
  args[4] = "Classify emotions";
  r = ws.run(args);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("joy") != std::string::npos);

  args = ws.simulate_args("x.csv");
  args.insert(args.end(), {"--split", "0.5,0.5"});
  CHECK(ws.run(args).exit_code == 1);

  CHECK(ws.run({"simulate"}).exit_code == 1);
  CHECK(ws.run({"frobnicate"}).exit_code == 1);
  CHECK(ws.run({"--help"}).exit_code == 0);
}

TEST_CASE("provider failures exit 2 and keep the partial trajectory") {
  Workspace ws;
  write_text(ws.script, R"({"rules": [{"match": "Text:", "error": "AuthFailure"}]})");
  auto r = ws.run(ws.simulate_args("fail.csv"));
  CHECK(r.exit_code == 2);

  // A provider that works for the first paraphrase only: later rounds fail.
  write_text(ws.script, R"({"quality": {"seed": 7},
    "rules": [{"match": "[v:", "system": "rewrite", "error": "ProviderUnreachable"}]})");
  r = ws.run(ws.simulate_args("partial.csv"));
  CHECK(r.exit_code == 2);
  CHECK(parse_trajectory_csv(read_text(ws.dir / "partial.csv")).size() == 1);
}

TEST_CASE("config files supply flags and flags override them") {
  Workspace ws;
  write_text(ws.dir / "run.toml",
             "[simulate]\ndataset = \"" + ws.dataset.string() + "\"\nprompt = \"joy or sadness\"\n"
             "provider = \"mock\"\nmock-script = \"" + ws.script.string() + "\"\niterations = 4\n"
             "out = \"" + (ws.dir / "cfg.csv").string() + "\"\n");
  auto r = ws.run({"--config", (ws.dir / "run.toml").string(), "simulate"});
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(parse_trajectory_csv(read_text(ws.dir / "cfg.csv")).size() == 4);

  r = ws.run({"--config", (ws.dir / "run.toml").string(), "simulate", "--iterations", "2"});
  REQUIRE(r.exit_code == 0);
  CHECK(parse_trajectory_csv(read_text(ws.dir / "cfg.csv")).size() == 2);
}

TEST_CASE("provider config files and templates") {
  Workspace ws;
  write_text(ws.dir / "provider.toml", "provider = mock\nmock_script = script.json\n");
  write_text(ws.dir / "templates.txt",
             "[classify]\n{prompt}\nInput: {text}\nChoose from {labels}.\n");
  auto args = ws.simulate_args("t.csv");
  args[6] = "3";
  args.erase(args.begin() + 7, args.begin() + 11);  // drop --provider/--mock-script
  args.insert(args.end(), {"--provider-config", (ws.dir / "provider.toml").string(), "--templates",
                           (ws.dir / "templates.txt").string()});
  auto r = ws.run(args);
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(parse_trajectory_csv(read_text(ws.dir / "t.csv")).size() == 3);
}

TEST_CASE("export-plot produces long-format rows") {
  Workspace ws;
  REQUIRE(ws.run(ws.simulate_args("ge.csv")).exit_code == 0);
  auto second = ws.simulate_args("tec.csv");
  second.insert(second.end(), {"--seed", "5"});
  REQUIRE(ws.run(second).exit_code == 0);

  auto r = ws.run({"export-plot", "--out", (ws.dir / "plot.csv").string(), (ws.dir / "ge.csv").string(),
                   (ws.dir / "tec.csv").string()});
  REQUIRE(r.exit_code == 0);
  const auto plot = read_text(ws.dir / "plot.csv");
  CHECK(count_lines(plot) == 61);
  CHECK(plot.starts_with("dataset,iter,split,f1\n"));

  // Filtering the export reproduces the original values to 4 decimals.
  const auto original = parse_trajectory_csv(read_text(ws.dir / "ge.csv"));
  std::istringstream in(plot);
  std::string line;
  std::getline(in, line);
  std::size_t matched = 0;
  while (std::getline(in, line)) {
    if (!line.starts_with("ge,")) continue;
    const auto parts = [&] {
      std::vector<std::string> v;
      std::istringstream ls(line);
      for (std::string f; std::getline(ls, f, ',');) v.push_back(f);
      return v;
    }();
    const auto& rec = original.at(std::stoul(parts[1]));
    const double expected = parts[2] == "train" ? rec.train_subset_f1 : rec.validation_f1;
    CHECK(std::abs(std::stod(parts[3]) - expected) < 5e-5);
    ++matched;
  }
  CHECK(matched == 30);

  r = ws.run({"export-plot", (ws.dir / "ge.csv").string()});
  CHECK(count_lines(r.out) == 31);

  CHECK(ws.run({"export-plot", "--out", (ws.dir / "p.csv").string()}).exit_code == 1);
  write_text(ws.dir / "bad.csv", "iter,selected_prompt_id,train_f1,val_f1\n0,1,zero,0.5\n");
  r = ws.run({"export-plot", (ws.dir / "bad.csv").string()});
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("bad.csv") != std::string::npos);
}

TEST_CASE("serve answers, refuses a busy port and shuts down on SIGTERM") {
  Workspace ws;
  const int port = free_port();
  const auto data = ws.dir / "data";
  Process server({kCli, "serve", "--port", std::to_string(port), "--data-dir", data.string(), "--provider", "mock",
                  "--mock-script", ws.script.string()},
                 ws.dir / "serve.out", ws.dir / "serve.err");
  httplib::Client client("127.0.0.1", port);
  httplib::Result r;
  for (int i = 0; i < 500 && !(r = client.Get("/api/models")); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  REQUIRE(r);
  CHECK(r->status == 200);

  auto busy = ws.run({"serve", "--port", std::to_string(port), "--data-dir", data.string()});
  CHECK(busy.exit_code == 1);

  httplib::MultipartFormDataItems form{{"dataset", read_text(ws.dataset), "emotions.csv", "text/csv"},
                                       {"seed_prompt", "joy or sadness", "", ""}};
  auto created = client.Post("/api/sessions", form);
  REQUIRE(created);
  REQUIRE(created->status == 201);
  const std::string id = nlohmann::json::parse(created->body)["session_id"];

  server.signal(SIGTERM);
  REQUIRE(server.wait_for(std::chrono::seconds(10)));
  CHECK(server.exit_code() == 0);
  SessionStore store(data);
  CHECK(store.load(id).session_id == id);
}
