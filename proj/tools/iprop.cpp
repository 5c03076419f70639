// iprop command line: headless simulations, the HTTP service, plot export.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "iprop/dataset.hpp"
#include "iprop/error.hpp"
#include "iprop/log.hpp"
#include "iprop/optimizer.hpp"
#include "iprop/prompt_ops.hpp"
#include "iprop/provider_config.hpp"
#include "iprop/service.hpp"
#include "iprop/simulated_llm.hpp"
#include "iprop/trajectory.hpp"

namespace fs = std::filesystem;
using namespace iprop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitProvider = 2;

struct ProviderFlags {
  std::string config_file;
  std::string provider;
  std::string model;
  std::string base_url;
  std::string mock_script;
  std::size_t max_in_flight = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--provider-config", config_file, "Provider configuration file (JSON or key = value)");
    cmd.add_option("--provider", provider, "openai-compatible, local-server or mock");
    cmd.add_option("--model", model, "Model name sent to the provider");
    cmd.add_option("--base-url", base_url, "API root, e.g. http://localhost:11434/v1");
    cmd.add_option("--mock-script", mock_script, "Scripted responses for the mock provider");
    cmd.add_option("--max-in-flight", max_in_flight, "Concurrent LLM requests");
  }

  ProviderConfig resolve() const {
    ProviderConfig pc;
    if (!config_file.empty()) pc = load_provider_config(config_file);
    if (!provider.empty()) pc.kind = parse_provider_kind(provider);
    if (!model.empty()) pc.default_model = model;
    if (!base_url.empty()) pc.base_url = base_url;
    if (!mock_script.empty()) pc.mock_script = mock_script;
    if (max_in_flight > 0) pc.max_in_flight = max_in_flight;
    finalize_provider_config(pc);
    return pc;
  }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedContent, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  auto temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
    out << content;
    if (!out.flush()) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  }
  fs::rename(temp, path);
}

std::array<double, 3> parse_ratios(const std::string& s) {
  std::array<double, 3> r{};
  std::istringstream in(s);
  std::string part;
  std::size_t i = 0;
  while (std::getline(in, part, ',')) {
    if (i == 3) break;
    try {
      std::size_t used = 0;
      r[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "--split expects three numbers like 0.7,0.15,0.15");
    }
    ++i;
  }
  if (i != 3 || in.rdbuf()->in_avail() > 0) {
    throw Error(ErrorCode::InvalidConfig, "--split expects three numbers like 0.7,0.15,0.15");
  }
  return r;
}

int report(const Error& e) {
  std::cerr << "error: " << e.what() << '\n';
  if (!e.details().empty() && !e.details().is_null()) std::cerr << "  details: " << e.details().dump() << '\n';
  const bool provider = e.is_provider_failure() || e.code() == ErrorCode::IterationFailed ||
                        e.code() == ErrorCode::ParaphraseEmpty;
  return provider ? kExitProvider : kExitUsage;
}

struct SimulateFlags {
  ProviderFlags provider;
  std::string dataset;
  std::string format;
  std::string text_field = "text";
  std::string label_field = "label";
  std::string prompt;
  std::string out;
  std::string templates;
  std::string split;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> alpha_size;
  std::optional<std::size_t> beta_size;
  std::optional<std::size_t> n_paraphrases;
  std::optional<std::uint64_t> seed;
  std::optional<double> temperature;
  std::optional<double> rephrase_temperature;
  std::optional<std::size_t> max_tokens;
};

int run_simulate(const SimulateFlags& f) {
  const auto provider = f.provider.resolve();
  const auto format = f.format.empty() ? format_from_path(f.dataset) : parse_dataset_format(f.format);
  const auto dataset = load_dataset_file(f.dataset, format, f.text_field, f.label_field);

  SessionConfig config;
  config.provider = provider.kind;
  config.model_name = provider.default_model.empty() ? config.model_name : provider.default_model;
  if (f.iterations) config.max_iterations = *f.iterations;
  if (f.alpha_size) config.sampling.alpha_size = *f.alpha_size;
  if (f.beta_size) config.sampling.beta_size = *f.beta_size;
  if (f.n_paraphrases) config.n_paraphrases = *f.n_paraphrases;
  if (f.seed) config.sampling.seed = *f.seed;
  if (!f.split.empty()) config.split_ratios = parse_ratios(f.split);
  if (f.temperature) config.generation.temperature = *f.temperature;
  if (f.rephrase_temperature) config.generation.rephrase_temperature = *f.rephrase_temperature;
  if (f.max_tokens) config.generation.max_tokens = *f.max_tokens;
  if (!f.templates.empty()) config.meta_prompts = parse_templates(read_file(f.templates));
  validate(config);

  auto client = make_client(provider, &dataset, config.meta_prompts);
  const fs::path out = f.out;
  std::vector<TrajectoryRecord> written;
  const auto persist = [&](const SessionState& state) {
    written = state.trajectory;
    write_file_atomically(out, trajectory_csv(state.trajectory));
    const auto& r = state.trajectory.back();
    log::info("iteration " + std::to_string(r.iteration) + ": prompt " +
              std::to_string(r.selected_prompt_id) + ", train F1 " + std::to_string(r.train_subset_f1) +
              ", validation F1 " + std::to_string(r.validation_f1));
  };

  try {
    const auto records = run_simulation(config, dataset, f.prompt, *client, persist);
    const auto& last = records.back();
    std::printf("final train_f1=%.4f val_f1=%.4f iterations=%zu out=%s\n", last.train_subset_f1,
                last.validation_f1, records.size(), out.string().c_str());
  } catch (const Error& e) {
    if (!written.empty()) {
      std::cerr << "partial trajectory (" << written.size() << " records) kept in " << out.string() << '\n';
    }
    return report(e);
  }
  return kExitOk;
}

struct ServeFlags {
  ProviderFlags provider;
  int port = 8123;
  std::string host = "127.0.0.1";
  bool expose = false;
  std::string data_dir = "data";
  std::string static_dir;
};

int run_serve(const ServeFlags& f) {
  // Handle SIGINT/SIGTERM on a dedicated thread; every other thread
  // inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions options;
  options.provider = f.provider.resolve();
  options.data_dir = f.data_dir;
  options.static_dir = f.static_dir;
  Service service(options);

  const auto host = f.expose ? std::string("0.0.0.0") : f.host;
  const int port = service.bind(host, f.port);
  if (port < 0) {
    std::cerr << "error: cannot listen on " << host << ":" << f.port << " (port in use?)\n";
    return kExitUsage;
  }
  service.resume();

  std::jthread waiter([&service, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    log::info("received signal " + std::to_string(sig) + ", shutting down");
    service.stop();
  });

  std::printf("listening on http://%s:%d (data in %s)\n", host.c_str(), port, f.data_dir.c_str());
  std::fflush(stdout);
  service.run();
  service.stop();
  // Wake the waiter if the server stopped for another reason.
  pthread_kill(waiter.native_handle(), SIGTERM);
  return kExitOk;
}

int run_export_plot(const std::string& out, const std::vector<std::string>& inputs) {
  if (inputs.empty()) {
    std::cerr << "error: no trajectory files given\n";
    return kExitUsage;
  }
  std::vector<NamedTrajectory> series;
  for (const auto& input : inputs) {
    try {
      series.push_back({fs::path(input).stem().string(), parse_trajectory_csv(read_file(input))});
    } catch (const Error& e) {
      std::cerr << "error: " << input << ": " << e.what() << '\n';
      return kExitUsage;
    }
  }
  const auto csv = plot_csv(series);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    write_file_atomically(out, csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive prompt optimization for text classification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with defaults for any flag");
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Run the loop headless with the simulated selector");
  sim.provider.add_to(*simulate);
  simulate->add_option("--dataset", sim.dataset, "CSV, JSON or JSONL file")->required();
  simulate->add_option("--format", sim.format, "csv, json or jsonl (default: from extension)");
  simulate->add_option("--text-field", sim.text_field, "Column/key holding the text");
  simulate->add_option("--label-field", sim.label_field, "Column/key holding the label");
  simulate->add_option("--prompt", sim.prompt, "Seed prompt naming every label")->required();
  simulate->add_option("--out", sim.out, "Trajectory CSV to write")->required();
  simulate->add_option("--iterations", sim.iterations, "Number of selection rounds (default 15)");
  simulate->add_option("--seed", sim.seed, "Seed for splits and subsets");
  simulate->add_option("--alpha-size", sim.alpha_size, "Examples shown per candidate");
  simulate->add_option("--beta-size", sim.beta_size, "Instances scored per candidate");
  simulate->add_option("--n-paraphrases", sim.n_paraphrases, "Paraphrases per incumbent");
  simulate->add_option("--split", sim.split, "train,validation,test ratios");
  simulate->add_option("--templates", sim.templates, "Meta-prompt overrides ([rephrase]/[classify]/[explain])");
  simulate->add_option("--temperature", sim.temperature, "Sampling temperature for classify/explain");
  simulate->add_option("--rephrase-temperature", sim.rephrase_temperature, "Sampling temperature for paraphrasing");
  simulate->add_option("--max-tokens", sim.max_tokens, "Completion token limit");

  ServeFlags srv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  srv.provider.add_to(*serve);
  serve->add_option("--port", srv.port, "Listening port (default 8123)");
  serve->add_option("--host", srv.host, "Listening address (default 127.0.0.1)");
  serve->add_flag("--expose", srv.expose, "Listen on all interfaces");
  serve->add_option("--data-dir", srv.data_dir, "Directory for session files");
  serve->add_option("--static-dir", srv.static_dir, "Built web UI to serve at /");

  std::string plot_out;
  std::vector<std::string> plot_inputs;
  auto* export_plot = app.add_subcommand("export-plot", "Merge trajectory CSVs into dataset,iter,split,f1 rows");
  export_plot->add_option("--out", plot_out, "Output CSV (default: stdout)");
  export_plot->add_option("trajectories", plot_inputs, "Trajectory CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  const std::map<std::string, log::Level> levels = {
      {"debug", log::Level::debug}, {"info", log::Level::info}, {"warn", log::Level::warn}, {"error", log::Level::error}};
  log::set_min_level(levels.at(log_level));

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (serve->parsed()) return run_serve(srv);
    return run_export_plot(plot_out, plot_inputs);
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
