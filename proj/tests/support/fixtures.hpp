#pragma once

// Shared helpers for the unit and acceptance tests.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iprop/mock_client.hpp"
#include "iprop/random.hpp"
#include "iprop/simulated_llm.hpp"
#include "iprop/types.hpp"

namespace iprop::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 gen(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("iprop-test-" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// `per_label` instances for each label, texts unique and label-free.
inline Dataset synthetic_dataset(const std::vector<std::string>& labels, std::size_t per_label,
                                 std::uint64_t seed = 1) {
  Dataset d;
  d.label_set = LabelSet(labels);
  Rng rng(seed);
  for (std::size_t i = 0; i < per_label * labels.size(); ++i) {
    d.instances.push_back(Instance{i, "item " + std::to_string(i) + " tone " + std::to_string(rng.below(1000)),
                                   labels[i % labels.size()]});
  }
  return d;
}

inline std::string dataset_csv(const Dataset& d) {
  std::string out = "text,label\n";
  for (const auto& inst : d.instances) out += "\"" + inst.text + "\"," + inst.gold_label + "\n";
  return out;
}

inline std::string seed_prompt_for(const Dataset& d) {
  return "Classify the text. Possible labels: " + d.label_set.joined() + ".";
}

/// Mock client with the hidden-quality model attached.
inline std::shared_ptr<MockClient> quality_client(const Dataset& d, std::uint64_t seed = 7,
                                                  const MetaPromptTemplates& templates = {}) {
  MockScript script;
  script.quality = QualitySpec{seed, 0.5, -0.05, 0.10};
  auto client = std::make_shared<MockClient>(script, 4);
  auto model = std::make_shared<SimulatedQualityModel>(*script.quality, d, templates);
  client->set_handler([model](const ChatRequest& r) { return model->respond(r); });
  return client;
}

inline std::string quality_script_json(std::uint64_t seed = 7) {
  return R"({"models": ["mock", "mock-large"], "quality": {"seed": )" + std::to_string(seed) +
         R"(, "initial": 0.5, "perturb_min": -0.05, "perturb_max": 0.10}})";
}

/// A port nothing listens on right now (the probe socket is closed again).
inline int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace iprop::testing
