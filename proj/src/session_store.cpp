#include "iprop/session_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "iprop/error.hpp"
#include "iprop/serialization.hpp"

namespace iprop {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTempSuffix = ".tmp";

[[noreturn]] void io_failure(const fs::path& path, const char* what) {
  throw std::runtime_error(std::string(what) + " " + path.string() + ": " + std::strerror(errno));
}

void write_durably(const fs::path& path, const std::string& bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_failure(path, "cannot create");
  std::size_t written = 0;
  while (written < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_failure(path, "cannot write");
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_failure(path, "cannot sync");
  }
  ::close(fd);
}

void sync_directory(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

SessionStore::SessionStore(fs::path data_dir) : dir_(std::move(data_dir) / "sessions") {
  fs::create_directories(dir_);
}

bool SessionStore::valid_id(std::string_view id) {
  return id.size() == 22 && std::all_of(id.begin(), id.end(), [](unsigned char c) {
           return std::isalnum(c) || c == '-' || c == '_';
         });
}

fs::path SessionStore::path_for(std::string_view id) const {
  if (!valid_id(id)) throw Error(ErrorCode::NotFound, "invalid session id '" + std::string(id) + "'");
  return dir_ / (std::string(id) + ".json");
}

void SessionStore::save(const SessionState& state) const {
  const auto target = path_for(state.session_id);
  auto temp = target;
  temp += kTempSuffix;
  write_durably(temp, json(state).dump());
  fs::rename(temp, target);
  sync_directory(dir_);
}

SessionState SessionStore::load(std::string_view id) const {
  const auto path = path_for(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "no session '" + std::string(id) + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str()).get<SessionState>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedContent,
                "session document " + path.string() + " is unreadable: " + e.what());
  }
}

bool SessionStore::exists(std::string_view id) const {
  return valid_id(id) && fs::exists(path_for(id));
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    auto id = entry.path().stem().string();
    if (valid_id(id)) ids.push_back(std::move(id));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void SessionStore::remove_stale_temporaries() const {
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() == kTempSuffix) fs::remove(entry.path());
  }
}

}  // namespace iprop
