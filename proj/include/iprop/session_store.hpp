#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iprop/types.hpp"

namespace iprop {

/// One JSON document per session at <data_dir>/sessions/<id>.json. Writes go
/// to a temporary file that is flushed and renamed over the old document, so
/// a reader (or a restarted process) sees either the previous or the new state.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path data_dir);

  void save(const SessionState& state) const;
  /// Throws NotFound for unknown or malformed ids, MalformedContent for a
  /// document that does not parse.
  SessionState load(std::string_view session_id) const;
  bool exists(std::string_view session_id) const;
  /// Ids of all stored sessions, sorted.
  std::vector<std::string> list() const;
  /// Removes temporary files left behind by an interrupted save.
  void remove_stale_temporaries() const;

  std::filesystem::path path_for(std::string_view session_id) const;
  const std::filesystem::path& directory() const { return dir_; }

  /// 22 characters from the URL-safe base64 alphabet.
  static bool valid_id(std::string_view session_id);

 private:
  std::filesystem::path dir_;
};

}  // namespace iprop
