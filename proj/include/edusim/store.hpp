#pragma once

// File-backed scenario store. Layout:
//
//   <root>/<id>/v000001.json
//   <root>/<id>/v000002.json
//   ...
//
// Every update writes a new version document to a temporary file, flushes
// it, and links it into place; link(2) refuses to overwrite, so two writers
// racing for the same version cannot both win. Old versions are kept.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edusim/scenario.hpp"

namespace edusim {

class ScenarioStore {
 public:
  explicit ScenarioStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  const std::filesystem::path& root() const { return root_; }

  // Validates, assigns an id and version 1, persists.
  nlohmann::json create(const nlohmann::json& body) {
    auto [scenario, model] = scenario_from_json(body);
    std::lock_guard lock(mutex_);
    do {
      scenario.id = fresh_id();
    } while (std::filesystem::exists(root_ / scenario.id));
    std::filesystem::create_directories(root_ / scenario.id);
    scenario.version = 1;
    auto doc = scenario_to_json(scenario, *model.graph);
    write_version(scenario.id, 1, doc);
    return doc;
  }

  nlohmann::json get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return load_latest(id);
  }

  // The loaded scenario with its compiled model.
  std::pair<Scenario, Model> load(const std::string& id) const {
    return scenario_from_json(get(id));
  }

  // Optimistic concurrency: `expected_version` must be the latest version.
  nlohmann::json update(const std::string& id, const nlohmann::json& body,
                        std::int64_t expected_version) {
    auto [scenario, model] = scenario_from_json(body);
    std::lock_guard lock(mutex_);
    const auto current = load_latest(id);
    const auto latest = current["version"].get<std::int64_t>();
    if (latest != expected_version)
      throw ApiError(409, "version-conflict",
                     "scenario " + id + " is at version " + std::to_string(latest) +
                         ", update expected " + std::to_string(expected_version));
    scenario.id = id;
    scenario.version = latest + 1;
    auto doc = scenario_to_json(scenario, *model.graph);
    write_version(id, scenario.version, doc);
    return doc;
  }

  void remove(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto dir = scenario_dir(id);
    // Rename first so a crash mid-delete never leaves a half-readable scenario.
    const auto grave = root_ / ("." + id + ".deleted");
    std::filesystem::rename(dir, grave);
    std::filesystem::remove_all(grave);
  }

  nlohmann::json list() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
      const auto name = entry.path().filename().string();
      if (entry.is_directory() && !name.empty() && name[0] != '.') ids.push_back(name);
    }
    std::sort(ids.begin(), ids.end());
    nlohmann::json out = nlohmann::json::array();
    for (const auto& id : ids) {
      if (versions(root_ / id).empty()) continue;
      const auto doc = load_latest(id);
      out.push_back({{"id", id}, {"name", doc["name"]}, {"version", doc["version"]}});
    }
    return out;
  }

  // All stored versions of a scenario, ascending.
  std::vector<std::int64_t> history(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return versions(scenario_dir(id));
  }

 private:
  static bool valid_id(const std::string& id) {
    return !id.empty() && id[0] != '.' && detail::valid_code(id);
  }

  std::filesystem::path scenario_dir(const std::string& id) const {
    if (!valid_id(id) || !std::filesystem::is_directory(root_ / id) || versions(root_ / id).empty())
      throw ApiError(404, "not-found", "no scenario " + id);
    return root_ / id;
  }

  static std::string version_name(std::int64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "v%06lld.json", static_cast<long long>(v));
    return buf;
  }

  static std::vector<std::int64_t> versions(const std::filesystem::path& dir) {
    std::vector<std::int64_t> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
      const auto name = entry.path().filename().string();
      if (name.size() < 7 || name[0] != 'v' || name.substr(name.size() - 5) != ".json") continue;
      try {
        out.push_back(std::stoll(name.substr(1, name.size() - 6)));
      } catch (const std::exception&) {
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  nlohmann::json load_latest(const std::string& id) const {
    const auto dir = scenario_dir(id);
    const auto v = versions(dir).back();
    std::ifstream in(dir / version_name(v));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return nlohmann::json::parse(buffer.str());
  }

  void write_version(const std::string& id, std::int64_t version, const nlohmann::json& doc) {
    const auto dir = root_ / id;
    const auto final_path = dir / version_name(version);
    const auto tmp_path = dir / ("." + version_name(version) + ".tmp");
    const std::string text = doc.dump(2) + "\n";

    const int fd = ::open(tmp_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw ApiError(500, "store-io", "cannot write " + tmp_path.string());
    std::size_t written = 0;
    while (written < text.size()) {
      const auto n = ::write(fd, text.data() + written, text.size() - written);
      if (n <= 0) {
        ::close(fd);
        throw ApiError(500, "store-io", "short write to " + tmp_path.string());
      }
      written += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    if (::link(tmp_path.c_str(), final_path.c_str()) != 0) {
      ::unlink(tmp_path.c_str());
      throw ApiError(409, "version-conflict", "version " + std::to_string(version) + " of " + id +
                                                  " was written concurrently");
    }
    ::unlink(tmp_path.c_str());
  }

  std::string fresh_id() {
    static constexpr char hex[] = "0123456789abcdef";
    std::string id = "sc-";
    for (int i = 0; i < 12; ++i) id += hex[rng_() % 16];
    return id;
  }

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace edusim
