#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dqa {

// Flat key/value blob store. Keys are '/'-separated relative paths; the first
// component is the prefix that writes are serialized on.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;
  virtual void put(const std::string& key, std::string_view bytes) = 0;
  virtual std::optional<std::string> get(const std::string& key) const = 0;
  virtual bool exists(const std::string& key) const = 0;
  // Direct children of `prefix` (no trailing '/'), sorted; directories end in '/'.
  virtual std::vector<std::string> list(const std::string& prefix) const = 0;
};

// Objects are files under `root`. A put writes a temporary sibling and renames
// it into place, so readers see either the old or the new bytes.
class LocalObjectStore : public ObjectStore {
 public:
  explicit LocalObjectStore(std::filesystem::path root);

  void put(const std::string& key, std::string_view bytes) override;
  std::optional<std::string> get(const std::string& key) const override;
  bool exists(const std::string& key) const override;
  std::vector<std::string> list(const std::string& prefix) const override;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path resolve(const std::string& key) const;
  std::mutex& prefix_mutex(const std::string& key);

  std::filesystem::path root_;
  std::mutex map_mutex_;
  std::map<std::string, std::mutex> prefix_mutexes_;
};

}  // namespace dqa
