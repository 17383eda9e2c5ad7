#include "dqa/object_store.hpp"

#include <algorithm>
#include <atomic>
#include <system_error>

#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"

namespace fs = std::filesystem;

namespace dqa {

namespace {

constexpr std::string_view kTempMarker = ".tmp-";

bool is_temp(const std::string& name) { return name.find(kTempMarker) != std::string::npos; }

}  // namespace

LocalObjectStore::LocalObjectStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) throw IoError("cannot create store root " + root_.string());
}

fs::path LocalObjectStore::resolve(const std::string& key) const {
  // Keys are confined to the root: no absolute paths, no empty, "." or ".." parts.
  if (key.empty() || key.front() == '/') throw IoError("invalid object key '" + key + "'");
  std::size_t start = 0;
  std::string trimmed = key;
  if (trimmed.back() == '/') trimmed.pop_back();
  while (start <= trimmed.size()) {
    const std::size_t slash = std::min(trimmed.find('/', start), trimmed.size());
    const std::string_view part(trimmed.data() + start, slash - start);
    if (part.empty() || part == "." || part == ".." || part.find('\\') != std::string_view::npos) {
      throw IoError("invalid object key '" + key + "'");
    }
    start = slash + 1;
  }
  return root_ / trimmed;
}

std::mutex& LocalObjectStore::prefix_mutex(const std::string& key) {
  const std::string prefix = key.substr(0, key.find('/'));
  std::lock_guard lock(map_mutex_);
  return prefix_mutexes_[prefix];
}

void LocalObjectStore::put(const std::string& key, std::string_view bytes) {
  static std::atomic<std::uint64_t> counter{0};
  const fs::path target = resolve(key);
  std::lock_guard lock(prefix_mutex(key));
  fs::path temp = target;
  temp += std::string(kTempMarker) + std::to_string(counter.fetch_add(1));
  write_file(temp, bytes);
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw IoError("cannot publish " + target.string());
  }
}

std::optional<std::string> LocalObjectStore::get(const std::string& key) const {
  const fs::path path = resolve(key);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  return read_file(path);
}

bool LocalObjectStore::exists(const std::string& key) const {
  std::error_code ec;
  return fs::exists(resolve(key), ec);
}

std::vector<std::string> LocalObjectStore::list(const std::string& prefix) const {
  const fs::path dir = prefix.empty() ? root_ : resolve(prefix);
  std::vector<std::string> names;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    std::string name = it->path().filename().string();
    if (is_temp(name)) continue;
    if (it->is_directory(ec)) name += '/';
    names.push_back(std::move(name));
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace dqa
