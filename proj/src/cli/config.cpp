#include <limits>
#include <set>
#include <type_traits>

#include "dqa/cli.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "json.hpp"

namespace dqa {

namespace {

using nlohmann::json;

// Typed reads from one config section; every key read is consumed, leftovers
// are reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  // Throws on keys that no read asked for.
  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where(key) + ": unknown key");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    auto it = find(key);
    if (!it) return;
    const json& v = *it;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned()) {
        throw ConfigError(where(key) + ": expected a non-negative integer");
      }
      if (v.is_number_unsigned() ? v.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<T>::max())
                                 : v.get<std::int64_t>() < std::int64_t(std::numeric_limits<T>::min()) ||
                                       v.get<std::int64_t>() > std::int64_t(std::numeric_limits<T>::max())) {
        throw ConfigError(where(key) + ": integer out of range");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    }
    out = v.get<T>();
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    if (!find(key)) return;
    T value{};
    read(key, value);
    out = value;
  }

  void read_strings(const char* key, std::vector<std::string>& out) {
    auto it = find(key);
    if (!it) return;
    if (!it->is_array()) throw ConfigError(where(key) + ": expected an array of strings");
    out.clear();
    for (const auto& v : *it) {
      if (!v.is_string()) throw ConfigError(where(key) + ": expected an array of strings");
      out.push_back(v.get<std::string>());
    }
  }

  void read_path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    if (!find(key)) return;
    read(key, s);
    const std::filesystem::path p(s);
    out = p.is_absolute() || base.empty() ? p : base / p;
  }

  template <typename F>
  void sub(const char* key, F&& body) {
    auto it = find(key);
    if (!it) return;
    Section s(*it, where(key));
    body(s);
    s.done();
  }

 private:
  const json* find(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Ratios>
void read_ratios(Section& parent, const char* key, Ratios& r) {
  parent.sub(key, [&](Section& s) {
    s.read("train", r.train);
    s.read("dev", r.dev);
    s.read("test", r.test);
  });
}

}  // namespace

void RunConfig::validate() const {
  // Seeds are checked by the subcommands that need them.
  TrainConfig e = embeddings;
  e.seed = 0;
  e.validate();
  ClassifierConfig c = classifier;
  c.seed = 0;
  c.validate();
  if (segmenter.min_len > segmenter.max_len) throw ConfigError("segmenter.min_len exceeds segmenter.max_len");
  for (double r : {dataset.ratios.train, dataset.ratios.dev, dataset.ratios.test}) {
    if (!(r >= 0) || r > 1) throw ConfigError("dataset.ratios must be in [0, 1]");
  }
  for (double r : {dataset.neg_per_pos.train, dataset.neg_per_pos.dev, dataset.neg_per_pos.test}) {
    if (!(r > 0)) throw ConfigError("dataset.neg_per_pos must be positive");
  }
  if (service.port < 0 || service.port > 65535) throw ConfigError("service.port must be in [0, 65535]");
  if (service.workers == 0) throw ConfigError("service.workers must be positive");
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  root.sub("segmenter", [&](Section& s) {
    s.read("min_len", c.segmenter.min_len);
    s.read("max_len", c.segmenter.max_len);
    s.read_strings("abbreviations", c.segmenter.abbreviations);
  });
  root.sub("embeddings", [&](Section& s) {
    s.read("dim", c.embeddings.dim);
    s.read("window", c.embeddings.window);
    s.read("negatives", c.embeddings.negatives);
    s.read("learning_rate", c.embeddings.learning_rate);
    s.read("epochs", c.embeddings.epochs);
    s.read("subsample_t", c.embeddings.subsample_t);
    s.read("min_count", c.embeddings.min_count);
    s.read("threads", c.embeddings.threads);
  });
  root.sub("classifier", [&](Section& s) {
    s.read("learning_rate", c.classifier.learning_rate);
    s.read("epochs", c.classifier.epochs);
    s.read("l2", c.classifier.l2);
    s.read("class_weight_pos", c.classifier.class_weight_pos);
  });
  root.sub("dataset", [&](Section& s) {
    read_ratios(s, "ratios", c.dataset.ratios);
    read_ratios(s, "neg_per_pos", c.dataset.neg_per_pos);
  });
  root.sub("service", [&](Section& s) {
    s.read("host", c.service.host);
    s.read("port", c.service.port);
    s.read_path("store_root", c.service.store_root, base_dir);
    s.read_path("embeddings", c.service.embeddings_path, base_dir);
    s.read_path("classifier", c.service.classifier_path, base_dir);
    s.read("scorer_cmd", c.service.scorer_cmd);
    s.read("workers", c.service.workers);
    s.read("max_upload_bytes", c.service.max_upload_bytes);
  });
  root.done();
  c.service.segmenter = c.segmenter;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text, path.parent_path());
}

}  // namespace dqa
