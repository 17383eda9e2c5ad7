#include <cmath>
#include <cstring>

#include "dqa/binary_io.hpp"
#include "dqa/embeddings.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"

namespace dqa {

namespace {

constexpr std::string_view kMagic = "SGNS1";
// Optional block after the matrices carrying the vocab bookkeeping and
// training snapshot; readers that stop after the matrices still work.
constexpr std::string_view kTrailerMagic = "CFG1";

void put_matrix(BinaryWriter& w, const std::vector<float>& m) {
  for (float x : m) w.put<float>(x);
}

std::vector<float> get_matrix(BinaryReader& r, std::size_t n) {
  if (n > r.remaining() / 4) throw FormatError("SGNS1: matrix larger than file");
  std::vector<float> m(n);
  for (float& x : m) x = r.get<float>();
  return m;
}

}  // namespace

std::uint64_t model_fingerprint(const EmbeddingModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&model.dim, sizeof model.dim);
  for (const auto& t : model.vocab.tokens) {
    mix(t.data(), t.size());
    mix("\0", 1);
  }
  mix(model.input_vectors.data(), model.input_vectors.size() * sizeof(float));
  return h;
}

std::string serialize_model(const EmbeddingModel& model) {
  const std::size_t V = model.vocab.size();
  if (model.input_vectors.size() != V * model.dim || model.output_vectors.size() != V * model.dim) {
    throw DimensionMismatch("SGNS1: matrix shape does not match vocabulary");
  }
  BinaryWriter w;
  w.bytes(kMagic);
  w.put<std::uint32_t>(model.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(V));
  for (std::size_t i = 0; i < V; ++i) {
    w.str(model.vocab.tokens[i]);
    w.put<std::uint64_t>(model.vocab.counts[i]);
  }
  put_matrix(w, model.input_vectors);
  put_matrix(w, model.output_vectors);

  const TrainConfig& c = model.train_config;
  w.bytes(kTrailerMagic);
  w.put<std::uint64_t>(model.vocab.min_count);
  w.put<std::uint64_t>(model.vocab.total_tokens);
  w.put<std::uint32_t>(c.dim);
  w.put<std::uint32_t>(c.window);
  w.put<std::uint32_t>(c.negatives);
  w.put<double>(c.learning_rate);
  w.put<std::uint32_t>(c.epochs);
  w.put<double>(c.subsample_t);
  w.put<std::uint64_t>(c.min_count);
  w.put<std::uint8_t>(c.seed.has_value() ? 1 : 0);
  w.put<std::uint64_t>(c.seed.value_or(0));
  w.put<std::uint32_t>(c.threads);
  return w.take();
}

EmbeddingModel deserialize_model(std::string_view bytes) {
  BinaryReader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) throw FormatError("not an SGNS1 model file");
  EmbeddingModel m;
  m.dim = r.get<std::uint32_t>();
  const std::uint32_t V = r.get<std::uint32_t>();
  if (m.dim == 0) throw FormatError("SGNS1: dim must be positive");
  m.vocab.tokens.reserve(std::min<std::size_t>(V, r.remaining() / 12));
  for (std::uint32_t i = 0; i < V; ++i) {
    std::string tok = r.str();
    const auto count = r.get<std::uint64_t>();
    if (!m.vocab.token_to_id.emplace(tok, i).second) throw FormatError("SGNS1: duplicate token '" + tok + "'");
    m.vocab.tokens.push_back(std::move(tok));
    m.vocab.counts.push_back(count);
    m.vocab.total_tokens += count;
  }
  const std::size_t n = std::size_t{V} * m.dim;
  m.input_vectors = get_matrix(r, n);
  m.output_vectors = get_matrix(r, n);
  m.vocab.min_count = 1;
  m.train_config.dim = m.dim;
  if (!r.at_end()) {
    if (r.remaining() < kTrailerMagic.size() || r.bytes(kTrailerMagic.size()) != kTrailerMagic) {
      throw FormatError("SGNS1: trailing bytes after matrices");
    }
    TrainConfig& c = m.train_config;
    m.vocab.min_count = r.get<std::uint64_t>();
    m.vocab.total_tokens = r.get<std::uint64_t>();
    c.dim = r.get<std::uint32_t>();
    c.window = r.get<std::uint32_t>();
    c.negatives = r.get<std::uint32_t>();
    c.learning_rate = r.get<double>();
    c.epochs = r.get<std::uint32_t>();
    c.subsample_t = r.get<double>();
    c.min_count = r.get<std::uint64_t>();
    const bool has_seed = r.get<std::uint8_t>() != 0;
    const auto seed = r.get<std::uint64_t>();
    if (has_seed) c.seed = seed;
    c.threads = r.get<std::uint32_t>();
    if (!r.at_end()) throw FormatError("SGNS1: trailing bytes after config block");
  }
  return m;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

EmbeddingModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace dqa
