#include "sumlens/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sumlens/error.hpp"

namespace sumlens {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'L', 'C', 'K'};

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("truncated checkpoint");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string serialize_checkpoint(const ToyTransformerBackend& backend) {
  const auto& model = backend.model();
  const auto& c = model.config();
  nlohmann::json header = {
      {"config",
       {{"layers", c.layers}, {"heads", c.heads}, {"embed_dim", c.embed_dim}, {"ffn_dim", c.ffn_dim},
        {"max_len", c.max_len}, {"seed", c.seed}}},
      {"lm_only", model.lm_only()},
      {"seed", c.seed},
      {"vocab_hash", hex64(backend.vocab().hash())},
      {"vocab", backend.vocab().serialize()},
      {"num_parameters", model.num_parameters()},
  };
  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  const auto params = model.parameters();
  out.append(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(double));
  return out;
}

ToyTransformerBackend parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("not a sumlens checkpoint");
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto len = take<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw DataError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, len));
    pos += len;
    const auto& jc = header.at("config");
    ToyModelConfig cfg;
    cfg.layers = jc.at("layers").get<std::size_t>();
    cfg.heads = jc.at("heads").get<std::size_t>();
    cfg.embed_dim = jc.at("embed_dim").get<std::size_t>();
    cfg.ffn_dim = jc.at("ffn_dim").get<std::size_t>();
    cfg.max_len = jc.at("max_len").get<std::size_t>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    Vocab vocab = Vocab::parse(header.at("vocab").get<std::string>());
    if (hex64(vocab.hash()) != header.at("vocab_hash").get<std::string>()) {
      throw VocabError("checkpoint vocabulary hash mismatch");
    }
    ToyTransformer model(cfg, vocab.size(), header.at("lm_only").get<bool>());
    const auto count = header.at("num_parameters").get<std::size_t>();
    if (count != model.num_parameters()) throw DataError("checkpoint parameter count does not match its config");
    if (bytes.size() - pos != count * sizeof(double)) throw DataError("checkpoint payload has the wrong size");
    std::memcpy(model.parameters().data(), bytes.data() + pos, count * sizeof(double));
    return ToyTransformerBackend(std::move(vocab), std::move(model));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const ToyTransformerBackend& backend, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PathError("cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(backend);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PathError("failed writing " + path.string());
}

ToyTransformerBackend load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace sumlens
