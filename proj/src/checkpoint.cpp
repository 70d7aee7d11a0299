#include <cstring>
#include <fstream>

#include "tgsum/error.hpp"
#include "tgsum/io.hpp"
#include "tgsum/model.hpp"

namespace tgsum {
namespace {

constexpr char kMagic[8] = {'T', 'G', 'S', 'U', 'M', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model, std::uint64_t vocab_hash,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["hparams"] = model.hparams().to_json();
  header["vocab_hash"] = vocab_hash;
  header["meta"] = meta;
  auto& shapes = header["params"] = nlohmann::json::array();
  for (const auto& p : model.params())
    shapes.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  std::string head = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, head.size());
  out += head;
  for (const auto& p : model.params()) {
    // column-major payload, matching Eigen's storage
    out.append(reinterpret_cast<const char*>(p.value.data()), static_cast<std::size_t>(p.value.size()) * sizeof(double));
  }
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint not found: " + path.string());
  std::string in = read_file(path);
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError(path.string() + ": not a checkpoint");
  std::size_t pos = sizeof(kMagic);
  auto version = take<std::uint32_t>(in, pos);
  if (version != kVersion) throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  auto head_len = take<std::uint64_t>(in, pos);
  if (pos + head_len > in.size()) throw DataError("checkpoint truncated");
  auto header = nlohmann::json::parse(in.substr(pos, head_len));
  pos += head_len;

  Checkpoint ck;
  ck.hparams = Hyperparams::from_json(header.at("hparams"));
  ck.vocab_hash = header.at("vocab_hash").get<std::uint64_t>();
  ck.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("params")) {
    int idx = ck.params.add(entry.at("name").get<std::string>(), entry.at("rows").get<int>(), entry.at("cols").get<int>());
    auto& m = ck.params[idx].value;
    std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
    if (pos + bytes > in.size()) throw DataError("checkpoint truncated");
    std::memcpy(m.data(), in.data() + pos, bytes);
    pos += bytes;
  }
  if (pos != in.size()) throw DataError("checkpoint has trailing bytes");
  return ck;
}

Model model_from_checkpoint(const Checkpoint& ckpt) { return Model(ckpt.hparams, ckpt.params); }

}  // namespace tgsum
