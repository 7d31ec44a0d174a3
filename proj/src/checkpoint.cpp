#include "equikernel/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace equikernel {

namespace {
constexpr char kMagic[8] = {'E', 'Q', 'K', 'W', '0', '0', '0', '1'};
constexpr int kLayoutVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg, ModelWeights& weights) {
  nlohmann::json manifest;
  manifest["layout_version"] = kLayoutVersion;
  manifest["tensors"] = nlohmann::json::array();

  std::vector<double> payload;
  weights.visit(cfg, [&](const std::string& name, const std::vector<int>& shape,
                         std::vector<double>& data) {
    nlohmann::json t;
    t["name"] = name;
    t["shape"] = shape;
    t["offset"] = payload.size() * sizeof(double);
    manifest["tensors"].push_back(t);
    payload.insert(payload.end(), data.begin(), data.end());
  });

  const std::string mjson = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  const std::uint64_t mlen = mjson.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

ModelWeights load_checkpoint(const std::string& path, const ModelConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not an equikernel checkpoint: " + path);
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mjson(mlen, '\0');
  in.read(mjson.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("truncated checkpoint manifest: " + path);

  nlohmann::json manifest = nlohmann::json::parse(mjson);
  if (manifest.value("layout_version", -1) != kLayoutVersion)
    throw std::runtime_error("unsupported checkpoint layout version");

  struct Entry {
    std::vector<int> shape;
    std::uint64_t offset;
  };
  std::map<std::string, Entry> index;
  for (const auto& t : manifest.at("tensors"))
    index[t.at("name").get<std::string>()] = {t.at("shape").get<std::vector<int>>(),
                                              t.at("offset").get<std::uint64_t>()};

  std::vector<char> payload((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());

  ModelWeights w = ModelWeights::make(cfg);
  w.visit(cfg, [&](const std::string& name, const std::vector<int>& shape,
                   std::vector<double>& data) {
    auto it = index.find(name);
    if (it == index.end())
      throw std::runtime_error("checkpoint is missing tensor: " + name);
    if (it->second.shape != shape)
      throw std::runtime_error("checkpoint shape mismatch for tensor: " + name);
    const std::uint64_t bytes = data.size() * sizeof(double);
    if (it->second.offset + bytes > payload.size())
      throw std::runtime_error("checkpoint payload truncated at tensor: " + name);
    std::memcpy(data.data(), payload.data() + it->second.offset, bytes);
  });
  return w;
}

}  // namespace equikernel
