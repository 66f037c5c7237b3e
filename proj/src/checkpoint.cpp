#include "sslspk/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "sslspk/errors.hpp"

namespace sslspk {

namespace {
constexpr const char* kMagic = "SSLSPK1";
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("checkpoint: missing tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["meta"] = ckpt.meta;
  header["tensors"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    header["tensors"].push_back(
        {{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size();
  }
  const std::string text = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot write " + path);
  f << kMagic << ' ' << text.size() << '\n' << text << '\n';
  for (const auto& [name, t] : ckpt.tensors) {
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!f) throw DataError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);

  std::string magic;
  std::size_t header_len = 0;
  f >> magic >> header_len;
  f.get();  // newline
  if (magic != kMagic) {
    throw DataError("checkpoint: " + path + " has unknown magic '" + magic + "'");
  }
  std::string text(header_len, '\0');
  f.read(text.data(), static_cast<std::streamsize>(header_len));
  f.get();  // newline
  if (!f) throw DataError("checkpoint: truncated header in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw DataError("checkpoint: bad header in " + path + ": " + e.what());
  }

  Checkpoint ckpt;
  if (header.contains("meta")) {
    for (auto& [k, v] : header["meta"].items()) {
      ckpt.meta[k] = v.get<std::string>();
    }
  }
  for (const auto& entry : header["tensors"]) {
    const std::string name = entry["name"].get<std::string>();
    const std::vector<std::size_t> shape =
        entry["shape"].get<std::vector<std::size_t>>();
    std::size_t count = 1;
    for (std::size_t d : shape) count *= d;
    std::vector<double> data(count);
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw DataError("checkpoint: truncated tensor '" + name + "' in " + path);
    ckpt.tensors.emplace_back(name, Tensor(shape, std::move(data)));
  }
  return ckpt;
}

}  // namespace sslspk
