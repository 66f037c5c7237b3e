#pragma once

#include <map>
#include <string>
#include <vector>

#include "sslspk/tensor.hpp"

namespace sslspk {

// Named-tensor container backing every on-disk artifact that carries
// parameters or optimizer/queue state. The file is a one-line magic plus a
// JSON text header (tensor names, shapes, offsets, string metadata) followed
// by a flat blob of raw little-endian 64-bit floats. Round-trips bit-exactly.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sslspk
