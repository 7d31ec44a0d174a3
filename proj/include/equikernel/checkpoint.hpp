#ifndef EQUIKERNEL_CHECKPOINT_HPP_
#define EQUIKERNEL_CHECKPOINT_HPP_

#include <string>

#include "equikernel/model.hpp"

namespace equikernel {

// Weight container: 8-byte magic "EQKW0001", little-endian u64 manifest
// length, JSON manifest {layout_version, tensors: [{name, shape, offset}]},
// then the flat float64 payload.  Offsets are byte positions into the
// payload.
void save_checkpoint(const std::string& path, const ModelConfig& cfg, ModelWeights& weights);
ModelWeights load_checkpoint(const std::string& path, const ModelConfig& cfg);

}  // namespace equikernel

#endif  // EQUIKERNEL_CHECKPOINT_HPP_
