#pragma once

#include <map>
#include <string>

#include "nextcat/autodiff.hpp"

namespace nextcat::ad {

// Flat binary checkpoint of named tensors. Little-endian, stable layout:
//   magic "NCKP", u32 version, u32 count, then per tensor:
//   u32 name_len, name bytes, u32 ndim, i32 dims..., f64 values...
// Byte-identical for identical contents, which the freeze-invariance
// checks rely on.
void save_checkpoint(const std::map<std::string, Tensor>& tensors,
                     const std::string& path);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace nextcat::ad
