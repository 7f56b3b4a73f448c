#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fullend/ad/tensor.hpp"

namespace fullend::ad {

/// On disk: 8-byte magic "FESECKPT", u32 version, u64 header length, a text
/// header of "meta <key> <value>" and "tensor <name> f64 <rank> <dims...>"
/// lines, then each tensor's float64 values little-endian in header order.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  ParamList tensors;

  const Tensor* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ParamList& params, const std::map<std::string, std::string>& meta = {});
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::string& path, const ParamList& params,
                     const std::map<std::string, std::string>& meta = {});
Checkpoint load_checkpoint(const std::string& path);

/// Copies stored values into `params` by name; every parameter must be
/// present with the same shape.
void restore(const Checkpoint& ckpt, const ParamList& params);

}  // namespace fullend::ad
