#pragma once

// TNSR container: "TNSR" | version u8 = 1 | dtype u8 (1 = F32, 2 = F64) |
// rank u8 | reserved u8 = 0 | rank x u64 LE dims | row-major LE payload.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "bamkit/tensor.hpp"

namespace bamkit {

using AnyTensor = std::variant<Tensor, TensorD>;

template <typename T>
std::vector<std::uint8_t> encode_tnsr(const BasicTensor<T>& t);

AnyTensor decode_tnsr(std::span<const std::uint8_t> bytes);

// Decodes and converts to the requested element type if needed.
template <typename T>
BasicTensor<T> decode_tnsr_as(std::span<const std::uint8_t> bytes);

template <typename T>
void save_tnsr(const std::filesystem::path& path, const BasicTensor<T>& t);

template <typename T>
BasicTensor<T> load_tnsr(const std::filesystem::path& path);

}  // namespace bamkit
