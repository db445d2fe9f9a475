#include "bamkit/tensor_io.hpp"

#include <bit>
#include <cstring>

#include "bamkit/fsutil.hpp"

namespace bamkit {

namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 8;

static_assert(std::endian::native == std::endian::little, "TNSR encoding assumes a little-endian host");

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

template <typename T>
BasicTensor<T> decode_payload(const Shape& shape, std::span<const std::uint8_t> payload) {
  std::vector<T> data(shape_size(shape));
  require(payload.size() == data.size() * sizeof(T), ErrorCode::kInvalidData,
          "TNSR payload length " + std::to_string(payload.size()) + " does not match shape " + shape_string(shape));
  std::memcpy(data.data(), payload.data(), payload.size());
  return BasicTensor<T>(shape, std::move(data));
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_tnsr(const BasicTensor<T>& t) {
  require(t.rank() <= 255, ErrorCode::kInvalidArgument, "TNSR rank must fit in a byte");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 8 * t.rank() + t.size() * sizeof(T));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(BasicTensor<T>::kDType));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  out.push_back(0);
  for (std::size_t d : t.shape()) put_u64(out, d);
  const auto* raw = reinterpret_cast<const std::uint8_t*>(t.ptr());
  out.insert(out.end(), raw, raw + t.size() * sizeof(T));
  return out;
}

AnyTensor decode_tnsr(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kHeaderSize && std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::kInvalidData,
          "not a TNSR container (bad magic)");
  require(bytes[4] == kVersion, ErrorCode::kInvalidData, "unsupported TNSR version " + std::to_string(bytes[4]));
  require(bytes[7] == 0, ErrorCode::kInvalidData, "TNSR reserved byte must be zero");
  const std::size_t rank = bytes[6];
  require(bytes.size() >= kHeaderSize + 8 * rank, ErrorCode::kInvalidData, "truncated TNSR header");
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = get_u64(bytes.data() + kHeaderSize + 8 * i);
    require(shape[i] > 0, ErrorCode::kInvalidData, "TNSR dimension must be positive");
  }
  const auto payload = bytes.subspan(kHeaderSize + 8 * rank);
  switch (static_cast<DType>(bytes[5])) {
    case DType::kF32:
      return decode_payload<float>(shape, payload);
    case DType::kF64:
      return decode_payload<double>(shape, payload);
  }
  fail(ErrorCode::kInvalidData, "unknown TNSR dtype code " + std::to_string(bytes[5]));
}

template <typename T>
BasicTensor<T> decode_tnsr_as(std::span<const std::uint8_t> bytes) {
  return std::visit([](auto&& t) { return t.template cast<T>(); }, decode_tnsr(bytes));
}

template <typename T>
void save_tnsr(const std::filesystem::path& path, const BasicTensor<T>& t) {
  write_file_atomic(path, encode_tnsr(t));
}

template <typename T>
BasicTensor<T> load_tnsr(const std::filesystem::path& path) {
  return decode_tnsr_as<T>(read_file(path));
}

template std::vector<std::uint8_t> encode_tnsr(const BasicTensor<float>&);
template std::vector<std::uint8_t> encode_tnsr(const BasicTensor<double>&);
template BasicTensor<float> decode_tnsr_as(std::span<const std::uint8_t>);
template BasicTensor<double> decode_tnsr_as(std::span<const std::uint8_t>);
template void save_tnsr(const std::filesystem::path&, const BasicTensor<float>&);
template void save_tnsr(const std::filesystem::path&, const BasicTensor<double>&);
template BasicTensor<float> load_tnsr(const std::filesystem::path&);
template BasicTensor<double> load_tnsr(const std::filesystem::path&);

}  // namespace bamkit
