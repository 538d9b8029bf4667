#include "mdepth/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mdepth {

namespace {

constexpr char kMagic[8] = {'M', 'D', 'E', 'P', 'T', 'H', 'C', 'K'};
constexpr uint8_t kVersion = 0x01;

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

void write_f32(std::ostream& out, const std::vector<double>& values) {
  std::vector<float> buf(values.size());
  for (size_t i = 0; i < values.size(); ++i) buf[i] = static_cast<float>(values[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void read_f32(std::istream& in, std::vector<double>* values, const std::string& path) {
  std::vector<float> buf(values->size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw DataError(path + ": truncated parameter payload");
  for (size_t i = 0; i < buf.size(); ++i) (*values)[i] = static_cast<double>(buf[i]);
}

}  // namespace

void save_checkpoint(const std::string& path, const TwoScaleModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  out.put(static_cast<char>(kVersion));
  const std::string spec = model.spec.to_text();
  const uint32_t len = static_cast<uint32_t>(spec.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  for (const Stack* stack : {&model.coarse, &model.fine})
    for (const TensorPtr& p : stack->params()) write_f32(out, p->data);
  if (!out) throw DataError("short write to checkpoint " + path);
}

TwoScaleModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError(path + ": not a checkpoint file");
  const int version = in.get();
  if (version != kVersion)
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20)) throw DataError(path + ": malformed spec header");
  std::string spec_text(len, '\0');
  in.read(spec_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError(path + ": truncated spec");

  TwoScaleModel model = build_networks(parse_network_spec(spec_text));
  for (Stack* stack : {&model.coarse, &model.fine})
    for (const TensorPtr& p : stack->params()) read_f32(in, &p->data, path);
  return model;
}

}  // namespace mdepth
