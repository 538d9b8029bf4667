#include "mdepth/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace mdepth {

namespace {

uint8_t to_byte(double v) {
  const double x = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(x * 255.0));
}

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

struct PnmHeader {
  std::string magic;
  int width = 0, height = 0, maxval = 0;
};

PnmHeader read_header(std::istream& in, const std::string& path) {
  PnmHeader h;
  h.magic = next_token(in);
  try {
    h.width = std::stoi(next_token(in));
    h.height = std::stoi(next_token(in));
    h.maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw DataError(path + ": malformed header");
  }
  if (h.width <= 0 || h.height <= 0) throw DataError(path + ": malformed header");
  return h;
}

}  // namespace

void write_ppm(const std::string& path, const Rgb& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(image.width) * 3);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c)
      for (int ch = 0; ch < 3; ++ch)
        row[static_cast<size_t>(c) * 3 + ch] = to_byte(image.at(ch, r, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("short write to " + path);
}

Rgb read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P6" || h.maxval != 255)
    throw DataError(path + ": expected binary 8-bit PPM");
  Rgb img(h.height, h.width);
  std::vector<uint8_t> row(static_cast<size_t>(h.width) * 3);
  for (int r = 0; r < h.height; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw DataError(path + ": truncated pixel payload");
    for (int c = 0; c < h.width; ++c)
      for (int ch = 0; ch < 3; ++ch)
        img.at(ch, r, c) = row[static_cast<size_t>(c) * 3 + ch] / 255.0;
  }
  return img;
}

int save_depth(const std::string& path, const DepthMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "P5\n" << map.width << " " << map.height << "\n65535\n";
  int clamped = 0;
  std::vector<uint8_t> row(static_cast<size_t>(map.width) * 2);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      uint16_t mm = 0;
      if (map.valid(r, c)) {
        const double v = map.at(r, c) * 1000.0;
        long q = std::lround(v);
        if (q > 65535) {
          q = 65535;
          ++clamped;
        }
        if (q < 1) q = 1;  // valid pixels must not encode as the invalid marker
        mm = static_cast<uint16_t>(q);
      }
      row[static_cast<size_t>(c) * 2] = static_cast<uint8_t>(mm >> 8);
      row[static_cast<size_t>(c) * 2 + 1] = static_cast<uint8_t>(mm & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("short write to " + path);
  return clamped;
}

DepthMap load_depth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5" || h.maxval != 65535)
    throw DataError(path + ": expected 16-bit binary PGM depth file");
  DepthMap map(h.height, h.width);
  std::vector<uint8_t> row(static_cast<size_t>(h.width) * 2);
  for (int r = 0; r < h.height; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw DataError(path + ": truncated pixel payload");
    for (int c = 0; c < h.width; ++c) {
      const uint16_t mm = static_cast<uint16_t>((row[static_cast<size_t>(c) * 2] << 8) |
                                                row[static_cast<size_t>(c) * 2 + 1]);
      if (mm > 0) map.set(r, c, mm / 1000.0);
    }
  }
  return map;
}

void write_pgm8(const std::string& path, int height, int width,
                const std::vector<uint8_t>& gray) {
  if (gray.size() != static_cast<size_t>(height) * width)
    throw Error("write_pgm8: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()),
            static_cast<std::streamsize>(gray.size()));
  if (!out) throw DataError("short write to " + path);
}

}  // namespace mdepth
