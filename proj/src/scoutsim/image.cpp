#include "scoutsim/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "scoutsim/raysim.hpp"

namespace scoutsim {

Image::Image(int w, int h, std::array<uint8_t, 3> fill) : w_(w), h_(h) {
  px_.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < px_.size(); i += 3) {
    px_[i] = fill[0];
    px_[i + 1] = fill[1];
    px_[i + 2] = fill[2];
  }
}

void Image::set(int x, int y, std::array<uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
  const size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
  px_[i] = c[0];
  px_[i + 1] = c[1];
  px_[i + 2] = c[2];
}

void Image::fill_rect(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c) {
  for (int y = std::max(0, y0); y <= std::min(h_ - 1, y1); ++y)
    for (int x = std::max(0, x0); x <= std::min(w_ - 1, x1); ++x) set(x, y, c);
}

void Image::line(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c) {
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used.
struct Glyph {
  char ch;
  uint8_t rows[7];
};

const Glyph kGlyphs[] = {
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x06, 0x06}},
    {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
    {'e', {0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e}},
    {'m', {0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15}},
    {'s', {0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e}},
    {'t', {0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06}},
    {'p', {0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10}},
    {'d', {0x01, 0x01, 0x0f, 0x11, 0x11, 0x11, 0x0f}},
    {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char ch) {
  for (const Glyph& g : kGlyphs)
    if (g.ch == ch) return &g;
  return nullptr;
}

void put_be32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x >> 24));
  v.push_back(static_cast<uint8_t>(x >> 16));
  v.push_back(static_cast<uint8_t>(x >> 8));
  v.push_back(static_cast<uint8_t>(x));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& data) {
  std::vector<uint8_t> hdr;
  put_be32(hdr, static_cast<uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(hdr.data()), 4);
  out.write(type, 4);
  if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()), data.size());
  uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  std::vector<uint8_t> tail;
  put_be32(tail, static_cast<uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void Image::text(int x, int y, const std::string& s, std::array<uint8_t, 3> c) {
  int cx = x;
  for (char ch : s) {
    const Glyph* g = find_glyph(ch);
    if (g) {
      for (int r = 0; r < 7; ++r)
        for (int b = 0; b < 5; ++b)
          if (g->rows[r] & (1 << (4 - b))) set(cx + b, y + r, c);
    }
    cx += 6;
  }
}

void write_png(const std::string& path, int w, int h, const uint8_t* rgb) {
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h) * (1 + static_cast<size_t>(w) * 3));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), rgb + static_cast<size_t>(y) * w * 3,
               rgb + static_cast<size_t>(y + 1) * w * 3);
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw io_error("png: deflate failed");
  comp.resize(comp_size);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write png: " + path);
  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, static_cast<uint32_t>(w));
  put_be32(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk(out, "IHDR", ihdr);
  write_chunk(out, "IDAT", comp);
  write_chunk(out, "IEND", {});
  if (!out) throw io_error("short write on png: " + path);
}

void Image::save_png(const std::string& path) const { write_png(path, w_, h_, px_.data()); }

void save_frame_png(const RgbdFrame& frame, const std::string& path) {
  std::vector<uint8_t> rgb8(frame.rgb.size());
  for (size_t i = 0; i < frame.rgb.size(); ++i)
    rgb8[i] = static_cast<uint8_t>(std::lround(std::clamp(frame.rgb[i], 0.f, 1.f) * 255.f));
  write_png(path, frame.width, frame.height, rgb8.data());
}

void save_depth_f32(const RgbdFrame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write depth: " + path);
  out.write(reinterpret_cast<const char*>(frame.depth.data()),
            static_cast<std::streamsize>(frame.depth.size() * sizeof(float)));
}

std::array<uint8_t, 3> series_color(size_t index) {
  static const std::array<uint8_t, 3> palette[] = {
      {214, 39, 40},  {31, 119, 180}, {44, 160, 44},  {255, 127, 14}, {148, 103, 189},
      {140, 86, 75},  {227, 119, 194}, {127, 127, 127}, {188, 189, 34}, {23, 190, 207},
  };
  if (index < std::size(palette)) return palette[index];
  const uint64_t h = Rng::splitmix64(index);
  return {static_cast<uint8_t>(64 + (h & 0x7f)), static_cast<uint8_t>(64 + ((h >> 8) & 0x7f)),
          static_cast<uint8_t>(64 + ((h >> 16) & 0x7f))};
}

}  // namespace scoutsim
