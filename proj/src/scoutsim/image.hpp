#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scoutsim/common.hpp"

namespace scoutsim {

struct RgbdFrame;

/// Simple RGB8 raster with just enough drawing for map renders and report
/// plots.
class Image {
 public:
  Image(int w, int h, std::array<uint8_t, 3> fill = {255, 255, 255});

  int width() const { return w_; }
  int height() const { return h_; }
  const std::vector<uint8_t>& data() const { return px_; }

  void set(int x, int y, std::array<uint8_t, 3> c);
  void fill_rect(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c);
  void line(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c);
  /// 5x7 bitmap glyphs for digits, '-', '.', and a few letters; unknown
  /// characters advance the cursor silently.
  void text(int x, int y, const std::string& s, std::array<uint8_t, 3> c);

  void save_png(const std::string& path) const;

 private:
  int w_, h_;
  std::vector<uint8_t> px_;
};

void write_png(const std::string& path, int w, int h, const uint8_t* rgb);

/// Frame exports: frame_{step:05}.png and .f32 (little-endian float depth).
void save_frame_png(const RgbdFrame& frame, const std::string& path);
void save_depth_f32(const RgbdFrame& frame, const std::string& path);

/// Distinct series color for plot/report use, stable per index.
std::array<uint8_t, 3> series_color(size_t index);

}  // namespace scoutsim
