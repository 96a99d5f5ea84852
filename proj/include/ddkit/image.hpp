#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ddkit {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

// 8-bit RGB, row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}

  std::uint8_t* px(int x, int y) { return rgb.data() + (std::size_t(y) * width + x) * 3; }
  const std::uint8_t* px(int x, int y) const { return rgb.data() + (std::size_t(y) * width + x) * 3; }
};

Image load_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& image);
// Atomic: temp file + rename.
void write_png(const Image& image, const std::filesystem::path& path);

// Samples `region` of `src` onto a w x h grid with bilinear interpolation
// (pixel-centre aligned, edge clamped).
Image resize_bilinear(const Image& src, Rect region, int w, int h);

// Copies `tile` into `dst` with its top-left corner at (x, y).
void blit(Image& dst, const Image& tile, int x, int y);

// Luma (0.299 R + 0.587 G + 0.114 B) of a region.
std::vector<double> grayscale(const Image& src, Rect region);

// Population variance of the 4-neighbour 3x3 Laplacian over the interior
// pixels of the region. Zero on constant regions.
double laplacian_variance(const Image& src, Rect region);

}  // namespace ddkit
