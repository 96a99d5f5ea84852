#include "ddkit/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "ddkit/error.hpp"
#include "ddkit/io.hpp"

namespace ddkit {

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::missing_file, "missing image: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty() || m.type() != CV_8UC3)
    throw Error(ErrorKind::io, "unreadable image: " + path.string());
  Image img(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      auto* p = img.px(x, y);
      p[0] = row[3 * x + 2];
      p[1] = row[3 * x + 1];
      p[2] = row[3 * x + 0];
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  cv::Mat m(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width; ++x) {
      const auto* p = image.px(x, y);
      row[3 * x + 0] = p[2];
      row[3 * x + 1] = p[1];
      row[3 * x + 2] = p[0];
    }
  }
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", m, buf, {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw Error(ErrorKind::io, "PNG encoding failed");
  return buf;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  io::write_atomic(path, encode_png(image));
}

Image resize_bilinear(const Image& src, Rect r, int w, int h) {
  if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > src.width || r.y + r.h > src.height)
    throw Error(ErrorKind::validation, "resize region outside the source image");
  if (w <= 0 || h <= 0) throw Error(ErrorKind::validation, "resize target must be positive");
  Image out(w, h);
  const double sx = double(r.w) / w, sy = double(r.h) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(r.h - 1));
    const int y0 = int(fy), y1 = std::min(y0 + 1, r.h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(r.w - 1));
      const int x0 = int(fx), x1 = std::min(x0 + 1, r.w - 1);
      const double tx = fx - x0;
      const auto* p00 = src.px(r.x + x0, r.y + y0);
      const auto* p01 = src.px(r.x + x1, r.y + y0);
      const auto* p10 = src.px(r.x + x0, r.y + y1);
      const auto* p11 = src.px(r.x + x1, r.y + y1);
      auto* o = out.px(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + tx * (p01[c] - p00[c]);
        const double bot = p10[c] + tx * (p11[c] - p10[c]);
        o[c] = static_cast<std::uint8_t>(std::lround(std::clamp(top + ty * (bot - top), 0.0, 255.0)));
      }
    }
  }
  return out;
}

void blit(Image& dst, const Image& tile, int x, int y) {
  if (x < 0 || y < 0 || x + tile.width > dst.width || y + tile.height > dst.height)
    throw Error(ErrorKind::validation, "tile does not fit the canvas");
  for (int row = 0; row < tile.height; ++row)
    std::copy_n(tile.px(0, row), std::size_t(tile.width) * 3, dst.px(x, y + row));
}

std::vector<double> grayscale(const Image& src, Rect r) {
  std::vector<double> g(std::size_t(r.w) * r.h);
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x) {
      const auto* p = src.px(r.x + x, r.y + y);
      g[std::size_t(y) * r.w + x] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  return g;
}

double laplacian_variance(const Image& src, Rect r) {
  if (r.w < 3 || r.h < 3) throw Error(ErrorKind::validation, "Laplacian needs at least 3x3 pixels");
  if (r.x < 0 || r.y < 0 || r.x + r.w > src.width || r.y + r.h > src.height)
    throw Error(ErrorKind::validation, "region outside the image");
  // Integer luma (x1000) keeps the sums exact: constant regions give exactly
  // zero and shifted periodic patterns give identical values.
  std::vector<std::int64_t> g(std::size_t(r.w) * r.h);
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x) {
      const auto* p = src.px(r.x + x, r.y + y);
      g[std::size_t(y) * r.w + x] = 299 * p[0] + 587 * p[1] + 114 * p[2];
    }
  auto at = [&](int x, int y) { return g[std::size_t(y) * r.w + x]; };
  __int128 sum = 0, sum2 = 0;
  std::int64_t count = 0;
  for (int y = 1; y + 1 < r.h; ++y)
    for (int x = 1; x + 1 < r.w; ++x) {
      const std::int64_t v = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4 * at(x, y);
      sum += v;
      sum2 += static_cast<__int128>(v) * v;
      ++count;
    }
  const __int128 numer = sum2 * count - sum * sum;  // n^2 * variance, in luma x1000 units
  return static_cast<double>(numer) / (double(count) * double(count) * 1e6);
}

}  // namespace ddkit
