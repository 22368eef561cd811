#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbss/error.hpp"
#include "cbss/estimators.hpp"
#include "cbss/genproc.hpp"
#include "cbss/linalg.hpp"
#include "cbss/metrics.hpp"
#include "cbss/unmixer.hpp"

namespace cbss {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit RGB raster, stored row by row (PPM order).
struct RgbImage {
  std::size_t width = 0, height = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h, Rgb{0, 0, 0}) {}

  Rgb& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Complex values in column-major order: index = x * height + y, so lag 1
// steps down a column and lag `height` steps across to the next column.
struct ComplexImage {
  std::size_t width = 0, height = 0;
  std::vector<Complex> values;

  Complex& at(std::size_t x, std::size_t y) { return values[x * height + y]; }
  const Complex& at(std::size_t x, std::size_t y) const { return values[x * height + y]; }
};

// ---------------------------------------------------------------------------
// PPM P6, maxval 255.

namespace detail {

inline void skip_ppm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_ppm_number(std::istream& in) {
  skip_ppm_space(in);
  std::size_t v = 0;
  if (!(in >> v)) throw ParseError("ppm: malformed header");
  return v;
}

} // namespace detail

inline RgbImage read_ppm(std::istream& in) {
  char magic[2] = {};
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '6') throw ParseError("ppm: not a binary P6 file");
  const std::size_t w = detail::read_ppm_number(in);
  const std::size_t h = detail::read_ppm_number(in);
  const std::size_t maxval = detail::read_ppm_number(in);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) throw ParseError("ppm: unsupported dimensions");
  if (maxval != 255) throw ParseError("ppm: only maxval 255 is supported");
  if (!std::isspace(in.get())) throw ParseError("ppm: missing separator after header");
  RgbImage img(w, h);
  std::vector<char> raw(w * h * 3);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) throw ParseError("ppm: truncated pixel data");
  for (std::size_t i = 0; i < w * h; ++i)
    for (int c = 0; c < 3; ++c) img.pixels[i][c] = static_cast<std::uint8_t>(raw[3 * i + c]);
  return img;
}

inline RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("ppm: cannot open " + path);
  return read_ppm(in);
}

inline void write_ppm(std::ostream& out, const RgbImage& img) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const auto& p : img.pixels) out.write(reinterpret_cast<const char*>(p.data()), 3);
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("ppm: cannot write " + path);
  write_ppm(out, img);
}

// ---------------------------------------------------------------------------
// Colour cube surface, sphere and plane.

using Vec3 = std::array<double, 3>;

// Largest |p_i|, ties to the earlier channel (R > G > B).
inline std::size_t dominant_axis(const Vec3& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (std::abs(p[i]) > std::abs(p[best])) best = i;
  return best;
}

// Nearest cube-surface point for channel values in [0,1]. p = 0 goes to the +R face.
inline Vec3 nearest_surface(const Vec3& c) {
  Vec3 p{2 * c[0] - 1, 2 * c[1] - 1, 2 * c[2] - 1};
  const std::size_t i = dominant_axis(p);
  p[i] = p[i] >= 0.0 ? 1.0 : -1.0;
  return {(p[0] + 1) / 2, (p[1] + 1) / 2, (p[2] + 1) / 2};
}

// Integer form of nearest_surface on 8-bit channels: |2v - 255| ranks the axes.
inline Rgb color_correct(Rgb c) {
  std::size_t best = 0;
  int best_dev = -1;
  for (std::size_t i = 0; i < 3; ++i) {
    const int dev = std::abs(2 * int{c[i]} - 255);
    if (dev > best_dev) {
      best_dev = dev;
      best = i;
    }
  }
  c[best] = c[best] >= 128 ? 255 : 0;
  return c;
}

inline RgbImage color_correct(const RgbImage& img) {
  RgbImage out = img;
  for (auto& p : out.pixels) p = color_correct(p);
  return out;
}

inline bool on_surface(Rgb c) {
  return std::any_of(c.begin(), c.end(), [](std::uint8_t v) { return v == 0 || v == 255; });
}

inline Vec3 centered(Rgb c) {
  return {(2.0 * c[0] - 255.0) / 255.0, (2.0 * c[1] - 255.0) / 255.0, (2.0 * c[2] - 255.0) / 255.0};
}

inline double max_abs3(const Vec3& v) { return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])}); }

inline Vec3 cube_to_sphere(const Vec3& p) {
  if (std::abs(max_abs3(p) - 1.0) > 1e-9) throw std::invalid_argument("cube_to_sphere: point is not on the cube surface");
  const double n = std::hypot(p[0], p[1], p[2]);
  return {p[0] / n, p[1] / n, p[2] / n};
}

inline Vec3 sphere_to_cube(const Vec3& s) {
  const double m = max_abs3(s);
  if (!(m > 0.0)) throw std::invalid_argument("sphere_to_cube: zero vector");
  return {s[0] / m, s[1] / m, s[2] / m};
}

inline constexpr double kNorthPoleGuard = 1e-12;

inline Complex stereographic(const Vec3& s) {
  if (!(s[2] < 1.0 - kNorthPoleGuard)) throw std::domain_error("stereographic: north pole has no image");
  // near the pole 1 - s2 cancels; (x^2 + y^2) / (1 + s2) does not
  const double den = s[2] > 0.0 ? (s[0] * s[0] + s[1] * s[1]) / (1.0 + s[2]) : 1.0 - s[2];
  return Complex{s[0], s[1]} / den;
}

inline Vec3 inverse_stereographic(Complex z) {
  const double r2 = std::norm(z);
  const double den = r2 + 1.0;
  return {2.0 * z.real() / den, 2.0 * z.imag() / den, (r2 - 1.0) / den};
}

inline Rgb cube_to_rgb(const Vec3& p) {
  Rgb out{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = std::round((p[i] + 1.0) * 127.5);
    out[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

inline Complex rgb_to_complex(Rgb c) { return stereographic(cube_to_sphere(centered(c))); }

inline Rgb complex_to_rgb(Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw NumericalError("complex_to_rgb: non-finite value");
  return cube_to_rgb(sphere_to_cube(inverse_stereographic(z)));
}

struct PlaneImage {
  ComplexImage image;
  std::size_t perturbed = 0;  // pixels nudged off the north pole
};

// Colour-corrected image to the plane. A pixel on the north pole is moved one
// quantization step toward the south pole first.
inline PlaneImage to_plane(const RgbImage& corrected) {
  PlaneImage out;
  out.image.width = corrected.width;
  out.image.height = corrected.height;
  out.image.values.resize(corrected.pixels.size());
  for (std::size_t y = 0; y < corrected.height; ++y)
    for (std::size_t x = 0; x < corrected.width; ++x) {
      Rgb c = corrected.at(x, y);
      if (cube_to_sphere(centered(c))[2] >= 1.0 - kNorthPoleGuard) {
        c[2] = static_cast<std::uint8_t>(c[2] - 1);
        ++out.perturbed;
      }
      out.image.at(x, y) = rgb_to_complex(c);
    }
  return out;
}

inline RgbImage from_plane(const ComplexImage& img) {
  RgbImage out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) out.at(x, y) = complex_to_rgb(img.at(x, y));
  return out;
}

// Right-multiplying the unmixing estimate by exp(i theta) recolours the image.
inline ComplexImage phase_rotate(const ComplexImage& img, double theta) {
  ComplexImage out = img;
  const Complex u = std::polar(1.0, theta);
  for (auto& v : out.values) v *= u;
  return out;
}

// (R, G, B) -> (255 - G, R, B) is a quarter turn about the blue axis; on
// the plane it multiplies by i.
inline Rgb quarter_turn(Rgb c) { return {static_cast<std::uint8_t>(255 - c[1]), c[0], c[2]}; }

// ---------------------------------------------------------------------------
// Separation of three images.

inline CMat random_image_mixing(std::uint64_t seed, std::size_t d = 3) {
  Rng rng(derive_seed(seed, 0xA11CE));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  CMat a = CMat::identity(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) += u(rng);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) += Complex{0.0, u(rng)};
  return a;
}

struct SeparationOptions {
  std::size_t tau = 1;
  std::uint64_t seed = 0;
  bool identity_mixing = false;
};

struct SeparationResult {
  std::vector<RgbImage> corrected, mixed, unmixed;
  std::vector<ComplexImage> unmixed_plane;
  CMat mixing;
  UnmixingResult estimate;
  double md = 0.0;
  std::size_t perturbed_pixels = 0;
};

inline SeparationResult separate_images(const std::vector<RgbImage>& images, const SeparationOptions& opt) {
  if (images.size() < 2) throw std::invalid_argument("separate_images: need at least two images");
  const std::size_t w = images[0].width, h = images[0].height;
  for (const auto& im : images)
    if (im.width != w || im.height != h) throw DimensionError("separate_images: images differ in size");
  const std::size_t d = images.size();
  const std::size_t n = w * h;

  SeparationResult res;
  res.mixing = opt.identity_mixing ? CMat::identity(d) : random_image_mixing(opt.seed, d);
  TimeSeries z(n, d);
  for (std::size_t k = 0; k < d; ++k) {
    res.corrected.push_back(color_correct(images[k]));
    const PlaneImage plane = to_plane(res.corrected.back());
    res.perturbed_pixels += plane.perturbed;
    for (std::size_t t = 0; t < n; ++t) z(t, k) = plane.image.values[t];
  }
  const std::vector<Complex> no_shift(d);
  const TimeSeries x = affine_transform(z, res.mixing, no_shift);
  res.estimate = unmix(x, opt.tau);
  const TimeSeries y = apply_unmixing(res.estimate, x);
  res.md = md_index(res.estimate.gamma, res.mixing);

  auto to_image = [&](const TimeSeries& s, std::size_t k) {
    ComplexImage ci{w, h, std::vector<Complex>(n)};
    for (std::size_t t = 0; t < n; ++t) ci.values[t] = s(t, k);
    return ci;
  };
  for (std::size_t k = 0; k < d; ++k) {
    res.mixed.push_back(from_plane(to_image(x, k)));
    res.unmixed_plane.push_back(to_image(y, k));
    res.unmixed.push_back(from_plane(res.unmixed_plane.back()));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic test images.

// Three images with exactly zero sample means and exactly zero sample
// cross-covariances at lags 0 and `height` (vectorized column-major). Image k
// cycles a base colour through quarter turns with phase (e_k x + f_k y) mod 4.
// Width and height must be multiples of 4.
inline std::vector<RgbImage> decorrelated_test_images(std::size_t width, std::size_t height) {
  if (width % 4 || height % 4 || width == 0 || height == 0)
    throw std::invalid_argument("decorrelated_test_images: sizes must be positive multiples of 4");
  const std::array<Rgb, 3> base{Rgb{255, 60, 170}, Rgb{20, 255, 90}, Rgb{200, 110, 0}};
  const std::array<std::size_t, 3> e{0, 1, 2}, f{1, 2, 3};
  std::vector<RgbImage> out;
  for (std::size_t k = 0; k < 3; ++k) {
    RgbImage img(width, height);
    std::array<Rgb, 4> turns{base[k]};
    for (std::size_t q = 1; q < 4; ++q) turns[q] = quarter_turn(turns[q - 1]);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) img.at(x, y) = turns[(e[k] * x + f[k] * y) % 4];
    out.push_back(img);
  }
  return out;
}

// Three structured images with distinct short-range dependence: a noisy
// gradient (positive neighbour correlation), a checkerboard (negative along
// rows and columns, positive diagonally) and 2x2 box-filtered speckle.
// Suggested size 96 x 64.
inline std::vector<RgbImage> structured_test_images(std::size_t width, std::size_t height, std::uint64_t seed) {
  if (width < 2 || height < 2) throw std::invalid_argument("structured_test_images: need at least 2 x 2 pixels");
  std::vector<RgbImage> out(3, RgbImage(width, height));
  Rng rng(derive_seed(seed, 0x1A6E));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t stride = height + 1;
  std::vector<double> box_a((width + 1) * stride), box_b((width + 1) * stride), grain(width * height);
  for (auto& v : box_a) v = unit(rng);
  for (auto& v : box_b) v = unit(rng);
  for (auto& v : grain) v = unit(rng);
  auto u8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
  auto box = [&](const std::vector<double>& n, std::size_t x, std::size_t y) {
    return (n[x * stride + y] + n[(x + 1) * stride + y] + n[x * stride + y + 1] + n[(x + 1) * stride + y + 1]) / 4.0;
  };
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x) / static_cast<double>(width - 1);
      const double fy = static_cast<double>(y) / static_cast<double>(height - 1);
      out[0].at(x, y) = {255, u8(40 + 170 * fy + 160 * (grain[x * height + y] - 0.5)),
                         u8(128 + 100 * std::sin(2 * std::numbers::pi * fx))};
      out[1].at(x, y) = (x + y) % 2 ? Rgb{200, 60, 0} : Rgb{30, 180, 0};
      out[2].at(x, y) = {u8(510 * (box(box_a, x, y) - 0.5) + 128), 255, u8(510 * (box(box_b, x, y) - 0.5) + 128)};
    }
  return out;
}

} // namespace cbss
