#include "nar/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <vector>

#ifdef NAR_HAVE_PNG
#include <png.h>
#endif

namespace nar {

namespace {

constexpr char kMagic[4] = {'N', 'A', 'R', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::ofstream& f, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& f, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t get_u16(std::ifstream& f) {
  unsigned char b[2];
  f.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::ifstream& f) {
  unsigned char b[8];
  f.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void put_field(std::ofstream& f, const std::string& name, const ScalarField2D& field) {
  put_u16(f, static_cast<std::uint16_t>(name.size()));
  f.write(name.data(), static_cast<std::streamsize>(name.size()));
  for (int k = 0; k < field.size(); ++k) put_f64(f, field[k]);
}

[[noreturn]] void bad_snapshot(const std::string& path, const std::string& why) {
  throw std::runtime_error("snapshot " + path + ": " + why);
}

}  // namespace

void write_snapshot(const std::string& path, const NuclearState& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("snapshot " + path + ": cannot open for writing");
  f.write(kMagic, 4);
  put_u32(f, kVersion);
  put_f64(f, s.t);
  const Grid2D& g = s.phi0.grid();
  put_u32(f, static_cast<std::uint32_t>(g.nx));
  put_u32(f, static_cast<std::uint32_t>(g.ny));
  put_u32(f, static_cast<std::uint32_t>(s.phi.size() + 2));
  put_field(f, "phi0", s.phi0);
  for (size_t m = 0; m < s.phi.size(); ++m)
    put_field(f, "phi" + std::to_string(m + 1), s.phi[m]);
  put_field(f, "psi", s.psi);
  if (!f) throw std::runtime_error("snapshot " + path + ": write failed");
}

NuclearState read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) bad_snapshot(path, "cannot open");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) bad_snapshot(path, "bad magic");
  const std::uint32_t version = get_u32(f);
  if (version != kVersion)
    bad_snapshot(path, "unsupported version " + std::to_string(version));
  const double t = get_f64(f);
  const std::uint32_t nx = get_u32(f), ny = get_u32(f), nfields = get_u32(f);
  if (!f) bad_snapshot(path, "truncated header");
  if (nfields < 2) bad_snapshot(path, "needs at least phi0 and psi");

  auto g = Grid2D::make(static_cast<int>(nx), static_cast<int>(ny));
  NuclearState s;
  s.t = t;
  auto read_field = [&](const std::string& expect) {
    const std::uint16_t len = get_u16(f);
    std::string name(len, '\0');
    f.read(name.data(), len);
    if (!f) bad_snapshot(path, "truncated field name");
    if (name != expect) bad_snapshot(path, "expected field " + expect + ", found " + name);
    ScalarField2D field(g);
    for (int k = 0; k < field.size(); ++k) field[k] = get_f64(f);
    if (!f) bad_snapshot(path, "truncated field " + expect);
    return field;
  };
  s.phi0 = read_field("phi0");
  for (std::uint32_t m = 0; m + 2 < nfields; ++m)
    s.phi.push_back(read_field("phi" + std::to_string(m + 1)));
  s.psi = read_field("psi");
  f.peek();
  if (!f.eof()) bad_snapshot(path, "trailing bytes after the last field");
  return s;
}

CsvWriter::CsvWriter(const std::string& path, int n_chromosomes)
    : out_(path), n_(n_chromosomes) {
  if (!out_) throw std::runtime_error("diagnostics " + path + ": cannot open for writing");
  out_ << "t,E_total,E0,E1,E2,energy_decrement,nucleus_volume,packing,mean_V,mean_v,R,"
          "residual_inf,newton_iters";
  for (int m = 0; m < n_; ++m) out_ << ",V" << m;
  for (int m = 0; m < n_; ++m) out_ << ",v" << m;
  for (int m = 0; m < n_; ++m) out_ << ",rho" << m;
  for (int m = 0; m < n_; ++m) out_ << ",lambda" << m;
  for (int m = 0; m < n_; ++m) out_ << ",eta" << m;
  out_ << "\n";
}

void CsvWriter::write(const DiagnosticsRow& row) {
  if (static_cast<int>(row.V.size()) != n_)
    throw std::invalid_argument("diagnostics row has the wrong chromosome count");
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out_ << buf;
  };
  const double drop = first_ ? 0.0 : prev_energy_ - row.energy.total;
  put(row.t);
  out_ << ',';
  put(row.energy.total);
  out_ << ',';
  put(row.energy.e0);
  out_ << ',';
  put(row.energy.e1);
  out_ << ',';
  put(row.energy.e2);
  out_ << ',';
  put(drop);
  out_ << ',';
  put(row.nucleus_vol);
  out_ << ',';
  put(row.packing);
  out_ << ',';
  put(row.mean_V);
  out_ << ',';
  put(row.mean_v);
  out_ << ',';
  put(row.R);
  out_ << ',';
  put(row.residual_inf);
  out_ << ',' << row.newton_iters;
  auto block = [&](const std::vector<double>& vals) {
    for (double v : vals) {
      out_ << ',';
      put(v);
    }
  };
  block(row.V);
  block(row.v);
  block(row.rho);
  block(row.lambda);
  block(row.eta);
  out_ << "\n";
  out_.flush();
  prev_energy_ = row.energy.total;
  first_ = false;
}

namespace {

struct Rgb {
  unsigned char r, g, b;
};

std::vector<Rgb> compose(const NuclearState& s) {
  const Grid2D& g = s.phi0.grid();
  std::vector<Rgb> img(static_cast<size_t>(g.nx) * g.ny);
  auto mix = [](double t, unsigned char from, unsigned char to) {
    return static_cast<unsigned char>(std::lround(from + t * (to - from)));
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      // image rows run top down, the grid bottom up
      Rgb& px = img[static_cast<size_t>(g.ny - 1 - j) * g.nx + i];
      const double inside = std::clamp(1.0 - s.phi0.at(i, j), 0.0, 1.0);
      px = {mix(inside, 16, 235), mix(inside, 16, 235), mix(inside, 16, 235)};
      double terr = 0.0;
      for (const auto& phi : s.phi)
        terr = std::max(terr, std::clamp(h_poly(phi.at(i, j)), 0.0, 1.0));
      px = {mix(terr, px.r, 30), mix(terr, px.g, 150), mix(terr, px.b, 60)};
      const double het = std::clamp(h_poly(s.psi.at(i, j)), 0.0, 1.0);
      px = {mix(het, px.r, 215), mix(het, px.g, 40), mix(het, px.b, 35)};
    }
  return img;
}

void write_ppm(const std::string& path, const std::vector<Rgb>& img, int nx, int ny) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("render " + path + ": cannot open for writing");
  f << "P6\n" << nx << " " << ny << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data()),
          static_cast<std::streamsize>(img.size() * 3));
  if (!f) throw std::runtime_error("render " + path + ": write failed");
}

#ifdef NAR_HAVE_PNG
void write_png(const std::string& path, const std::vector<Rgb>& img, int nx, int ny) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("render " + path + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw std::runtime_error("render " + path + ": png encoding failed");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, nx, ny, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int j = 0; j < ny; ++j)
    png_write_row(png,
                  const_cast<png_bytep>(reinterpret_cast<const unsigned char*>(
                      img.data() + static_cast<size_t>(j) * nx)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}
#endif

}  // namespace

bool png_supported() {
#ifdef NAR_HAVE_PNG
  return true;
#else
  return false;
#endif
}

void render_composite(const std::string& path, const NuclearState& s) {
  const Grid2D& g = s.phi0.grid();
  const auto img = compose(s);
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".ppm") {
    write_ppm(path, img, g.nx, g.ny);
  } else if (ext == ".png") {
#ifdef NAR_HAVE_PNG
    write_png(path, img, g.nx, g.ny);
#else
    throw std::runtime_error("render " + path + ": built without PNG support");
#endif
  } else {
    throw std::runtime_error("render " + path + ": unsupported extension, use .ppm or .png");
  }
}

}  // namespace nar
