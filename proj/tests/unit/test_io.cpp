#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "field_helpers.hpp"
#include "nar/geometry.hpp"
#include "nar/io.hpp"

using namespace nar;
using nar::test::random_smooth_field;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

NuclearState sample_state(int nx, int n_chrom) {
  auto g = Grid2D::make(nx, nx);
  NuclearState s;
  s.t = 0.625;
  s.phi0 = random_smooth_field(g, 11);
  for (int m = 0; m < n_chrom; ++m) s.phi.push_back(random_smooth_field(g, 20 + m));
  s.psi = random_smooth_field(g, 40);
  return s;
}

std::uint32_t u32_at(const std::string& b, size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= std::uint32_t(static_cast<unsigned char>(b[off + i])) << (8 * i);
  return v;
}

}  // namespace

TEST_CASE("snapshot round trip is bitwise exact") {
  const NuclearState s = sample_state(16, 3);
  const std::string path = "snap_rt.nars";
  write_snapshot(path, s);
  const NuclearState r = read_snapshot(path);

  CHECK(r.t == s.t);
  CHECK(r.phi0.grid().nx == 16);
  REQUIRE(r.phi.size() == 3);
  CHECK(test::linf_diff(r.phi0, s.phi0) == 0.0);
  for (int m = 0; m < 3; ++m) CHECK(test::linf_diff(r.phi[m], s.phi[m]) == 0.0);
  CHECK(test::linf_diff(r.psi, s.psi) == 0.0);

  // deterministic bytes: writing the reread state reproduces the file
  write_snapshot("snap_rt2.nars", r);
  CHECK(slurp("snap_rt.nars") == slurp("snap_rt2.nars"));
}

TEST_CASE("snapshot header layout") {
  const NuclearState s = sample_state(16, 2);
  write_snapshot("snap_hdr.nars", s);
  const std::string b = slurp("snap_hdr.nars");

  REQUIRE(b.size() > 32);
  CHECK(b.substr(0, 4) == "NARS");
  CHECK(u32_at(b, 4) == 1);  // version
  double t;
  std::memcpy(&t, b.data() + 8, 8);
  CHECK(t == 0.625);
  CHECK(u32_at(b, 16) == 16);  // nx
  CHECK(u32_at(b, 20) == 16);  // ny
  CHECK(u32_at(b, 24) == 4);   // phi0, phi1, phi2, psi
  // first field record: name length then the name
  CHECK(static_cast<unsigned char>(b[28]) == 4);
  CHECK(static_cast<unsigned char>(b[29]) == 0);
  CHECK(b.substr(30, 4) == "phi0");
  // total: header + 4 fields of (2 + name + 16*16*8) bytes
  const size_t expect = 28 + (2 + 4 + 2048) + 2 * (2 + 4 + 2048) + (2 + 3 + 2048);
  CHECK(b.size() == expect);
}

TEST_CASE("snapshot rejects damage") {
  const NuclearState s = sample_state(16, 1);
  write_snapshot("snap_ok.nars", s);
  const std::string good = slurp("snap_ok.nars");

  std::string bad = good;
  bad[0] = 'X';
  spit("snap_bad.nars", bad);
  CHECK_THROWS_WITH_AS(read_snapshot("snap_bad.nars"), doctest::Contains("bad magic"),
                       std::runtime_error);

  bad = good;
  bad[4] = 9;  // version
  spit("snap_bad.nars", bad);
  CHECK_THROWS_WITH_AS(read_snapshot("snap_bad.nars"),
                       doctest::Contains("unsupported version"), std::runtime_error);

  bad = good;
  bad[30] = 'q';  // first field name
  spit("snap_bad.nars", bad);
  CHECK_THROWS_WITH_AS(read_snapshot("snap_bad.nars"), doctest::Contains("phi0"),
                       std::runtime_error);

  spit("snap_bad.nars", good.substr(0, good.size() / 2));
  CHECK_THROWS_WITH_AS(read_snapshot("snap_bad.nars"), doctest::Contains("truncated"),
                       std::runtime_error);

  spit("snap_bad.nars", good + "zz");
  CHECK_THROWS_WITH_AS(read_snapshot("snap_bad.nars"), doctest::Contains("trailing"),
                       std::runtime_error);

  CHECK_THROWS_AS(read_snapshot("does_not_exist.nars"), std::runtime_error);
}

TEST_CASE("csv rows carry full precision and the energy decrement") {
  DiagnosticsRow row;
  row.t = 0.0;
  row.energy.total = 3.141592653589793;
  row.energy.e0 = 1.0 / 3.0;
  row.energy.e1 = 2.0;
  row.energy.e2 = 0.25;
  row.V = {1.5, 2.5};
  row.v = {0.5, 0.75};
  row.rho = {1.0 / 3.0, 0.3};
  row.lambda = {0.0, -1.25};
  row.eta = {0.125, 0.0};
  row.mean_V = 2.0;
  row.mean_v = 0.625;
  row.R = 1.0;
  row.residual_inf = 1e-13;
  row.newton_iters = 5;
  row.nucleus_vol = 18.0;
  row.packing = -14.0;

  {
    CsvWriter w("diag.csv", 2);
    w.write(row);
    DiagnosticsRow next = row;
    next.t = 0.1;
    next.energy.total = 3.0;
    w.write(next);

    DiagnosticsRow wrong = row;
    wrong.V = {1.0};
    wrong.v = {1.0};
    wrong.rho = {1.0};
    wrong.lambda = {0.0};
    wrong.eta = {0.0};
    CHECK_THROWS_AS(w.write(wrong), std::invalid_argument);
  }

  std::ifstream f("diag.csv");
  std::string header, line1, line2;
  std::getline(f, header);
  std::getline(f, line1);
  std::getline(f, line2);
  CHECK(header ==
        "t,E_total,E0,E1,E2,energy_decrement,nucleus_volume,packing,mean_V,mean_v,R,"
        "residual_inf,newton_iters,V0,V1,v0,v1,rho0,rho1,lambda0,lambda1,eta0,eta1");

  auto fields = [](const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(item);
    return out;
  };
  const auto a = fields(line1), b = fields(line2);
  REQUIRE(a.size() == 23);
  REQUIRE(b.size() == 23);
  // full round trip through text
  CHECK(std::strtod(a[1].c_str(), nullptr) == 3.141592653589793);
  CHECK(std::strtod(a[2].c_str(), nullptr) == 1.0 / 3.0);
  CHECK(a[5] == "0");  // no decrement on the first row
  CHECK(std::strtod(b[5].c_str(), nullptr) == 3.141592653589793 - 3.0);
  CHECK(a[12] == "5");
  CHECK(std::strtod(a[20].c_str(), nullptr) == -1.25);
}

TEST_CASE("composite render") {
  auto g = Grid2D::make(16, 16);
  NuclearState s;
  s.t = 0.0;
  s.phi0 = ScalarField2D(g);
  s.phi0.fill(1.0);  // everywhere outside the nucleus
  s.phi.emplace_back(g);
  s.psi = ScalarField2D(g);
  // carve a nucleus pixel, a territory pixel and a hetero pixel
  s.phi0.at(3, 2) = 0.0;
  s.phi0.at(5, 2) = 0.0;
  s.phi[0].at(5, 2) = 1.0;
  s.phi0.at(7, 2) = 0.0;
  s.psi.at(7, 2) = 1.0;

  render_composite("view.ppm", s);
  const std::string b = slurp("view.ppm");
  const std::string hdr = "P6\n16 16\n255\n";
  REQUIRE(b.size() == hdr.size() + 3 * 16 * 16);
  CHECK(b.substr(0, hdr.size()) == hdr);
  auto px = [&](int i, int j) {  // grid coordinates, row flip applied
    const size_t off = hdr.size() + 3 * (static_cast<size_t>(15 - j) * 16 + i);
    return std::array<unsigned char, 3>{static_cast<unsigned char>(b[off]),
                                        static_cast<unsigned char>(b[off + 1]),
                                        static_cast<unsigned char>(b[off + 2])};
  };
  CHECK(px(0, 0) == std::array<unsigned char, 3>{16, 16, 16});     // background
  CHECK(px(3, 2) == std::array<unsigned char, 3>{235, 235, 235});  // nucleus
  CHECK(px(5, 2) == std::array<unsigned char, 3>{30, 150, 60});    // territory
  CHECK(px(7, 2) == std::array<unsigned char, 3>{215, 40, 35});    // heterochromatin

  render_composite("view2.ppm", s);
  CHECK(slurp("view2.ppm") == b);

  CHECK_THROWS_WITH_AS(render_composite("view.gif", s), doctest::Contains("extension"),
                       std::runtime_error);
  CHECK_THROWS_AS(render_composite("/nonexistent_dir/x.ppm", s), std::runtime_error);

  if (png_supported()) {
    render_composite("view.png", s);
    const std::string p = slurp("view.png");
    REQUIRE(p.size() > 8);
    CHECK(p.substr(1, 3) == "PNG");
  }
}
