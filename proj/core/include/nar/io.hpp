#pragma once

#include <fstream>
#include <string>

#include "nar/diagnostics.hpp"
#include "nar/model.hpp"

namespace nar {

// Snapshot container: "NARS" magic, u32 version, f64 time, u32 nx ny nfields,
// then per field a u16 name length, the name and nx*ny doubles in row-major
// order with y outer.  All integers and doubles are little endian.  Fields are
// written as phi0, phi1..phiN, psi.
void write_snapshot(const std::string& path, const NuclearState& s);
NuclearState read_snapshot(const std::string& path);

// Streams diagnostics rows with 17 significant digits.  The energy decrement
// column is the drop from the previous row, zero on the first.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, int n_chromosomes);
  void write(const DiagnosticsRow& row);

 private:
  std::ofstream out_;
  int n_;
  bool first_ = true;
  double prev_energy_ = 0.0;
};

// Composite view: dark background, nucleus interior light, territories green,
// heterochromatin red.  The format follows the extension, .ppm or .png.
void render_composite(const std::string& path, const NuclearState& s);

// true when PNG output was compiled in
bool png_supported();

}  // namespace nar
