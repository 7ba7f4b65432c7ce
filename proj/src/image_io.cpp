#include "mgi/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mgi {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path,
                       const std::string& why) {
  throw std::runtime_error(path.string() + ": " + why);
}

// Next whitespace-delimited token of a PGM header, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

long parse_header_number(std::istream& in, const std::filesystem::path& path,
                         const char* what) {
  const std::string token = next_token(in);
  try {
    size_t used = 0;
    const long v = std::stol(token, &used);
    if (used != token.size() || v < 0) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(path, std::string("malformed PGM header (") + what + ")");
  }
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  const std::string magic = next_token(in);
  if (magic != "P2" && magic != "P5") fail(path, "not a P2/P5 PGM file");
  const long cols = parse_header_number(in, path, "width");
  const long rows = parse_header_number(in, path, "height");
  const long maxval = parse_header_number(in, path, "maxval");
  if (cols <= 0 || rows <= 0) fail(path, "empty image");
  if (maxval <= 0 || maxval > 65535) fail(path, "unsupported maxval");

  GrayImage img{{static_cast<int>(rows), static_cast<int>(cols)},
                Eigen::VectorXd(rows * cols)};
  if (magic == "P2") {
    for (long p = 0; p < rows * cols; ++p)
      img.values[p] =
          static_cast<double>(parse_header_number(in, path, "pixel")) / maxval;
  } else {
    // One whitespace byte separates the header from the raster.
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<size_t>(rows * cols * bytes));
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      fail(path, "truncated raster");
    for (long p = 0; p < rows * cols; ++p) {
      const unsigned v =
          bytes == 1 ? raw[p]
                     : (static_cast<unsigned>(raw[2 * p]) << 8) | raw[2 * p + 1];
      img.values[p] = static_cast<double>(v) / maxval;
    }
  }
  return img;
}

GrayImage read_csv_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  std::vector<double> values;
  int cols = -1, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    int this_cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        values.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(cell[used])) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(path, "malformed CSV cell '" + cell + "'");
      }
      ++this_cols;
    }
    if (cols < 0) cols = this_cols;
    if (this_cols != cols) fail(path, "ragged CSV rows");
    ++rows;
  }
  if (rows == 0 || cols <= 0) fail(path, "empty CSV grid");
  GrayImage img{{rows, cols}, Eigen::VectorXd(rows * cols)};
  for (size_t p = 0; p < values.size(); ++p) img.values[p] = values[p];
  return img;
}

ObjectImage load_object(const std::filesystem::path& path, GridShape expected) {
  const std::string ext = path.extension().string();
  GrayImage img;
  if (ext == ".pgm") {
    img = read_pgm(path);
  } else if (ext == ".csv") {
    img = read_csv_grid(path);
  } else {
    fail(path, "unsupported object format (expected .pgm or .csv)");
  }
  if (expected.pixel_count() > 0 && !(img.grid == expected)) {
    fail(path, "object is " + std::to_string(img.grid.rows) + "x" +
                   std::to_string(img.grid.cols) + " but the configured grid "
                   "is " + std::to_string(expected.rows) + "x" +
                   std::to_string(expected.cols));
  }
  ObjectImage object{img.grid, std::move(img.values)};
  object.validate();  // rejects values outside [0,1] after mapping
  return object;
}

namespace {

std::vector<std::uint16_t> quantize(const Eigen::VectorXd& values, double lo,
                                    double hi, unsigned maxval) {
  std::vector<std::uint16_t> out(values.size());
  const double span = hi - lo;
  for (Eigen::Index p = 0; p < values.size(); ++p) {
    double t = span > 0.0 ? (values[p] - lo) / span : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    out[p] = static_cast<std::uint16_t>(std::lround(t * maxval));
  }
  return out;
}

void check_image_args(GridShape grid, const Eigen::VectorXd& values) {
  if (grid.pixel_count() <= 0 || values.size() != grid.pixel_count())
    throw std::invalid_argument("image writer: values do not match the grid");
}

void append_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
  append_be32(out, static_cast<std::uint32_t>(payload.size()));
  const size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = crc32(0L, out.data() + crc_start,
                         static_cast<uInt>(out.size() - crc_start));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_pgm16(const std::filesystem::path& path, GridShape grid,
                 const Eigen::VectorXd& values, double lo, double hi) {
  check_image_args(grid, values);
  const auto q = quantize(values, lo, hi, 65535);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << grid.cols << " " << grid.rows << "\n65535\n";
  for (const std::uint16_t v : q) {
    out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
  if (!out) fail(path, "write failed");
}

void write_png8(const std::filesystem::path& path, GridShape grid,
                const Eigen::VectorXd& values, double lo, double hi) {
  check_image_args(grid, values);
  const auto q = quantize(values, lo, hi, 255);

  // Raw scanlines, one leading filter byte (0 = none) per row.
  std::vector<unsigned char> raster;
  raster.reserve(static_cast<size_t>(grid.rows) * (grid.cols + 1));
  for (int r = 0; r < grid.rows; ++r) {
    raster.push_back(0);
    for (int c = 0; c < grid.cols; ++c)
      raster.push_back(static_cast<unsigned char>(q[r * grid.cols + c]));
  }
  uLongf compressed_size = compressBound(static_cast<uLong>(raster.size()));
  std::vector<unsigned char> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raster.data(),
                static_cast<uLong>(raster.size()), 6) != Z_OK)
    fail(path, "zlib compression failed");
  compressed.resize(compressed_size);

  std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                    '\n'};
  std::vector<unsigned char> ihdr;
  append_be32(ihdr, static_cast<std::uint32_t>(grid.cols));
  append_be32(ihdr, static_cast<std::uint32_t>(grid.rows));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", compressed);
  append_chunk(png, "IEND", {});

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(png.data()),
            static_cast<std::streamsize>(png.size()));
  if (!out) fail(path, "write failed");
}

}  // namespace mgi
