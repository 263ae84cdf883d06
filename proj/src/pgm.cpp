#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "regpca/error.hpp"
#include "regpca/io.hpp"

namespace regpca::io {

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string next_token(const std::string& data, std::size_t& pos, const std::string& name) {
  while (pos < data.size()) {
    const auto c = static_cast<unsigned char>(data[pos]);
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw Error(ErrorKind::format, name + ": truncated PGM header");
  return data.substr(start, pos - start);
}

long parse_positive(const std::string& token, const std::string& name, const char* what) {
  long v = 0;
  std::istringstream ss(token);
  if (!(ss >> v) || !ss.eof() || v <= 0) {
    throw Error(ErrorKind::format, name + ": invalid " + what + " '" + token + "'");
  }
  return v;
}

}  // namespace

PgmImage read_pgm(const std::filesystem::path& path) {
  const std::string data = read_text(path);
  const std::string name = path.string();
  std::size_t pos = 0;
  const std::string magic = next_token(data, pos, name);
  if (magic != "P2" && magic != "P5") {
    throw Error(ErrorKind::format, name + ": unsupported magic '" + magic + "' (expected P2 or P5)");
  }
  const long width = parse_positive(next_token(data, pos, name), name, "width");
  const long height = parse_positive(next_token(data, pos, name), name, "height");
  const long maxval = parse_positive(next_token(data, pos, name), name, "maxval");
  if (maxval > 65535) throw Error(ErrorKind::format, name + ": maxval exceeds 65535");

  PgmImage img;
  img.maxval = static_cast<int>(maxval);
  img.pixels.resize(height, width);
  if (magic == "P2") {
    for (long i = 0; i < height; ++i) {
      for (long j = 0; j < width; ++j) {
        const std::string tok = next_token(data, pos, name);
        long v = -1;
        std::istringstream ss(tok);
        if (!(ss >> v) || !ss.eof() || v < 0 || v > maxval) {
          throw Error(ErrorKind::format, name + ": invalid pixel '" + tok + "'");
        }
        img.pixels(i, j) = static_cast<double>(v);
      }
    }
    return img;
  }

  // Binary raster starts after exactly one whitespace byte.
  ++pos;
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  const std::size_t needed = static_cast<std::size_t>(width * height) * bytes;
  if (pos + needed > data.size()) throw Error(ErrorKind::format, name + ": truncated raster");
  const auto* raster = reinterpret_cast<const unsigned char*>(data.data() + pos);
  for (long i = 0; i < height; ++i) {
    for (long j = 0; j < width; ++j) {
      const std::size_t k = static_cast<std::size_t>(i * width + j) * bytes;
      const unsigned v = bytes == 2 ? (unsigned{raster[k]} << 8) | raster[k + 1] : raster[k];
      img.pixels(i, j) = static_cast<double>(v);
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& pixels, int maxval,
               bool binary) {
  if (maxval < 1 || maxval > 65535) {
    throw Error(ErrorKind::format, "maxval must lie in [1, 65535]");
  }
  auto level = [maxval](double v) {
    if (!std::isfinite(v)) return 0L;
    return std::clamp(std::lround(v), 0L, static_cast<long>(maxval));
  };

  std::ostringstream out;
  out << (binary ? "P5" : "P2") << '\n'
      << pixels.cols() << ' ' << pixels.rows() << '\n'
      << maxval << '\n';
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
      const long v = level(pixels(i, j));
      if (!binary) {
        out << v << (j + 1 == pixels.cols() ? '\n' : ' ');
      } else if (maxval > 255) {
        out.put(static_cast<char>((v >> 8) & 0xff));
        out.put(static_cast<char>(v & 0xff));
      } else {
        out.put(static_cast<char>(v));
      }
    }
  }
  write_text(path, out.str());
}

ImageStack read_pgm_stack(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw Error(ErrorKind::io, directory.string() + " is not a directory");
  }
  std::vector<std::string> names;
  const fs::path index = directory / kStackIndex;
  if (fs::exists(index)) {
    std::istringstream lines(read_text(index));
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() != '#') names.push_back(line);
    }
  } else {
    for (const auto& entry : fs::directory_iterator(directory)) {
      if (entry.path().extension() == ".pgm") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
  }
  if (names.size() < 2) {
    throw Error(ErrorKind::format, directory.string() + ": a stack needs at least two frames");
  }

  ImageStack stack;
  stack.names = names;
  for (std::size_t t = 0; t < names.size(); ++t) {
    const PgmImage img = read_pgm(directory / names[t]);
    if (t == 0) {
      stack.height = img.pixels.rows();
      stack.width = img.pixels.cols();
      stack.maxval = img.maxval;
      stack.frames.resize(static_cast<Eigen::Index>(names.size()), stack.height * stack.width);
    } else if (img.pixels.rows() != stack.height || img.pixels.cols() != stack.width) {
      throw Error(ErrorKind::shape, names[t] + ": frame size differs from the first frame");
    }
    stack.maxval = std::max(stack.maxval, img.maxval);
    // Row-major flattening: pixel (r, c) lands in column r * width + c.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major =
        img.pixels;
    stack.frames.row(static_cast<Eigen::Index>(t)) =
        Eigen::Map<const Eigen::RowVectorXd>(row_major.data(), row_major.size());
  }
  return stack;
}

void write_pgm_stack(const std::filesystem::path& directory, const ImageStack& stack,
                     bool binary) {
  namespace fs = std::filesystem;
  if (stack.frames.cols() != stack.height * stack.width) {
    throw Error(ErrorKind::shape, "stack frame length does not match height * width");
  }
  fs::create_directories(directory);
  std::string index;
  for (Eigen::Index t = 0; t < stack.frames.rows(); ++t) {
    std::string name;
    if (static_cast<std::size_t>(t) < stack.names.size()) {
      name = stack.names[static_cast<std::size_t>(t)];
    } else {
      std::ostringstream ss;
      ss << "frame_" << std::setw(4) << std::setfill('0') << t << ".pgm";
      name = ss.str();
    }
    const Eigen::RowVectorXd row = stack.frames.row(t);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> image =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            row.data(), stack.height, stack.width);
    write_pgm(directory / name, image, stack.maxval, binary);
    index += name + '\n';
  }
  write_text(directory / kStackIndex, index);
}

}  // namespace regpca::io
