#include "wspace/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "wspace/error.hpp"

namespace wspace {

Generator parse_generator(const std::string& s) {
  if (s == "blurred-blobs" || s == "blobs") return Generator::kBlurredBlobs;
  if (s == "random-dirichlet" || s == "dirichlet") return Generator::kRandomDirichlet;
  throw Error(ErrorCode::kInvalidArgument, "unknown generator '" + s + "' (expected blurred-blobs|random-dirichlet)");
}

std::string to_string(Generator g) {
  return g == Generator::kBlurredBlobs ? "blurred-blobs" : "random-dirichlet";
}

namespace {

Eigen::VectorXd blob_image(int rows, int cols, int cls, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  // anchors spread along the main diagonal, first and last class in the corners
  const double t = classes > 1 ? static_cast<double>(cls) / (classes - 1) : 0.5;
  const double ar = 0.2 * (rows - 1) + 0.6 * (rows - 1) * t;
  const double ac = 0.2 * (cols - 1) + 0.6 * (cols - 1) * t;
  const double spread = 0.08 * std::max(rows, cols);
  Eigen::VectorXd img = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows) * cols);
  const int blobs = count(rng);
  for (int b = 0; b < blobs; ++b) {
    const double cr = ar + spread * jitter(rng);
    const double cc = ac + spread * jitter(rng);
    const double sigma = 0.6 + 0.9 * unit(rng);
    const double amp = 0.5 + unit(rng);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
        img(r * cols + c) += amp * std::exp(-0.5 * d2 / (sigma * sigma));
      }
    }
  }
  return img;
}

Eigen::VectorXd dirichlet(Eigen::Index n, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(alpha, 1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = g(rng);
  if (!(w.sum() > 0.0)) w.setOnes();
  return w;
}

}  // namespace

MeasureDataset make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1 || spec.n_train < 0 || spec.n_test < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid synthetic dataset size");
  }
  if (spec.classes < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one class");
  if (!(spec.alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dirichlet concentration must be positive");
  MeasureDataset data;
  data.ground = GroundSpace::grid(spec.rows, spec.cols, spec.p);
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> pick(0, spec.classes - 1);
  auto draw = [&](std::vector<DiscreteMeasure>& out, std::vector<int>& labels, int n) {
    for (int j = 0; j < n; ++j) {
      if (spec.generator == Generator::kBlurredBlobs) {
        const int cls = pick(rng);
        labels.push_back(cls);
        out.push_back(normalize_to_measure(data.ground, blob_image(spec.rows, spec.cols, cls, spec.classes, rng)));
      } else {
        out.push_back(normalize_to_measure(data.ground, dirichlet(data.ground->size(), spec.alpha, rng)));
      }
    }
  };
  draw(data.train, data.train_labels, spec.n_train);
  draw(data.test, data.test_labels, spec.n_test);
  return data;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::kParse, path + ": truncated IDX header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
}

}  // namespace

MeasureDataset convert_idx(const std::string& images_path, int n_train, int n_test, double p,
                           const std::string& labels_path) {
  std::ifstream in(images_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + images_path);
  if (read_be32(in, images_path) != 0x00000803u) throw Error(ErrorCode::kParse, images_path + ": not an IDX3 ubyte file");
  const std::uint32_t count = read_be32(in, images_path);
  const std::uint32_t rows = read_be32(in, images_path);
  const std::uint32_t cols = read_be32(in, images_path);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) throw Error(ErrorCode::kParse, images_path + ": bad image shape");

  std::vector<unsigned char> labels;
  if (!labels_path.empty()) {
    std::ifstream lin(labels_path, std::ios::binary);
    if (!lin) throw Error(ErrorCode::kIo, "cannot open " + labels_path);
    if (read_be32(lin, labels_path) != 0x00000801u) throw Error(ErrorCode::kParse, labels_path + ": not an IDX1 ubyte file");
    labels.resize(read_be32(lin, labels_path));
    if (!lin.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()))) {
      throw Error(ErrorCode::kParse, labels_path + ": truncated labels");
    }
  }

  MeasureDataset data;
  data.ground = GroundSpace::grid(static_cast<int>(rows), static_cast<int>(cols), p);
  const std::size_t pixels = std::size_t(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < count && static_cast<int>(data.train.size() + data.test.size()) < n_train + n_test; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
      throw Error(ErrorCode::kParse, images_path + ": truncated image data");
    }
    Eigen::VectorXd raw(static_cast<Eigen::Index>(pixels));
    for (std::size_t k = 0; k < pixels; ++k) raw(static_cast<Eigen::Index>(k)) = buf[k];
    if (!(raw.sum() > 0.0)) continue;
    const bool to_train = static_cast<int>(data.train.size()) < n_train;
    (to_train ? data.train : data.test).push_back(normalize_to_measure(data.ground, raw));
    if (!labels.empty()) (to_train ? data.train_labels : data.test_labels).push_back(i < labels.size() ? labels[i] : -1);
  }
  if (static_cast<int>(data.train.size() + data.test.size()) < n_train + n_test) {
    throw Error(ErrorCode::kInvalidArgument, images_path + ": only " +
                                                 std::to_string(data.train.size() + data.test.size()) +
                                                 " nonzero images, " + std::to_string(n_train + n_test) + " requested");
  }
  return data;
}

}  // namespace wspace
