#include <cstdio>
#include <fstream>
#include <sstream>

#include "wspace/error.hpp"
#include "wspace/measure.hpp"

namespace wspace {

namespace {

std::vector<DiscreteMeasure> read_block(std::istream& in, const GroundPtr& ground, int count,
                                        int& line_no) {
  std::vector<DiscreteMeasure> out;
  out.reserve(static_cast<std::size_t>(count));
  const auto n = static_cast<Eigen::Index>(ground->size());
  std::string line;
  while (static_cast<int>(out.size()) < count) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kParse, "dataset ended early at line " + std::to_string(line_no));
    }
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Eigen::VectorXd raw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(ls >> raw(i))) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected " +
                                           std::to_string(n) + " values");
      }
    }
    double extra;
    if (ls >> extra) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": too many values");
    }
    out.push_back(normalize_to_measure(ground, raw));
  }
  return out;
}

}  // namespace

MeasureDataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open dataset " + path);
  int rows = 0, cols = 0, n_train = 0, n_test = 0;
  double p = 0.0;
  std::string header;
  int line_no = 1;
  if (!std::getline(in, header)) throw Error(ErrorCode::kParse, "empty dataset file " + path);
  std::istringstream hs(header);
  if (!(hs >> rows >> cols >> p >> n_train >> n_test) || rows < 1 || cols < 1 || n_train < 0 ||
      n_test < 0) {
    throw Error(ErrorCode::kParse, "bad dataset header in " + path);
  }
  MeasureDataset data;
  data.ground = GroundSpace::grid(rows, cols, p);
  data.train = read_block(in, data.ground, n_train, line_no);
  data.test = read_block(in, data.ground, n_test, line_no);
  return data;
}

void write_dataset(const MeasureDataset& data, const std::string& path) {
  const auto& shape = data.ground->grid_shape();
  if (!shape) throw Error(ErrorCode::kInvalidArgument, "dataset files require a grid ground space");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  std::fprintf(f, "%d %d %.17g %zu %zu\n", shape->rows, shape->cols, data.ground->p(),
               data.train.size(), data.test.size());
  auto dump = [&](const std::vector<DiscreteMeasure>& block) {
    for (const auto& mu : block) {
      const auto& w = mu.weights();
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        std::fprintf(f, i ? " %.17g" : "%.17g", w(i));
      }
      std::fputc('\n', f);
    }
  };
  dump(data.train);
  dump(data.test);
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace wspace
