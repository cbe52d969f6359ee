#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>

#include "tsxfidel/error.hpp"
#include "tsxfidel/models.hpp"

namespace tsxfidel::models {
namespace {

constexpr const char* kMagic = "tsxfidel-model";
constexpr int kFormatVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error(ErrorCode::kCorruptModel, "unexpected end of model stream");
    return w;
  }
  void expect(const std::string& keyword) {
    const std::string w = word();
    if (w != keyword) {
      throw Error(ErrorCode::kCorruptModel, "expected '" + keyword + "', found '" + w + "'");
    }
  }
  double number() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) {
      throw Error(ErrorCode::kCorruptModel, "bad number '" + w + "'");
    }
    return v;
  }
  long integer() {
    const std::string w = word();
    char* end = nullptr;
    const long v = std::strtol(w.c_str(), &end, 10);
    if (end != w.c_str() + w.size()) {
      throw Error(ErrorCode::kCorruptModel, "bad integer '" + w + "'");
    }
    return v;
  }
  std::size_t count() {
    const long v = integer();
    if (v < 0) throw Error(ErrorCode::kCorruptModel, "negative count");
    return static_cast<std::size_t>(v);
  }

 private:
  std::istream& in_;
};

void write_header(std::ostream& out, const ForecastModel& m) {
  out << kMagic << ' ' << kFormatVersion << '\n'
      << "kind " << m.kind() << '\n'
      << "shape " << m.features() << ' ' << m.window_len() << ' ' << m.horizons() << '\n';
}

}  // namespace

void GbrModel::save(std::ostream& out) const {
  write_header(out, *this);
  out << "learning_rate " << hex(learning_rate_) << '\n';
  for (std::size_t h = 0; h < horizons(); ++h) {
    out << "horizon " << h << " intercept " << hex(intercepts_[h]) << " trees "
        << trees_[h].size() << '\n';
    for (const auto& tree : trees_[h]) {
      out << "tree " << tree.nodes().size() << ' ' << tree.max_depth() << '\n';
      for (const auto& n : tree.nodes()) {
        out << "node " << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right
            << ' ' << hex(n.value) << '\n';
      }
    }
  }
}

void TdnnModel::save(std::ostream& out) const {
  write_header(out, *this);
  out << "layers " << layers_.size() << '\n';
  for (const auto& layer : layers_) {
    out << "layer " << layer.outputs() << ' ' << layer.inputs() << ' '
        << (layer.activation == Activation::kSigmoid ? "sigmoid" : "linear") << '\n';
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      out << 'w';
      for (double w : layer.weights.row(o)) out << ' ' << hex(w);
      out << '\n';
    }
    out << 'b';
    for (double b : layer.bias) out << ' ' << hex(b);
    out << '\n';
  }
}

void save_model(const ForecastModel& model, std::ostream& out) {
  model.save(out);
  if (!out) throw Error(ErrorCode::kIo, "failed writing model");
}

std::unique_ptr<ForecastModel> load_model(std::istream& in) {
  Reader r(in);
  r.expect(kMagic);
  const long version = r.integer();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kCorruptModel, "unsupported model format version " +
                                              std::to_string(version));
  }
  r.expect("kind");
  const std::string kind = r.word();
  r.expect("shape");
  const std::size_t features = r.count();
  const std::size_t window_len = r.count();
  const std::size_t horizons = r.count();

  if (kind == "gbr") {
    r.expect("learning_rate");
    const double lr = r.number();
    std::vector<double> intercepts(horizons);
    std::vector<std::vector<RegressionTree>> trees(horizons);
    for (std::size_t h = 0; h < horizons; ++h) {
      r.expect("horizon");
      if (r.count() != h) throw Error(ErrorCode::kCorruptModel, "horizons out of order");
      r.expect("intercept");
      intercepts[h] = r.number();
      r.expect("trees");
      const std::size_t m = r.count();
      for (std::size_t t = 0; t < m; ++t) {
        r.expect("tree");
        const std::size_t n_nodes = r.count();
        const int max_depth = static_cast<int>(r.integer());
        std::vector<TreeNode> nodes(n_nodes);
        for (auto& n : nodes) {
          r.expect("node");
          n.feature = static_cast<int>(r.integer());
          n.threshold = r.number();
          n.left = static_cast<int>(r.integer());
          n.right = static_cast<int>(r.integer());
          n.value = r.number();
        }
        trees[h].emplace_back(std::move(nodes), max_depth);
      }
    }
    return std::make_unique<GbrModel>(features, window_len, std::move(intercepts),
                                      std::move(trees), lr);
  }
  if (kind == "tdnn") {
    r.expect("layers");
    const std::size_t n_layers = r.count();
    std::vector<DenseLayer> layers(n_layers);
    for (auto& layer : layers) {
      r.expect("layer");
      const std::size_t out = r.count();
      const std::size_t in_width = r.count();
      const std::string act = r.word();
      if (act != "sigmoid" && act != "linear") {
        throw Error(ErrorCode::kCorruptModel, "unknown activation '" + act + "'");
      }
      layer.activation = act == "sigmoid" ? Activation::kSigmoid : Activation::kLinear;
      layer.weights = Matrix(out, in_width);
      for (std::size_t o = 0; o < out; ++o) {
        r.expect("w");
        for (std::size_t i = 0; i < in_width; ++i) layer.weights(o, i) = r.number();
      }
      r.expect("b");
      layer.bias.resize(out);
      for (double& b : layer.bias) b = r.number();
    }
    auto model = std::make_unique<TdnnModel>(features, window_len, std::move(layers));
    if (model->horizons() != horizons) {
      throw Error(ErrorCode::kCorruptModel, "output width disagrees with declared horizons");
    }
    return model;
  }
  throw Error(ErrorCode::kCorruptModel, "unknown model kind '" + kind + "'");
}

}  // namespace tsxfidel::models
