#include "rsfpinn/network.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rsfpinn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::silu:
      return "silu";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "silu") return Activation::silu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(TrialMode m) {
  switch (m) {
    case TrialMode::raw:
      return "raw";
    case TrialMode::hard_ic:
      return "hard_ic";
    case TrialMode::hard_state:
      return "hard_state";
  }
  return "?";
}

ActivationDerivatives activation_derivatives(Activation a, const Eigen::ArrayXXd& z, bool need_third) {
  ActivationDerivatives r;
  switch (a) {
    case Activation::tanh: {
      r.value = z.tanh();
      r.d1 = 1.0 - r.value.square();
      r.d2 = -2.0 * r.value * r.d1;
      if (need_third) {
        r.d3 = r.d1 * (4.0 * r.value.square() - 2.0 * r.d1);
      }
      break;
    }
    case Activation::relu: {
      r.value = z.max(0.0);
      r.d1 = (z > 0.0).cast<double>();
      r.d2 = Eigen::ArrayXXd::Zero(z.rows(), z.cols());
      if (need_third) {
        r.d3 = r.d2;
      }
      break;
    }
    case Activation::silu: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z).exp());
      const Eigen::ArrayXXd g = s * (1.0 - s);
      const Eigen::ArrayXXd h = 1.0 - 2.0 * s;
      r.value = z * s;
      r.d1 = s + z * g;
      r.d2 = g * (2.0 + z * h);
      if (need_third) {
        r.d3 = g * h * (2.0 + z * h) + g * (h - 2.0 * z * g);
      }
      break;
    }
  }
  return r;
}

Mlp::Mlp(std::vector<int> layer_dims, std::vector<Activation> activations)
    : dims_(std::move(layer_dims)), acts_(std::move(activations)) {
  if (dims_.size() < 2) {
    throw std::invalid_argument("Mlp: need at least input and output dimensions");
  }
  for (int d : dims_) {
    if (d <= 0) {
      throw std::invalid_argument("Mlp: layer dimensions must be positive");
    }
  }
  if (acts_.size() != dims_.size() - 2) {
    throw std::invalid_argument("Mlp: expected one activation per hidden layer");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
  }
  params_.assign(total, 0.0);
}

Eigen::Map<const RowMajorMatrix> Mlp::weights(int layer) const {
  return {params_.data() + offsets_[layer], dims_[layer + 1], dims_[layer]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}
Eigen::Map<RowMajorMatrix> Mlp::weights(int layer) {
  return {params_.data() + offsets_[layer], dims_[layer + 1], dims_[layer]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}

double xavier_bound(int fan_in, int fan_out) { return std::sqrt(6.0 / (fan_in + fan_out)); }

Mlp init_xavier(std::vector<int> layer_dims, std::vector<Activation> activations, std::uint64_t seed) {
  Mlp net(std::move(layer_dims), std::move(activations));
  std::mt19937_64 gen(seed);
  for (int l = 0; l < net.num_layers(); ++l) {
    const int fan_in = net.layer_dims()[l];
    const int fan_out = net.layer_dims()[l + 1];
    const double bound = xavier_bound(fan_in, fan_out);
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = net.weights(l);
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        double v = dist(gen);
        while (v == -bound) {
          v = dist(gen);
        }
        w(i, j) = v;
      }
    }
  }
  return net;
}

namespace {

// Jet buffers are several megabytes; by default glibc maps and unmaps each
// one, which costs a page fault per touched page on every pass.
void keep_large_blocks() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
    return true;
  }();
  (void)once;
#endif
}

}  // namespace

void MlpJetPass::forward(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& seeds,
                         bool second_order) {
  keep_large_blocks();
  if (inputs.rows() != net.input_dim() || seeds.rows() != net.input_dim()) {
    throw std::invalid_argument("MlpJetPass: input rows must equal the network input dimension");
  }
  net_ = &net;
  points_ = static_cast<int>(inputs.cols());
  dirs_ = static_cast<int>(seeds.cols());
  second_ = second_order && dirs_ > 0;
  const int P = points_;
  const int K = dirs_;
  const int B = blocks();
  const int L = net.num_layers();

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(net.input_dim(), static_cast<Eigen::Index>(B) * P);
  a.leftCols(P) = inputs;
  for (int k = 0; k < K; ++k) {
    a.middleCols(static_cast<Eigen::Index>(1 + k) * P, P).colwise() = seeds.col(k);
  }

  layer_in_.resize(L);
  pre_.resize(L - 1);
  for (int l = 0; l < L; ++l) {
    // Owning copies: Eigen kernels peel by address, so products on maps into
    // the parameter vector round differently from one allocation to the next.
    const RowMajorMatrix W = net.weights(l);
    const Eigen::VectorXd b = net.bias(l);
    if (l + 1 == L) {
      out_ = W.row(0) * a;
      out_.head(P).array() += b(0);
      layer_in_[l] = std::move(a);
      break;
    }
    Eigen::MatrixXd z = W * a;
    z.leftCols(P).colwise() += b;
    const ActivationDerivatives ad = activation_derivatives(net.activations()[l], z.leftCols(P).array(), false);
    Eigen::MatrixXd h(z.rows(), z.cols());
    h.leftCols(P) = ad.value.matrix();
    for (int k = 0; k < K; ++k) {
      const auto zd = z.middleCols(static_cast<Eigen::Index>(1 + k) * P, P).array();
      h.middleCols(static_cast<Eigen::Index>(1 + k) * P, P) = (ad.d1 * zd).matrix();
      if (second_) {
        const auto zdd = z.middleCols(static_cast<Eigen::Index>(1 + K + k) * P, P).array();
        h.middleCols(static_cast<Eigen::Index>(1 + K + k) * P, P) = (ad.d1 * zdd + ad.d2 * zd.square()).matrix();
      }
    }
    layer_in_[l] = std::move(a);
    pre_[l] = std::move(z);
    a = std::move(h);
  }
}

void MlpJetPass::backward(const Eigen::RowVectorXd& adjoint, std::span<double> grad) const {
  const Mlp& net = *net_;
  if (grad.size() != net.parameter_count()) {
    throw std::invalid_argument("MlpJetPass::backward: gradient has wrong length");
  }
  const int P = points_;
  const int K = dirs_;
  const int L = net.num_layers();

  auto grad_w = [&](int l) {
    return Eigen::Map<RowMajorMatrix>(grad.data() + net.weight_offset(l), net.layer_dims()[l + 1], net.layer_dims()[l]);
  };
  auto grad_b = [&](int l) {
    return Eigen::Map<Eigen::VectorXd>(grad.data() + net.bias_offset(l), net.layer_dims()[l + 1]);
  };

  // Output layer: only row 0 contributes.
  {
    auto gw = grad_w(L - 1);
    const Eigen::RowVectorXd g = adjoint * layer_in_[L - 1].transpose();
    gw.row(0) += g;
    grad_b(L - 1)(0) += adjoint.head(P).sum();
  }
  if (L == 1) {
    return;
  }
  Eigen::MatrixXd bar = Eigen::VectorXd(net.weights(L - 1).row(0).transpose()) * adjoint;

  for (int l = L - 2; l >= 0; --l) {
    const Eigen::MatrixXd& z = pre_[l];
    const ActivationDerivatives ad = activation_derivatives(net.activations()[l], z.leftCols(P).array(), second_);
    Eigen::MatrixXd zbar(bar.rows(), bar.cols());
    Eigen::ArrayXXd vbar = ad.d1 * bar.leftCols(P).array();
    for (int k = 0; k < K; ++k) {
      const Eigen::Index cd = static_cast<Eigen::Index>(1 + k) * P;
      const auto zd = z.middleCols(cd, P).array();
      const auto hd = bar.middleCols(cd, P).array();
      Eigen::ArrayXXd zdbar = ad.d1 * hd;
      vbar += ad.d2 * zd * hd;
      if (second_) {
        const Eigen::Index cdd = static_cast<Eigen::Index>(1 + K + k) * P;
        const auto zdd = z.middleCols(cdd, P).array();
        const auto hdd = bar.middleCols(cdd, P).array();
        zbar.middleCols(cdd, P) = (ad.d1 * hdd).matrix();
        zdbar += 2.0 * ad.d2 * zd * hdd;
        vbar += ad.d2 * zdd * hdd + ad.d3 * zd.square() * hdd;
      }
      zbar.middleCols(cd, P) = zdbar.matrix();
    }
    zbar.leftCols(P) = vbar.matrix();

    const RowMajorMatrix gw = zbar * layer_in_[l].transpose();
    const Eigen::VectorXd gb = zbar.leftCols(P).rowwise().sum();
    grad_w(l) += gw;
    grad_b(l) += gb;
    if (l > 0) {
      const RowMajorMatrix W = net.weights(l);
      bar = W.transpose() * zbar;
    }
  }
}

void FieldPass::forward(const TrialFunction& tf, std::span<const Point> points, std::vector<int> dirs,
                        bool second_order) {
  const InputMap& map = tf.map;
  const auto n = static_cast<Eigen::Index>(map.coords.size());
  const auto P = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd inputs(n, P);
  for (Eigen::Index p = 0; p < P; ++p) {
    for (Eigen::Index i = 0; i < n; ++i) {
      inputs(i, p) = map.apply(i, points[p][map.coords[i]]);
    }
  }
  Eigen::MatrixXd seeds = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (map.coords[i] == dirs[k]) {
        seeds(i, static_cast<Eigen::Index>(k)) = map.slope(i);
      }
    }
  }
  dirs_ = std::move(dirs);
  pass_.forward(tf.base, inputs, seeds, second_order);
}

FieldJet<double> FieldPass::raw(std::size_t p) const {
  const int ip = static_cast<int>(p);
  FieldJet<double> j(pass_.value(ip));
  for (std::size_t k = 0; k < dirs_.size(); ++k) {
    j.d[dirs_[k]] = pass_.d(static_cast<int>(k), ip);
    if (pass_.second_order()) {
      j.dd[dirs_[k]] = pass_.dd(static_cast<int>(k), ip);
    }
  }
  return j;
}

void FieldPass::zero_adjoint() {
  adjoint_ = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(pass_.blocks()) * pass_.points());
}

void FieldPass::add_adjoint(std::size_t p, const FieldJet<double>& adj) {
  const Eigen::Index P = pass_.points();
  const auto ip = static_cast<Eigen::Index>(p);
  const auto K = static_cast<Eigen::Index>(dirs_.size());
  adjoint_(ip) += adj.v;
  for (Eigen::Index k = 0; k < K; ++k) {
    adjoint_((1 + k) * P + ip) += adj.d[dirs_[k]];
    if (pass_.second_order()) {
      adjoint_((1 + K + k) * P + ip) += adj.dd[dirs_[k]];
    }
  }
}

void FieldPass::backward(std::span<double> grad) const { pass_.backward(adjoint_, grad); }

std::vector<double> evaluate_values(const TrialFunction& tf, std::span<const Point> points) {
  constexpr std::size_t kChunk = 8192;
  std::vector<double> out;
  out.reserve(points.size());
  FieldPass pass;
  for (std::size_t start = 0; start < points.size(); start += kChunk) {
    const auto chunk = points.subspan(start, std::min(kChunk, points.size() - start));
    pass.forward(tf, chunk, {}, false);
    for (std::size_t p = 0; p < chunk.size(); ++p) {
      out.push_back(tf.apply<double>(chunk[p], pass.raw(p)).v);
    }
  }
  return out;
}

double TrialFunction::value(const Point& p) const {
  return evaluate_values(*this, std::span<const Point>(&p, 1)).front();
}

void save_checkpoint(std::ostream& os, const Mlp& net) {
  os << "rsfpinn-mlp 1\n";
  os << "dims";
  for (int d : net.layer_dims()) {
    os << ' ' << d;
  }
  os << "\nactivations";
  for (Activation a : net.activations()) {
    os << ' ' << to_string(a);
  }
  os << "\nparams " << net.parameter_count() << '\n';
  char buf[64];
  for (double v : net.parameters()) {
    std::snprintf(buf, sizeof buf, "%a\n", v);
    os << buf;
  }
}

namespace {

[[noreturn]] void bad_checkpoint(const std::string& why) {
  throw std::runtime_error("malformed checkpoint: " + why);
}

std::istringstream expect_line(std::istream& is, const std::string& key) {
  std::string line;
  if (!std::getline(is, line)) {
    bad_checkpoint("missing '" + key + "' line");
  }
  std::istringstream ls(line);
  std::string word;
  ls >> word;
  if (word != key) {
    bad_checkpoint("expected '" + key + "', found '" + word + "'");
  }
  return ls;
}

}  // namespace

Mlp load_checkpoint(std::istream& is) {
  {
    auto header = expect_line(is, "rsfpinn-mlp");
    int version = 0;
    header >> version;
    if (version != 1) {
      bad_checkpoint("unsupported version");
    }
  }
  std::vector<int> dims;
  {
    auto ls = expect_line(is, "dims");
    int d = 0;
    while (ls >> d) {
      dims.push_back(d);
    }
  }
  std::vector<Activation> acts;
  {
    auto ls = expect_line(is, "activations");
    std::string a;
    while (ls >> a) {
      acts.push_back(parse_activation(a));
    }
  }
  Mlp net(dims, acts);
  std::size_t count = 0;
  {
    auto ls = expect_line(is, "params");
    ls >> count;
  }
  if (count != net.parameter_count()) {
    bad_checkpoint("parameter count does not match dims");
  }
  std::string line;
  for (double& v : net.parameters()) {
    if (!std::getline(is, line)) {
      bad_checkpoint("truncated parameter list");
    }
    char* end = nullptr;
    v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) {
      bad_checkpoint("unparsable parameter '" + line + "'");
    }
  }
  return net;
}

void save_checkpoint(const std::string& path, const Mlp& net) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot write checkpoint " + path);
  }
  save_checkpoint(os, net);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot read checkpoint " + path);
  }
  return load_checkpoint(is);
}

}  // namespace rsfpinn
