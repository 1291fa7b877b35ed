#include "rrdee/nn.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rrdee::nn {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> engine;
}

void uniform_init(Param& p, Rng& rng, double scale) {
  for (long r = 0; r < p.value.rows(); ++r) {
    for (long c = 0; c < p.value.cols(); ++c) {
      p.value(r, c) = rng.uniform(-scale, scale);
    }
  }
}

void glorot_init(Param& p, Rng& rng) {
  double scale = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  uniform_init(p, rng, scale);
}

Vector softmax(const Vector& z) {
  Eigen::ArrayXd e = (z.array() - z.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

Matrix row_softmax(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (long r = 0; r < z.rows(); ++r) {
    out.row(r) = softmax(z.row(r).transpose()).transpose();
  }
  return out;
}

double log_sum_exp(const Vector& z) {
  double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

Adam::Adam(const ParamList& params, double lr_) : lr(lr_) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Param* p : params) {
    m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(const ParamList& params) {
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = params[i]->grad;
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = (beta2 * v[i].array() + (1.0 - beta2) * g.array().square()).matrix();
    params[i]->value.array() -=
        lr * (m[i].array() / bc1) / ((v[i].array() / bc2).sqrt() + eps);
  }
}

double global_grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const Param* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void clip_global_norm(const ParamList& params, double max_norm) {
  double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0) {
    double scale = max_norm / norm;
    for (Param* p : params) p->grad *= scale;
  }
}

void zero_grads(const ParamList& params) {
  for (Param* p : params) p->zero_grad();
}

Matrix Embedding::lookup(const std::vector<int>& ids) const {
  Matrix out(static_cast<long>(ids.size()), dim());
  for (size_t t = 0; t < ids.size(); ++t) {
    out.row(static_cast<long>(t)) = table.value.row(ids[t]);
  }
  return out;
}

void Embedding::backward(const std::vector<int>& ids, const Matrix& dout) {
  for (size_t t = 0; t < ids.size(); ++t) {
    table.grad.row(ids[t]) += dout.row(static_cast<long>(t));
  }
}

Matrix dropout_mask(long rows, long cols, double p, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep = 1.0 - p;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      mask(r, c) = rng.uniform(0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    }
  }
  return mask;
}

LstmDir::LstmDir(const std::string& name, int input, int hidden)
    : w_in(name + ".w_in", 4L * hidden, input),
      w_rec(name + ".w_rec", 4L * hidden, hidden),
      bias(name + ".bias", 4L * hidden, 1),
      input_dim(input),
      hidden_dim(hidden) {}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Matrix LstmDir::forward(const Matrix& x, bool reverse, Cache* cache) const {
  const long t_len = x.rows();
  const int h = hidden_dim;
  Matrix hs = Matrix::Zero(t_len, h);
  Matrix cs = Matrix::Zero(t_len, h);
  Matrix gates = Matrix::Zero(t_len, 4L * h);
  Matrix tanh_c = Matrix::Zero(t_len, h);

  Vector h_prev = Vector::Zero(h);
  Vector c_prev = Vector::Zero(h);
  for (long step = 0; step < t_len; ++step) {
    const long t = reverse ? t_len - 1 - step : step;
    Vector z = w_in.value * x.row(t).transpose() + w_rec.value * h_prev +
               bias.value.col(0);
    Vector gi(h), gf(h), gg(h), go(h);
    for (int j = 0; j < h; ++j) {
      gi(j) = sigmoid(z(j));
      gf(j) = sigmoid(z(h + j));
      gg(j) = std::tanh(z(2 * h + j));
      go(j) = sigmoid(z(3 * h + j));
    }
    Vector c_t = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    Vector tc = c_t.array().tanh();
    Vector h_t = go.cwiseProduct(tc);

    hs.row(t) = h_t.transpose();
    cs.row(t) = c_t.transpose();
    gates.block(t, 0, 1, h) = gi.transpose();
    gates.block(t, h, 1, h) = gf.transpose();
    gates.block(t, 2 * h, 1, h) = gg.transpose();
    gates.block(t, 3 * h, 1, h) = go.transpose();
    tanh_c.row(t) = tc.transpose();

    h_prev = h_t;
    c_prev = c_t;
  }

  if (cache) {
    cache->x = x;
    cache->h = hs;
    cache->c = cs;
    cache->gates = gates;
    cache->tanh_c = tanh_c;
    cache->reverse = reverse;
  }
  return hs;
}

Matrix LstmDir::backward(const Cache& cache, const Matrix& dh_out) {
  const long t_len = cache.x.rows();
  const int h = hidden_dim;
  Matrix dx = Matrix::Zero(t_len, input_dim);

  Vector dh_rec = Vector::Zero(h);
  Vector dc = Vector::Zero(h);
  for (long step = t_len - 1; step >= 0; --step) {
    const long t = cache.reverse ? t_len - 1 - step : step;
    const long t_prev_step = step - 1;
    const long t_prev =
        t_prev_step < 0 ? -1 : (cache.reverse ? t_len - 1 - t_prev_step : t_prev_step);

    Vector gi = cache.gates.block(t, 0, 1, h).transpose();
    Vector gf = cache.gates.block(t, h, 1, h).transpose();
    Vector gg = cache.gates.block(t, 2 * h, 1, h).transpose();
    Vector go = cache.gates.block(t, 3 * h, 1, h).transpose();
    Vector tc = cache.tanh_c.row(t).transpose();
    Vector c_prev =
        t_prev < 0 ? Vector::Zero(h) : Vector(cache.c.row(t_prev).transpose());
    Vector h_prev =
        t_prev < 0 ? Vector::Zero(h) : Vector(cache.h.row(t_prev).transpose());

    Vector dh = dh_out.row(t).transpose() + dh_rec;
    Vector dgo = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(go).cwiseProduct((1.0 - tc.array().square()).matrix());
    Vector dgf = dc.cwiseProduct(c_prev);
    Vector dgi = dc.cwiseProduct(gg);
    Vector dgg = dc.cwiseProduct(gi);
    Vector dc_prev = dc.cwiseProduct(gf);

    Vector dz(4 * h);
    for (int j = 0; j < h; ++j) {
      dz(j) = dgi(j) * gi(j) * (1.0 - gi(j));
      dz(h + j) = dgf(j) * gf(j) * (1.0 - gf(j));
      dz(2 * h + j) = dgg(j) * (1.0 - gg(j) * gg(j));
      dz(3 * h + j) = dgo(j) * go(j) * (1.0 - go(j));
    }

    w_in.grad += dz * cache.x.row(t);
    w_rec.grad += dz * h_prev.transpose();
    bias.grad.col(0) += dz;
    dx.row(t) += (w_in.value.transpose() * dz).transpose();
    dh_rec = w_rec.value.transpose() * dz;
    dc = dc_prev;
  }
  return dx;
}

ParamList LstmDir::params() { return {&w_in, &w_rec, &bias}; }

void LstmDir::init(Rng& rng) {
  glorot_init(w_in, rng);
  glorot_init(w_rec, rng);
  // Forget-gate bias starts at 1.
  bias.value.setZero();
  bias.value.block(hidden_dim, 0, hidden_dim, 1).setOnes();
}

BiLstmStack::BiLstmStack(const std::string& name, int layers_, int input_dim_,
                         int hidden_total_, double dropout_)
    : layers(layers_),
      input_dim(input_dim_),
      hidden_total(hidden_total_),
      dropout(dropout_) {
  if (hidden_total % 2 != 0) {
    throw std::invalid_argument("bidirectional hidden width must be even");
  }
  const int h = hidden_total / 2;
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : hidden_total;
    fwd.emplace_back(name + ".l" + std::to_string(l) + ".fwd", in, h);
    bwd.emplace_back(name + ".l" + std::to_string(l) + ".bwd", in, h);
  }
}

Matrix BiLstmStack::forward(const Matrix& x, bool training, Rng* rng,
                            Cache* cache) const {
  if (cache) {
    cache->fwd.resize(layers);
    cache->bwd.resize(layers);
    cache->inputs.resize(layers);
    cache->masks.assign(layers, Matrix());
  }
  Matrix input = x;
  Matrix out;
  for (int l = 0; l < layers; ++l) {
    if (l > 0 && training && dropout > 0) {
      Matrix mask = dropout_mask(input.rows(), input.cols(), dropout, *rng);
      input = input.cwiseProduct(mask);
      if (cache) cache->masks[l] = std::move(mask);
    }
    if (cache) cache->inputs[l] = input;
    const int h = hidden_total / 2;
    Matrix hf = fwd[l].forward(input, false, cache ? &cache->fwd[l] : nullptr);
    Matrix hb = bwd[l].forward(input, true, cache ? &cache->bwd[l] : nullptr);
    out.resize(input.rows(), hidden_total);
    out.block(0, 0, input.rows(), h) = hf;
    out.block(0, h, input.rows(), h) = hb;
    input = out;
  }
  return input;
}

Matrix BiLstmStack::backward(Cache& cache, const Matrix& dout) {
  const int h = hidden_total / 2;
  Matrix d = dout;
  for (int l = layers - 1; l >= 0; --l) {
    Matrix dxf = fwd[l].backward(cache.fwd[l], d.block(0, 0, d.rows(), h));
    Matrix dxb = bwd[l].backward(cache.bwd[l], d.block(0, h, d.rows(), h));
    d = dxf + dxb;
    if (cache.masks[l].size() > 0) d = d.cwiseProduct(cache.masks[l]);
  }
  return d;
}

ParamList BiLstmStack::params() {
  ParamList out;
  for (int l = 0; l < layers; ++l) {
    for (Param* p : fwd[l].params()) out.push_back(p);
    for (Param* p : bwd[l].params()) out.push_back(p);
  }
  return out;
}

void BiLstmStack::init(Rng& rng) {
  for (int l = 0; l < layers; ++l) {
    fwd[l].init(rng);
    bwd[l].init(rng);
  }
}

Linear::Linear(const std::string& name, long in, long out)
    : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

Matrix Linear::forward(const Matrix& x) const {
  return (x * weight.value.transpose()).rowwise() + bias.value.col(0).transpose();
}

Matrix Linear::backward(const Matrix& x, const Matrix& dout) {
  weight.grad += dout.transpose() * x;
  bias.grad.col(0) += dout.colwise().sum().transpose();
  return dout * weight.value;
}

Vector Linear::forward_vec(const Vector& x) const {
  return weight.value * x + bias.value.col(0);
}

Vector Linear::backward_vec(const Vector& x, const Vector& dout) {
  weight.grad += dout * x.transpose();
  bias.grad.col(0) += dout;
  return weight.value.transpose() * dout;
}

void Linear::init(Rng& rng) {
  glorot_init(weight, rng);
  bias.value.setZero();
}

Conv1d::Conv1d(const std::string& name, int in_ch_, int out_ch_, int k_)
    : kernel(name + ".kernel", out_ch_, static_cast<long>(k_) * in_ch_),
      bias(name + ".bias", out_ch_, 1),
      in_ch(in_ch_),
      out_ch(out_ch_),
      k(k_) {}

Matrix Conv1d::forward(const Matrix& x) const {
  const long t_len = x.rows();
  const int half = k / 2;
  Matrix out(t_len, out_ch);
  out.rowwise() = bias.value.col(0).transpose();
  for (long t = 0; t < t_len; ++t) {
    for (int dt = 0; dt < k; ++dt) {
      const long src = t + dt - half;
      if (src < 0 || src >= t_len) continue;
      out.row(t) += x.row(src) *
                    kernel.value.block(0, dt * in_ch, out_ch, in_ch).transpose();
    }
  }
  return out;
}

Matrix Conv1d::backward(const Matrix& x, const Matrix& dout) {
  const long t_len = x.rows();
  const int half = k / 2;
  Matrix dx = Matrix::Zero(t_len, in_ch);
  for (long t = 0; t < t_len; ++t) {
    bias.grad.col(0) += dout.row(t).transpose();
    for (int dt = 0; dt < k; ++dt) {
      const long src = t + dt - half;
      if (src < 0 || src >= t_len) continue;
      kernel.grad.block(0, dt * in_ch, out_ch, in_ch) +=
          dout.row(t).transpose() * x.row(src);
      dx.row(src) += dout.row(t) * kernel.value.block(0, dt * in_ch, out_ch, in_ch);
    }
  }
  return dx;
}

void Conv1d::init(Rng& rng) {
  glorot_init(kernel, rng);
  bias.value.setZero();
}

}  // namespace rrdee::nn
