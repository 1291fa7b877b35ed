#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rrdee::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A named trainable matrix with its gradient accumulator.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, long rows, long cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

using ParamList = std::vector<Param*>;

// Deterministic RNG shared by init, dropout and shuffling.
struct Rng {
  std::mt19937_64 engine;

  explicit Rng(uint64_t seed) : engine(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine);
  }
  std::string state() const;
  void set_state(const std::string& s);
};

void uniform_init(Param& p, Rng& rng, double scale);
void glorot_init(Param& p, Rng& rng);

Vector softmax(const Vector& z);
Matrix row_softmax(const Matrix& z);
double log_sum_exp(const Vector& z);

struct Adam {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Matrix> m, v;

  Adam(const ParamList& params, double lr_);
  void step(const ParamList& params);
};

double global_grad_norm(const ParamList& params);
void clip_global_norm(const ParamList& params, double max_norm);
void zero_grads(const ParamList& params);

// Token embedding table; row lookup, sparse-row gradient accumulation.
struct Embedding {
  Param table;  // vocab x dim

  Embedding() = default;
  Embedding(long vocab, long dim) : table("embedding", vocab, dim) {}

  long dim() const { return table.value.cols(); }
  Matrix lookup(const std::vector<int>& ids) const;
  void backward(const std::vector<int>& ids, const Matrix& dout);
};

// Inverted-dropout mask: entries are 0 or 1/(1-p).
Matrix dropout_mask(long rows, long cols, double p, Rng& rng);

// One LSTM direction. Gate order in the packed matrices: input, forget,
// candidate, output.
struct LstmDir {
  Param w_in;   // 4H x I
  Param w_rec;  // 4H x H
  Param bias;   // 4H x 1
  int input_dim = 0;
  int hidden_dim = 0;

  LstmDir() = default;
  LstmDir(const std::string& name, int input, int hidden);

  struct Cache {
    Matrix x;       // T x I
    Matrix h;       // T x H
    Matrix c;       // T x H
    Matrix gates;   // T x 4H, post-activation
    Matrix tanh_c;  // T x H
    bool reverse = false;
  };

  // Returns T x H hidden states in input order (reversed internally when
  // reverse is set).
  Matrix forward(const Matrix& x, bool reverse, Cache* cache) const;
  // Accumulates parameter grads; returns dx (T x I).
  Matrix backward(const Cache& cache, const Matrix& dh_out);

  ParamList params();
  void init(Rng& rng);
};

// Stack of bidirectional LSTM layers with dropout between layers.
// hidden_total is the concatenated width (half per direction).
struct BiLstmStack {
  std::vector<LstmDir> fwd, bwd;
  int layers = 0;
  int input_dim = 0;
  int hidden_total = 0;
  double dropout = 0.0;

  BiLstmStack() = default;
  BiLstmStack(const std::string& name, int layers, int input_dim, int hidden_total,
              double dropout);

  struct Cache {
    std::vector<LstmDir::Cache> fwd, bwd;
    std::vector<Matrix> inputs;  // per-layer input after dropout
    std::vector<Matrix> masks;   // dropout masks (empty in eval mode)
  };

  Matrix forward(const Matrix& x, bool training, Rng* rng, Cache* cache) const;
  Matrix backward(Cache& cache, const Matrix& dout);

  ParamList params();
  void init(Rng& rng);
};

struct Linear {
  Param weight;  // out x in
  Param bias;    // out x 1

  Linear() = default;
  Linear(const std::string& name, long in, long out);

  Matrix forward(const Matrix& x) const;  // rows are samples
  Matrix backward(const Matrix& x, const Matrix& dout);
  Vector forward_vec(const Vector& x) const;
  Vector backward_vec(const Vector& x, const Vector& dout);

  ParamList params() { return {&weight, &bias}; }
  void init(Rng& rng);
};

// 1-d convolution over time with same-length zero padding.
struct Conv1d {
  Param kernel;  // out_ch x (k * in_ch); column index dt*in_ch + ic
  Param bias;    // out_ch x 1
  int in_ch = 0;
  int out_ch = 0;
  int k = 3;

  Conv1d() = default;
  Conv1d(const std::string& name, int in_ch, int out_ch, int k);

  Matrix forward(const Matrix& x) const;  // x: T x in_ch -> T x out_ch
  Matrix backward(const Matrix& x, const Matrix& dout);

  ParamList params() { return {&kernel, &bias}; }
  void init(Rng& rng);
};

}  // namespace rrdee::nn
