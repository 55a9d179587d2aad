#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "burrow/gait.hpp"
#include "burrow/simenv.hpp"

namespace burrow {

// Depth predictor: 1D convolution over the command sequence, ReLU, max-pool,
// dropout, stacked LSTMs, affine head. Consumes the commands issued so far
// (left-aligned, zero-padded) and predicts the body height after executing
// them. All math is double precision, in-repo, with exact reverse-mode
// gradients for both parameters and inputs.
struct ModelConfig {
  int max_len = 130;        // maximum prefix length, ticks
  int in_features = 10;     // 5 yaw + 5 pitch, normalized by 1/180
  int conv_channels = 32;
  int kernel = 5;           // odd; zero-padded "same"
  int pool = 2;             // window == stride
  double dropout_p = 0.2;   // applied to pooled activations in train mode
  int lstm_layers = 2;
  int lstm_hidden = 64;
  double label_scale_cm = 40.0;  // output denormalization (env surface height)

  int pooled_len() const { return max_len / pool; }
  // last pooled frame containing real data for a prefix of length k
  int read_frame(int k) const { return (k + pool - 1) / pool - 1; }
  void validate() const;
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  int epochs = 6;
  int batch = 64;
  std::uint64_t seed = 0;
  double beta1 = 0.9;   // adaptive-moment decay rates
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

struct TensorInfo {
  std::string name;
  std::vector<int> dims;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Named-tensor layout of the flat parameter buffer for a config.
std::vector<TensorInfo> tensors_for(const ModelConfig& cfg);

// All weights in one flat buffer with a named-tensor overlay derived from the
// config. Gate columns are ordered input, forget, cell, output.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelConfig& cfg);

  static ModelParams zeros(const ModelConfig& cfg) { return ModelParams(cfg); }
  static ModelParams random_init(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::span<double> flat() { return params_; }
  std::span<const double> flat() const { return params_; }
  std::vector<TensorInfo> tensors() const;

  // tensor views
  std::span<double> conv_w();              // [channels][in_features][kernel]
  std::span<double> conv_b();              // [channels]
  std::span<double> lstm_wx(int layer);    // [in_l][4H]
  std::span<double> lstm_wh(int layer);    // [H][4H]
  std::span<double> lstm_b(int layer);     // [4H]
  std::span<double> head_w();              // [H]
  double& head_b();
  std::span<const double> conv_w() const;
  std::span<const double> conv_b() const;
  std::span<const double> lstm_wx(int layer) const;
  std::span<const double> lstm_wh(int layer) const;
  std::span<const double> lstm_b(int layer) const;
  std::span<const double> head_w() const;
  double head_b() const;

  int lstm_in(int layer) const {
    return layer == 0 ? cfg_.conv_channels : cfg_.lstm_hidden;
  }

 private:
  ModelConfig cfg_;
  std::vector<double> params_;
};

// Training corpus: command sequences with per-tick height labels, plus the
// flat list of (trial, prefix length) pairs referencing them.
struct TrainingSet {
  struct Trial {
    std::vector<MotorCommand> commands;
    std::vector<double> labels_cm;
  };
  struct PairRef {
    int trial = 0;
    int len = 0;  // prefix = commands[0..len), label = labels_cm[len-1]
  };

  std::vector<Trial> trials;
  std::vector<PairRef> pairs;

  std::span<const MotorCommand> prefix(const PairRef& p) const {
    return {trials[p.trial].commands.data(), static_cast<std::size_t>(p.len)};
  }
  double label(const PairRef& p) const { return trials[p.trial].labels_cm[p.len - 1]; }
};

// One (prefix, label) pair per tick of the record; returns the number added.
int make_training_pairs(const TrialRecord& record, TrainingSet& out);

// Predicted height in cm for a command prefix. train_mode enables dropout,
// seeded by dropout_seed; inference is deterministic and pure.
double forward(const ModelParams& params, std::span<const MotorCommand> prefix,
               bool train_mode = false, std::uint64_t dropout_seed = 0);

// Exact gradient of the batch MSE (normalized height) with respect to every
// parameter; same layout as ModelParams::flat().
std::vector<double> param_grad(const ModelParams& params, const TrainingSet& data,
                               std::span<const TrainingSet::PairRef> batch);

// Gradient of the predicted height (cm) with respect to the ten angles of
// one command in the prefix, in cm per degree.
std::array<double, 10> input_grad(const ModelParams& params,
                                  std::span<const MotorCommand> prefix, int wrt_tick);

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean MSE on normalized height, per epoch
};

// Mini-batch adaptive-moment training with per-epoch seeded shuffling and
// length-bucketed batches; deterministic given the seed.
TrainResult train(const TrainingSet& data, const ModelConfig& cfg,
                  const TrainingConfig& tcfg);

// Continue training existing params (shared path with train()).
void train_in_place(ModelParams& params, const TrainingSet& data,
                    std::span<const TrainingSet::PairRef> pairs, const TrainingConfig& tcfg,
                    std::vector<double>* epoch_loss);

void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace burrow
