#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "burrow/model.hpp"

namespace burrow {

namespace {

constexpr const char* kMagic = "burrow-params v1";

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("load_params: " + msg); }

}  // namespace

void save_params(const ModelParams& params, const std::string& path) {
  if (params.flat().empty()) throw std::invalid_argument("save_params: empty parameter set");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_params: cannot open " + path);
  const ModelConfig& cfg = params.config();
  out << kMagic << "\n";
  out << "max_len " << cfg.max_len << "\n";
  out << "in_features " << cfg.in_features << "\n";
  out << "conv_channels " << cfg.conv_channels << "\n";
  out << "kernel " << cfg.kernel << "\n";
  out << "pool " << cfg.pool << "\n";
  out << "dropout_p " << fmt17(cfg.dropout_p) << "\n";
  out << "lstm_layers " << cfg.lstm_layers << "\n";
  out << "lstm_hidden " << cfg.lstm_hidden << "\n";
  out << "label_scale_cm " << fmt17(cfg.label_scale_cm) << "\n";
  auto flat = params.flat();
  for (const auto& t : params.tensors()) {
    out << "tensor " << t.name;
    for (int d : t.dims) out << " " << d;
    out << "\n";
    for (std::size_t i = 0; i < t.size; ++i) {
      out << fmt17(flat[t.offset + i]);
      out << ((i + 1) % 8 == 0 || i + 1 == t.size ? "\n" : " ");
    }
  }
  out << "end\n";
  if (!out) throw std::runtime_error("save_params: write failed for " + path);
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) fail("bad header in " + path);

  ModelConfig cfg;
  auto read_kv = [&](const char* key, auto& field) {
    std::string k;
    if (!(in >> k) || k != key) fail(std::string("expected key '") + key + "'");
    if (!(in >> field)) fail(std::string("bad value for '") + key + "'");
  };
  read_kv("max_len", cfg.max_len);
  read_kv("in_features", cfg.in_features);
  read_kv("conv_channels", cfg.conv_channels);
  read_kv("kernel", cfg.kernel);
  read_kv("pool", cfg.pool);
  read_kv("dropout_p", cfg.dropout_p);
  read_kv("lstm_layers", cfg.lstm_layers);
  read_kv("lstm_hidden", cfg.lstm_hidden);
  read_kv("label_scale_cm", cfg.label_scale_cm);
  cfg.validate();

  ModelParams params(cfg);
  auto flat = params.flat();
  for (const auto& t : tensors_for(cfg)) {
    std::string word, name;
    if (!(in >> word) || word != "tensor") fail("missing tensor " + t.name);
    if (!(in >> name) || name != t.name)
      fail("expected tensor " + t.name + ", found '" + name + "'");
    for (std::size_t d = 0; d < t.dims.size(); ++d) {
      int dim = 0;
      if (!(in >> dim) || dim != t.dims[d]) fail("shape mismatch in tensor " + t.name);
    }
    for (std::size_t i = 0; i < t.size; ++i)
      if (!(in >> flat[t.offset + i])) fail("truncated data in tensor " + t.name);
  }
  std::string tail;
  if (!(in >> tail) || tail != "end") fail("missing end marker");
  return params;
}

}  // namespace burrow
