#include "burrow/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "burrow/rng.hpp"

namespace burrow {

std::vector<TensorInfo> tensors_for(const ModelConfig& cfg) {
  std::vector<TensorInfo> out;
  const int F = cfg.in_features, C = cfg.conv_channels, K = cfg.kernel, H = cfg.lstm_hidden;
  std::size_t off = 0;
  auto add = [&](std::string name, std::vector<int> dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    out.push_back({std::move(name), std::move(dims), off, n});
    off += n;
  };
  add("conv_w", {C, F, K});
  add("conv_b", {C});
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    const int in = l == 0 ? C : H;
    add("lstm" + std::to_string(l) + "_wx", {in, 4 * H});
    add("lstm" + std::to_string(l) + "_wh", {H, 4 * H});
    add("lstm" + std::to_string(l) + "_b", {4 * H});
  }
  add("head_w", {H});
  add("head_b", {1});
  return out;
}

namespace {

// ---- dense kernels ---------------------------------------------------------
// Row-major, accumulating. The k-broadcast order keeps the inner loop unit
// stride so it vectorizes, and the summation order is fixed (bit-reproducible).

// C (MxN) += A (MxK) * B (KxN)
void gemm_nn(int M, int N, int K, const double* A, int lda, const double* B, int ldb,
             double* C, int ldc) {
  for (int m = 0; m < M; ++m) {
    double* c = C + static_cast<std::size_t>(m) * ldc;
    const double* a = A + static_cast<std::size_t>(m) * lda;
    for (int k = 0; k < K; ++k) {
      const double av = a[k];
      const double* b = B + static_cast<std::size_t>(k) * ldb;
      for (int n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

// C (MxN) += A^T * B where A is (KxM), B is (KxN)
void gemm_tn(int M, int N, int K, const double* A, int lda, const double* B, int ldb,
             double* C, int ldc) {
  for (int k = 0; k < K; ++k) {
    const double* a = A + static_cast<std::size_t>(k) * lda;
    const double* b = B + static_cast<std::size_t>(k) * ldb;
    for (int m = 0; m < M; ++m) {
      const double av = a[m];
      double* c = C + static_cast<std::size_t>(m) * ldc;
      for (int n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kDegNorm = 180.0;

// parameter-gradient offsets into the flat layout
struct Offsets {
  std::size_t conv_w, conv_b, head_w, head_b;
  std::vector<std::size_t> wx, wh, b;
  explicit Offsets(const ModelConfig& cfg) {
    auto ts = tensors_for(cfg);
    conv_w = ts[0].offset;
    conv_b = ts[1].offset;
    for (int l = 0; l < cfg.lstm_layers; ++l) {
      wx.push_back(ts[2 + 3 * l].offset);
      wh.push_back(ts[3 + 3 * l].offset);
      b.push_back(ts[4 + 3 * l].offset);
    }
    head_w = ts[2 + 3 * cfg.lstm_layers].offset;
    head_b = ts[3 + 3 * cfg.lstm_layers].offset;
  }
};

struct SampleInput {
  std::span<const MotorCommand> prefix;
  std::uint64_t dropout_seed = 0;
};

struct Workspace {
  int B = 0, U = 0, Lc = 0, LcPad = 0;
  bool train = false;
  std::vector<int> len, read;

  std::vector<double> x;           // [B][LcPad][F]
  std::vector<double> conv_wt;     // [K][F][C]
  std::vector<double> conv_win;    // [pool][B][C]
  std::vector<std::uint8_t> relu_mask;  // [Lc][B][C]
  std::vector<double> pooled;      // [U][B][C]
  std::vector<std::uint8_t> argmax;     // [U][B][C] index within pool window
  std::vector<double> drop_mask;   // [U][B][C]

  std::vector<std::vector<double>> gates;   // per layer [U][B][4H] post-activation
  std::vector<std::vector<double>> cstate;  // per layer [U][B][H]
  std::vector<std::vector<double>> tanhc;
  std::vector<std::vector<double>> hstate;

  std::vector<double> y_norm;  // [B]

  // backward scratch
  std::vector<double> dgates, dh, dc, dh_prev;
  std::vector<double> dinj;   // [U][B][H] gradient into the lower LSTM layer
  std::vector<double> dpool;  // [U][B][C]
  std::vector<double> dconv;  // [pool][B][C]
  std::vector<double> dwt;    // [K][F][C]
  std::vector<double> wxT, whT;
  std::vector<double> dx;  // [B][LcPad][F]
};

void run_forward(const ModelParams& params, std::span<const SampleInput> samples,
                 Workspace& ws, bool train) {
  const ModelConfig& cfg = params.config();
  const int B = static_cast<int>(samples.size());
  const int F = cfg.in_features, C = cfg.conv_channels, K = cfg.kernel;
  const int H = cfg.lstm_hidden, G4 = 4 * H, halo = K / 2, P = cfg.pool;

  ws.B = B;
  ws.train = train;
  ws.len.resize(B);
  ws.read.resize(B);
  int max_read = 0;
  for (int b = 0; b < B; ++b) {
    int k = static_cast<int>(samples[b].prefix.size());
    if (k < 1 || k > cfg.max_len)
      throw std::invalid_argument("model: prefix length out of [1, max_len]");
    ws.len[b] = k;
    ws.read[b] = cfg.read_frame(k);
    max_read = std::max(max_read, ws.read[b]);
  }
  ws.U = max_read + 1;
  ws.Lc = ws.U * P;
  ws.LcPad = ws.Lc + halo;

  ws.x.assign(static_cast<std::size_t>(B) * ws.LcPad * F, 0.0);
  for (int b = 0; b < B; ++b) {
    const auto& prefix = samples[b].prefix;
    const int upto = std::min(ws.Lc, ws.len[b]);
    for (int t = 0; t < upto; ++t) {
      if (!prefix[t].finite()) throw std::invalid_argument("model: non-finite command");
      double* row = ws.x.data() + (static_cast<std::size_t>(b) * ws.LcPad + t) * F;
      for (int j = 0; j < 2 * kJointsPerAxis; ++j) row[j] = prefix[t].at(j) / kDegNorm;
    }
  }

  const std::size_t bc = static_cast<std::size_t>(B) * C;
  ws.conv_win.assign(static_cast<std::size_t>(P) * bc, 0.0);
  ws.relu_mask.assign(static_cast<std::size_t>(ws.Lc) * bc, 0);
  ws.pooled.assign(static_cast<std::size_t>(ws.U) * bc, 0.0);
  ws.argmax.assign(static_cast<std::size_t>(ws.U) * bc, 0);

  // transposed conv weights: wt[j][f][c] = conv_w[c][f][j]
  ws.conv_wt.assign(static_cast<std::size_t>(K) * F * C, 0.0);
  {
    auto w = params.conv_w();
    for (int c = 0; c < C; ++c)
      for (int f = 0; f < F; ++f)
        for (int j = 0; j < K; ++j)
          ws.conv_wt[(static_cast<std::size_t>(j) * F + f) * C + c] =
              w[(static_cast<std::size_t>(c) * F + f) * K + j];
  }
  auto conv_b = params.conv_b();

  for (int u = 0; u < ws.U; ++u) {
    for (int half = 0; half < P; ++half) {
      const int t = u * P + half;
      double* out = ws.conv_win.data() + static_cast<std::size_t>(half) * bc;
      for (int b = 0; b < B; ++b)
        std::memcpy(out + static_cast<std::size_t>(b) * C, conv_b.data(), C * sizeof(double));
      for (int j = 0; j < K; ++j) {
        const int tap = t + j - halo;
        if (tap < 0) continue;  // left zero padding
        gemm_nn(B, C, F, ws.x.data() + static_cast<std::size_t>(tap) * F, ws.LcPad * F,
                ws.conv_wt.data() + static_cast<std::size_t>(j) * F * C, C, out, C);
      }
      std::uint8_t* mask = ws.relu_mask.data() + static_cast<std::size_t>(t) * bc;
      for (std::size_t i = 0; i < bc; ++i) {
        mask[i] = out[i] > 0.0;
        if (!mask[i]) out[i] = 0.0;
      }
    }
    double* p = ws.pooled.data() + static_cast<std::size_t>(u) * bc;
    std::uint8_t* am = ws.argmax.data() + static_cast<std::size_t>(u) * bc;
    std::memcpy(p, ws.conv_win.data(), bc * sizeof(double));
    std::memset(am, 0, bc);
    for (int half = 1; half < P; ++half) {
      const double* w = ws.conv_win.data() + static_cast<std::size_t>(half) * bc;
      for (std::size_t i = 0; i < bc; ++i)
        if (w[i] > p[i]) {
          p[i] = w[i];
          am[i] = static_cast<std::uint8_t>(half);
        }
    }
  }

  if (train && cfg.dropout_p > 0.0) {
    ws.drop_mask.assign(static_cast<std::size_t>(ws.U) * bc, 1.0);
    const double keep = 1.0 - cfg.dropout_p;
    for (int b = 0; b < B; ++b) {
      Rng rng(samples[b].dropout_seed);
      for (int u = 0; u <= ws.read[b]; ++u) {
        double* m = ws.drop_mask.data() + (static_cast<std::size_t>(u) * B + b) * C;
        double* p = ws.pooled.data() + (static_cast<std::size_t>(u) * B + b) * C;
        for (int c = 0; c < C; ++c) {
          m[c] = rng.uniform() < keep ? 1.0 / keep : 0.0;
          p[c] *= m[c];
        }
      }
    }
  }

  ws.gates.resize(cfg.lstm_layers);
  ws.cstate.resize(cfg.lstm_layers);
  ws.tanhc.resize(cfg.lstm_layers);
  ws.hstate.resize(cfg.lstm_layers);
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    ws.gates[l].assign(static_cast<std::size_t>(ws.U) * B * G4, 0.0);
    ws.cstate[l].assign(static_cast<std::size_t>(ws.U) * B * H, 0.0);
    ws.tanhc[l].assign(static_cast<std::size_t>(ws.U) * B * H, 0.0);
    ws.hstate[l].assign(static_cast<std::size_t>(ws.U) * B * H, 0.0);

    const int in = params.lstm_in(l);
    auto wx = params.lstm_wx(l);
    auto wh = params.lstm_wh(l);
    auto bias = params.lstm_b(l);
    const double* input = l == 0 ? ws.pooled.data() : ws.hstate[l - 1].data();
    const int in_stride = l == 0 ? C : H;
    for (int u = 0; u < ws.U; ++u) {
      double* g = ws.gates[l].data() + static_cast<std::size_t>(u) * B * G4;
      for (int b = 0; b < B; ++b)
        std::memcpy(g + static_cast<std::size_t>(b) * G4, bias.data(), G4 * sizeof(double));
      gemm_nn(B, G4, in, input + static_cast<std::size_t>(u) * B * in_stride, in_stride,
              wx.data(), G4, g, G4);
      if (u > 0)
        gemm_nn(B, G4, H, ws.hstate[l].data() + static_cast<std::size_t>(u - 1) * B * H, H,
                wh.data(), G4, g, G4);
      double* cs = ws.cstate[l].data() + static_cast<std::size_t>(u) * B * H;
      double* tc = ws.tanhc[l].data() + static_cast<std::size_t>(u) * B * H;
      double* hs = ws.hstate[l].data() + static_cast<std::size_t>(u) * B * H;
      const double* cprev =
          u > 0 ? ws.cstate[l].data() + static_cast<std::size_t>(u - 1) * B * H : nullptr;
      for (int b = 0; b < B; ++b) {
        double* gb = g + static_cast<std::size_t>(b) * G4;
        for (int hh = 0; hh < H; ++hh) {
          double gi = sigmoid(gb[hh]);
          double gf = sigmoid(gb[H + hh]);
          double gg = std::tanh(gb[2 * H + hh]);
          double go = sigmoid(gb[3 * H + hh]);
          gb[hh] = gi;
          gb[H + hh] = gf;
          gb[2 * H + hh] = gg;
          gb[3 * H + hh] = go;
          std::size_t idx = static_cast<std::size_t>(b) * H + hh;
          double cv = gi * gg + (cprev ? gf * cprev[idx] : 0.0);
          cs[idx] = cv;
          tc[idx] = std::tanh(cv);
          hs[idx] = go * tc[idx];
        }
      }
    }
  }

  auto head_w = params.head_w();
  const auto& top = ws.hstate[cfg.lstm_layers - 1];
  ws.y_norm.assign(B, 0.0);
  for (int b = 0; b < B; ++b) {
    const double* h = top.data() + (static_cast<std::size_t>(ws.read[b]) * B + b) * H;
    double y = params.head_b();
    for (int hh = 0; hh < H; ++hh) y += head_w[hh] * h[hh];
    ws.y_norm[b] = y;
  }
}

// dy = d(loss)/d(y_norm) per sample. Adds parameter gradients into *grad
// (flat layout) when non-null; fills ws.dx when want_dx.
void run_backward(const ModelParams& params, Workspace& ws, std::span<const double> dy,
                  std::vector<double>* grad, bool want_dx) {
  const ModelConfig& cfg = params.config();
  const int B = ws.B, F = cfg.in_features, C = cfg.conv_channels, K = cfg.kernel;
  const int H = cfg.lstm_hidden, G4 = 4 * H, halo = K / 2, P = cfg.pool;
  const std::size_t bc = static_cast<std::size_t>(B) * C;
  const Offsets off(cfg);

  auto head_w = params.head_w();
  const auto& top = ws.hstate[cfg.lstm_layers - 1];
  if (grad) {
    double* ghw = grad->data() + off.head_w;
    double* ghb = grad->data() + off.head_b;
    for (int b = 0; b < B; ++b) {
      const double* h = top.data() + (static_cast<std::size_t>(ws.read[b]) * B + b) * H;
      for (int hh = 0; hh < H; ++hh) ghw[hh] += dy[b] * h[hh];
      *ghb += dy[b];
    }
  }

  ws.dgates.assign(static_cast<std::size_t>(B) * G4, 0.0);
  ws.dh.assign(static_cast<std::size_t>(B) * H, 0.0);
  ws.dc.assign(static_cast<std::size_t>(B) * H, 0.0);
  ws.dh_prev.assign(static_cast<std::size_t>(B) * H, 0.0);
  ws.dpool.assign(static_cast<std::size_t>(ws.U) * bc, 0.0);
  if (cfg.lstm_layers > 1)
    ws.dinj.assign(static_cast<std::size_t>(ws.U) * B * H, 0.0);

  for (int l = cfg.lstm_layers - 1; l >= 0; --l) {
    const int in = params.lstm_in(l);
    auto wx = params.lstm_wx(l);
    auto wh = params.lstm_wh(l);
    ws.wxT.assign(static_cast<std::size_t>(G4) * in, 0.0);
    ws.whT.assign(static_cast<std::size_t>(G4) * H, 0.0);
    for (int r = 0; r < in; ++r)
      for (int g = 0; g < G4; ++g)
        ws.wxT[static_cast<std::size_t>(g) * in + r] = wx[static_cast<std::size_t>(r) * G4 + g];
    for (int r = 0; r < H; ++r)
      for (int g = 0; g < G4; ++g)
        ws.whT[static_cast<std::size_t>(g) * H + r] = wh[static_cast<std::size_t>(r) * G4 + g];

    const bool topmost = l == cfg.lstm_layers - 1;
    const double* input = l == 0 ? ws.pooled.data() : ws.hstate[l - 1].data();
    const int in_stride = l == 0 ? C : H;

    std::fill(ws.dh.begin(), ws.dh.end(), 0.0);
    std::fill(ws.dc.begin(), ws.dc.end(), 0.0);

    double* gwx = grad ? grad->data() + off.wx[l] : nullptr;
    double* gwh = grad ? grad->data() + off.wh[l] : nullptr;
    double* gb = grad ? grad->data() + off.b[l] : nullptr;

    for (int u = ws.U - 1; u >= 0; --u) {
      if (topmost) {
        for (int b = 0; b < B; ++b)
          if (ws.read[b] == u) {
            double* dhb = ws.dh.data() + static_cast<std::size_t>(b) * H;
            for (int hh = 0; hh < H; ++hh) dhb[hh] += head_w[hh] * dy[b];
          }
      } else {
        const double* inj = ws.dinj.data() + static_cast<std::size_t>(u) * B * H;
        for (std::size_t i = 0; i < static_cast<std::size_t>(B) * H; ++i) ws.dh[i] += inj[i];
      }

      const double* g = ws.gates[l].data() + static_cast<std::size_t>(u) * B * G4;
      const double* tc = ws.tanhc[l].data() + static_cast<std::size_t>(u) * B * H;
      const double* cprev =
          u > 0 ? ws.cstate[l].data() + static_cast<std::size_t>(u - 1) * B * H : nullptr;
      for (int b = 0; b < B; ++b) {
        const double* gbp = g + static_cast<std::size_t>(b) * G4;
        double* dgb = ws.dgates.data() + static_cast<std::size_t>(b) * G4;
        double* dhb = ws.dh.data() + static_cast<std::size_t>(b) * H;
        double* dcb = ws.dc.data() + static_cast<std::size_t>(b) * H;
        for (int hh = 0; hh < H; ++hh) {
          std::size_t idx = static_cast<std::size_t>(b) * H + hh;
          double gi = gbp[hh], gf = gbp[H + hh], gg = gbp[2 * H + hh], go = gbp[3 * H + hh];
          double dho = dhb[hh];
          double dco = dcb[hh] + dho * go * (1.0 - tc[idx] * tc[idx]);
          double di = dco * gg;
          double df = cprev ? dco * cprev[idx] : 0.0;
          double dg = dco * gi;
          double doo = dho * tc[idx];
          dgb[hh] = di * gi * (1.0 - gi);
          dgb[H + hh] = df * gf * (1.0 - gf);
          dgb[2 * H + hh] = dg * (1.0 - gg * gg);
          dgb[3 * H + hh] = doo * go * (1.0 - go);
          dcb[hh] = dco * gf;
        }
      }

      if (grad) {
        gemm_tn(in, G4, B, input + static_cast<std::size_t>(u) * B * in_stride, in_stride,
                ws.dgates.data(), G4, gwx, G4);
        if (u > 0)
          gemm_tn(H, G4, B, ws.hstate[l].data() + static_cast<std::size_t>(u - 1) * B * H, H,
                  ws.dgates.data(), G4, gwh, G4);
        for (int b = 0; b < B; ++b) {
          const double* dgb = ws.dgates.data() + static_cast<std::size_t>(b) * G4;
          for (int gi = 0; gi < G4; ++gi) gb[gi] += dgb[gi];
        }
      }

      double* dinput = l == 0 ? ws.dpool.data() + static_cast<std::size_t>(u) * bc
                              : ws.dinj.data() + static_cast<std::size_t>(u) * B * H;
      if (l > 0) std::fill(dinput, dinput + static_cast<std::size_t>(B) * H, 0.0);
      gemm_nn(B, in, G4, ws.dgates.data(), G4, ws.wxT.data(), in, dinput, in);

      if (u > 0) {
        std::fill(ws.dh_prev.begin(), ws.dh_prev.end(), 0.0);
        gemm_nn(B, H, G4, ws.dgates.data(), G4, ws.whT.data(), H, ws.dh_prev.data(), H);
        std::swap(ws.dh, ws.dh_prev);
      }
    }
  }

  if (ws.train && cfg.dropout_p > 0.0)
    for (std::size_t i = 0; i < ws.dpool.size(); ++i) ws.dpool[i] *= ws.drop_mask[i];

  if (want_dx) ws.dx.assign(static_cast<std::size_t>(B) * ws.LcPad * F, 0.0);
  if (grad) ws.dwt.assign(static_cast<std::size_t>(K) * F * C, 0.0);
  ws.dconv.assign(static_cast<std::size_t>(P) * bc, 0.0);
  auto conv_w = params.conv_w();
  double* gcb = grad ? grad->data() + off.conv_b : nullptr;

  for (int u = 0; u < ws.U; ++u) {
    const double* dp = ws.dpool.data() + static_cast<std::size_t>(u) * bc;
    const std::uint8_t* am = ws.argmax.data() + static_cast<std::size_t>(u) * bc;
    std::fill(ws.dconv.begin(), ws.dconv.end(), 0.0);
    for (std::size_t i = 0; i < bc; ++i) ws.dconv[static_cast<std::size_t>(am[i]) * bc + i] = dp[i];
    for (int half = 0; half < P; ++half) {
      const int t = u * P + half;
      double* dc = ws.dconv.data() + static_cast<std::size_t>(half) * bc;
      const std::uint8_t* mask = ws.relu_mask.data() + static_cast<std::size_t>(t) * bc;
      for (std::size_t i = 0; i < bc; ++i)
        if (!mask[i]) dc[i] = 0.0;
      if (grad) {
        for (int b = 0; b < B; ++b) {
          const double* row = dc + static_cast<std::size_t>(b) * C;
          for (int c = 0; c < C; ++c) gcb[c] += row[c];
        }
        for (int j = 0; j < K; ++j) {
          const int tap = t + j - halo;
          if (tap < 0) continue;
          gemm_tn(F, C, B, ws.x.data() + static_cast<std::size_t>(tap) * F, ws.LcPad * F, dc,
                  C, ws.dwt.data() + static_cast<std::size_t>(j) * F * C, C);
        }
      }
      if (want_dx) {
        for (int b = 0; b < B; ++b) {
          const double* row = dc + static_cast<std::size_t>(b) * C;
          for (int j = 0; j < K; ++j) {
            const int tap = t + j - halo;
            if (tap < 0) continue;
            double* dxrow = ws.dx.data() + (static_cast<std::size_t>(b) * ws.LcPad + tap) * F;
            for (int c = 0; c < C; ++c) {
              const double dv = row[c];
              if (dv == 0.0) continue;
              const double* wrow = conv_w.data() + static_cast<std::size_t>(c) * F * K + j;
              for (int f = 0; f < F; ++f)
                dxrow[f] += dv * wrow[static_cast<std::size_t>(f) * K];
            }
          }
        }
      }
    }
  }
  if (grad) {
    double* gcw = grad->data() + off.conv_w;
    for (int c = 0; c < C; ++c)
      for (int f = 0; f < F; ++f)
        for (int j = 0; j < K; ++j)
          gcw[(static_cast<std::size_t>(c) * F + f) * K + j] +=
              ws.dwt[(static_cast<std::size_t>(j) * F + f) * C + c];
  }
}

}  // namespace

// ---- config / params -------------------------------------------------------

void ModelConfig::validate() const {
  if (max_len < 1) throw std::invalid_argument("ModelConfig: max_len must be >= 1");
  if (in_features != 2 * kJointsPerAxis)
    throw std::invalid_argument("ModelConfig: in_features must be 10");
  if (conv_channels < 1 || lstm_hidden < 1 || lstm_layers < 1)
    throw std::invalid_argument("ModelConfig: sizes must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("ModelConfig: kernel must be odd");
  if (pool < 1 || pool > 255 || max_len % pool != 0)
    throw std::invalid_argument("ModelConfig: pool must divide max_len");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw std::invalid_argument("ModelConfig: dropout_p must be in [0,1)");
  if (!(label_scale_cm > 0))
    throw std::invalid_argument("ModelConfig: label_scale_cm must be > 0");
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0))
    throw std::invalid_argument("TrainingConfig: learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("TrainingConfig: epochs must be >= 1");
  if (batch < 1) throw std::invalid_argument("TrainingConfig: batch must be >= 1");
  if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1 && eps > 0))
    throw std::invalid_argument("TrainingConfig: bad moment parameters");
}

ModelParams::ModelParams(const ModelConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  std::size_t total = 0;
  for (const auto& t : tensors_for(cfg)) total += t.size;
  params_.assign(total, 0.0);
}

std::vector<TensorInfo> ModelParams::tensors() const { return tensors_for(cfg_); }

std::span<double> ModelParams::conv_w() {
  auto ts = tensors_for(cfg_);
  return {params_.data() + ts[0].offset, ts[0].size};
}
std::span<double> ModelParams::conv_b() {
  auto ts = tensors_for(cfg_);
  return {params_.data() + ts[1].offset, ts[1].size};
}
std::span<double> ModelParams::lstm_wx(int l) {
  auto ts = tensors_for(cfg_);
  return {params_.data() + ts[2 + 3 * l].offset, ts[2 + 3 * l].size};
}
std::span<double> ModelParams::lstm_wh(int l) {
  auto ts = tensors_for(cfg_);
  return {params_.data() + ts[3 + 3 * l].offset, ts[3 + 3 * l].size};
}
std::span<double> ModelParams::lstm_b(int l) {
  auto ts = tensors_for(cfg_);
  return {params_.data() + ts[4 + 3 * l].offset, ts[4 + 3 * l].size};
}
std::span<double> ModelParams::head_w() {
  auto ts = tensors_for(cfg_);
  return {params_.data() + ts[2 + 3 * cfg_.lstm_layers].offset,
          ts[2 + 3 * cfg_.lstm_layers].size};
}
double& ModelParams::head_b() {
  auto ts = tensors_for(cfg_);
  return params_[ts[3 + 3 * cfg_.lstm_layers].offset];
}
std::span<const double> ModelParams::conv_w() const {
  return const_cast<ModelParams*>(this)->conv_w();
}
std::span<const double> ModelParams::conv_b() const {
  return const_cast<ModelParams*>(this)->conv_b();
}
std::span<const double> ModelParams::lstm_wx(int l) const {
  return const_cast<ModelParams*>(this)->lstm_wx(l);
}
std::span<const double> ModelParams::lstm_wh(int l) const {
  return const_cast<ModelParams*>(this)->lstm_wh(l);
}
std::span<const double> ModelParams::lstm_b(int l) const {
  return const_cast<ModelParams*>(this)->lstm_b(l);
}
std::span<const double> ModelParams::head_w() const {
  return const_cast<ModelParams*>(this)->head_w();
}
double ModelParams::head_b() const { return const_cast<ModelParams*>(this)->head_b(); }

ModelParams ModelParams::random_init(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p(cfg);
  Rng rng(Rng::mix(seed, stream::kInit));
  const int H = cfg.lstm_hidden;
  {
    auto w = p.conv_w();
    double s = std::sqrt(6.0 / (cfg.in_features * cfg.kernel + cfg.conv_channels * cfg.kernel));
    for (double& v : w) v = rng.uniform(-s, s);
  }
  double s = 1.0 / std::sqrt(static_cast<double>(H));
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    for (double& v : p.lstm_wx(l)) v = rng.uniform(-s, s);
    for (double& v : p.lstm_wh(l)) v = rng.uniform(-s, s);
    auto b = p.lstm_b(l);
    for (double& v : b) v = rng.uniform(-s, s);
    for (int hh = 0; hh < H; ++hh) b[H + hh] = 1.0;  // open forget gates at start
  }
  for (double& v : p.head_w()) v = rng.uniform(-s, s);
  p.head_b() = 0.0;
  return p;
}

// ---- public ops --------------------------------------------------------------

int make_training_pairs(const TrialRecord& record, TrainingSet& out) {
  const int n = static_cast<int>(record.ticks.size());
  if (n == 0) throw std::invalid_argument("make_training_pairs: empty record");
  TrainingSet::Trial trial;
  trial.commands.reserve(n);
  trial.labels_cm.reserve(n);
  for (const auto& tick : record.ticks) {
    trial.commands.push_back(tick.command);
    trial.labels_cm.push_back(tick.label_height_cm);
  }
  const int trial_idx = static_cast<int>(out.trials.size());
  out.trials.push_back(std::move(trial));
  for (int k = 1; k <= n; ++k) out.pairs.push_back({trial_idx, k});
  return n;
}

double forward(const ModelParams& params, std::span<const MotorCommand> prefix,
               bool train_mode, std::uint64_t dropout_seed) {
  Workspace ws;
  SampleInput s{prefix, dropout_seed};
  run_forward(params, {&s, 1}, ws, train_mode);
  return ws.y_norm[0] * params.config().label_scale_cm;
}

std::vector<double> param_grad(const ModelParams& params, const TrainingSet& data,
                               std::span<const TrainingSet::PairRef> batch) {
  if (batch.empty()) throw std::invalid_argument("param_grad: empty batch");
  Workspace ws;
  std::vector<SampleInput> samples(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) samples[b] = {data.prefix(batch[b]), 0};
  run_forward(params, samples, ws, /*train=*/false);
  const double scale = params.config().label_scale_cm;
  std::vector<double> dy(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    double target = data.label(batch[b]) / scale;
    dy[b] = 2.0 * (ws.y_norm[b] - target) / static_cast<double>(batch.size());
  }
  std::vector<double> grad(params.flat().size(), 0.0);
  run_backward(params, ws, dy, &grad, /*want_dx=*/false);
  return grad;
}

std::array<double, 10> input_grad(const ModelParams& params,
                                  std::span<const MotorCommand> prefix, int wrt_tick) {
  if (wrt_tick < 0 || wrt_tick >= static_cast<int>(prefix.size()))
    throw std::invalid_argument("input_grad: wrt_tick out of range");
  Workspace ws;
  SampleInput s{prefix, 0};
  run_forward(params, {&s, 1}, ws, /*train=*/false);
  double dy = 1.0;
  run_backward(params, ws, {&dy, 1}, nullptr, /*want_dx=*/true);
  const ModelConfig& cfg = params.config();
  std::array<double, 10> out{};
  const double scale = cfg.label_scale_cm / kDegNorm;
  const double* row = ws.dx.data() + static_cast<std::size_t>(wrt_tick) * cfg.in_features;
  for (int j = 0; j < 10; ++j) out[j] = row[j] * scale;
  return out;
}

void train_in_place(ModelParams& params, const TrainingSet& data,
                    std::span<const TrainingSet::PairRef> pairs, const TrainingConfig& tcfg,
                    std::vector<double>* epoch_loss) {
  tcfg.validate();
  if (pairs.empty()) throw std::invalid_argument("train: empty dataset");
  const std::size_t P = params.flat().size();
  std::vector<double> m(P, 0.0), v(P, 0.0), grad(P, 0.0);
  const double scale = params.config().label_scale_cm;
  long step = 0;

  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Workspace ws;
  std::vector<SampleInput> samples;
  std::vector<double> dy;

  const int batch = tcfg.batch;
  const std::size_t bucket_span = static_cast<std::size_t>(batch) * 16;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(tcfg.seed, stream::kShuffle, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform() * static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(order[i - 1], order[j]);
    }
    // bucket short spans by length so a batch spans similar prefix lengths;
    // composition stays random, BPTT work tracks the mean length
    for (std::size_t start = 0; start < order.size(); start += bucket_span) {
      std::size_t end = std::min(order.size(), start + bucket_span);
      std::stable_sort(order.begin() + start, order.begin() + end,
                       [&](int a, int b) { return pairs[a].len > pairs[b].len; });
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch));
      const int B = static_cast<int>(end - start);
      samples.resize(B);
      dy.resize(B);
      for (int b = 0; b < B; ++b) {
        const auto& pr = pairs[order[start + b]];
        samples[b].prefix = data.prefix(pr);
        samples[b].dropout_seed =
            Rng::mix(Rng::mix(tcfg.seed, stream::kDropout), static_cast<std::uint64_t>(epoch),
                     static_cast<std::uint64_t>(order[start + b]));
      }
      run_forward(params, samples, ws, /*train=*/true);
      for (int b = 0; b < B; ++b) {
        double target = data.label(pairs[order[start + b]]) / scale;
        double err = ws.y_norm[b] - target;
        loss_sum += err * err;
        dy[b] = 2.0 * err / static_cast<double>(B);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      run_backward(params, ws, dy, &grad, /*want_dx=*/false);

      ++step;
      const double bc1 = 1.0 - std::pow(tcfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(tcfg.beta2, static_cast<double>(step));
      double* p = params.flat().data();
      for (std::size_t i = 0; i < P; ++i) {
        m[i] = tcfg.beta1 * m[i] + (1.0 - tcfg.beta1) * grad[i];
        v[i] = tcfg.beta2 * v[i] + (1.0 - tcfg.beta2) * grad[i] * grad[i];
        p[i] -= tcfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + tcfg.eps);
      }
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(pairs.size()));
  }
}

TrainResult train(const TrainingSet& data, const ModelConfig& cfg, const TrainingConfig& tcfg) {
  TrainResult res;
  res.params = ModelParams::random_init(cfg, tcfg.seed);
  train_in_place(res.params, data, data.pairs, tcfg, &res.epoch_loss);
  return res;
}

}  // namespace burrow
