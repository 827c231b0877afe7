#include "l2ac/nn.hpp"

#include <cmath>
#include <string>

namespace l2ac {

namespace {

void check_dense_shapes(const Vec& x, const Tensor& W, const Tensor& b) {
    if (W.shape.size() != 2) {
        throw ShapeError("dense: W must be a matrix");
    }
    if (W.cols() != static_cast<int>(x.size())) {
        throw ShapeError("dense: W has " + std::to_string(W.cols()) +
                         " columns but x has " + std::to_string(x.size()) + " elements");
    }
    if (W.rows() != static_cast<int>(b.size())) {
        throw ShapeError("dense: W has " + std::to_string(W.rows()) +
                         " rows but b has " + std::to_string(b.size()) + " elements");
    }
}

} // namespace

Vec dense_forward(const Vec& x, const Tensor& W, const Tensor& b, DenseCache* cache) {
    check_dense_shapes(x, W, b);
    const int rows = W.rows();
    const int cols = W.cols();
    Vec y(rows);
    for (int r = 0; r < rows; ++r) {
        double acc = b.data[r];
        const double* w = &W.data[static_cast<size_t>(r) * cols];
        for (int c = 0; c < cols; ++c) acc += w[c] * x[c];
        y[r] = acc;
    }
    if (cache) cache->x = x;
    return y;
}

Vec dense_backward(const Vec& d_out, Tensor& W, Tensor& b, const DenseCache& cache) {
    const int rows = W.rows();
    const int cols = W.cols();
    if (static_cast<int>(d_out.size()) != rows) {
        throw ShapeError("dense backward: d_out has " + std::to_string(d_out.size()) +
                         " elements but W has " + std::to_string(rows) + " rows");
    }
    W.ensure_grad();
    b.ensure_grad();
    Vec dx(cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        const double d = d_out[r];
        b.grad[r] += d;
        double* wg = &W.grad[static_cast<size_t>(r) * cols];
        const double* w = &W.data[static_cast<size_t>(r) * cols];
        for (int c = 0; c < cols; ++c) {
            wg[c] += d * cache.x[c];
            dx[c] += d * w[c];
        }
    }
    return dx;
}

double sigmoid_scalar(double x) {
    // Branch on sign to avoid overflow in exp.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Vec activate(const Vec& x, Act kind) {
    Vec y(x.size());
    switch (kind) {
        case Act::relu:
            for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
        case Act::sigmoid:
            for (size_t i = 0; i < x.size(); ++i) y[i] = sigmoid_scalar(x[i]);
            break;
        case Act::tanh:
            for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
            break;
    }
    return y;
}

Vec activate_backward(const Vec& d_out, const Vec& y, Act kind) {
    if (d_out.size() != y.size()) {
        throw ShapeError("activation backward: gradient/output size mismatch");
    }
    Vec dx(y.size());
    switch (kind) {
        case Act::relu:
            for (size_t i = 0; i < y.size(); ++i) dx[i] = y[i] > 0.0 ? d_out[i] : 0.0;
            break;
        case Act::sigmoid:
            for (size_t i = 0; i < y.size(); ++i) dx[i] = d_out[i] * y[i] * (1.0 - y[i]);
            break;
        case Act::tanh:
            for (size_t i = 0; i < y.size(); ++i) dx[i] = d_out[i] * (1.0 - y[i] * y[i]);
            break;
    }
    return dx;
}

// --- LSTM -------------------------------------------------------------------

namespace {

struct GateDims {
    int hidden;
    int input;
};

GateDims check_lstm_shapes(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                           const LstmParamsView& w) {
    const int hidden4 = w.Wx.rows();
    if (hidden4 % 4 != 0) throw ShapeError("lstm: Wx row count must be 4*hidden");
    const int hidden = hidden4 / 4;
    const int input = w.Wx.cols();
    if (static_cast<int>(x.size()) != input) {
        throw ShapeError("lstm: x has " + std::to_string(x.size()) +
                         " elements but Wx has " + std::to_string(input) + " columns");
    }
    if (static_cast<int>(h_prev.size()) != hidden || static_cast<int>(c_prev.size()) != hidden) {
        throw ShapeError("lstm: h_prev/c_prev must have the configured hidden size " +
                         std::to_string(hidden));
    }
    if (w.Wh.rows() != hidden4 || w.Wh.cols() != hidden) {
        throw ShapeError("lstm: Wh must be [4*hidden x hidden]");
    }
    if (static_cast<int>(w.b.size()) != hidden4) {
        throw ShapeError("lstm: b must have 4*hidden elements");
    }
    return {hidden, input};
}

} // namespace

void lstm_step_forward(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                       const LstmParamsView& w, Vec& h_next, Vec& c_next,
                       LstmStepCache* cache) {
    const auto [hidden, input] = check_lstm_shapes(x, h_prev, c_prev, w);

    // Pre-activations for all four gate blocks: z = Wx x + Wh h_prev + b.
    Vec z(static_cast<size_t>(4) * hidden);
    for (int r = 0; r < 4 * hidden; ++r) {
        double acc = w.b.data[r];
        const double* wx = &w.Wx.data[static_cast<size_t>(r) * input];
        for (int c = 0; c < input; ++c) acc += wx[c] * x[c];
        const double* wh = &w.Wh.data[static_cast<size_t>(r) * hidden];
        for (int c = 0; c < hidden; ++c) acc += wh[c] * h_prev[c];
        z[r] = acc;
    }

    Vec gi(hidden), gf(hidden), gg(hidden), go(hidden);
    for (int j = 0; j < hidden; ++j) {
        gi[j] = sigmoid_scalar(z[j]);
        gf[j] = sigmoid_scalar(z[hidden + j]);
        gg[j] = std::tanh(z[2 * hidden + j]);
        go[j] = sigmoid_scalar(z[3 * hidden + j]);
    }

    c_next.resize(hidden);
    h_next.resize(hidden);
    Vec tanh_c(hidden);
    for (int j = 0; j < hidden; ++j) {
        c_next[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
        tanh_c[j] = std::tanh(c_next[j]);
        h_next[j] = go[j] * tanh_c[j];
    }

    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->c_prev = c_prev;
        cache->i = std::move(gi);
        cache->f = std::move(gf);
        cache->g = std::move(gg);
        cache->o = std::move(go);
        cache->c_next = c_next;
        cache->tanh_c = std::move(tanh_c);
    }
}

LstmStepGrads lstm_step_backward(const Vec& dh_next, const Vec& dc_next,
                                 const LstmParamsMut& w, const LstmStepCache& cache) {
    const int hidden = static_cast<int>(cache.h_prev.size());
    const int input = static_cast<int>(cache.x.size());
    w.Wx.ensure_grad();
    w.Wh.ensure_grad();
    w.b.ensure_grad();

    // Gate pre-activation gradients, packed i|f|g|o like the weights.
    Vec dz(static_cast<size_t>(4) * hidden);
    LstmStepGrads grads;
    grads.dx.assign(input, 0.0);
    grads.dh_prev.assign(hidden, 0.0);
    grads.dc_prev.assign(hidden, 0.0);

    for (int j = 0; j < hidden; ++j) {
        const double d_o = dh_next[j] * cache.tanh_c[j];
        const double dc = dc_next[j] +
                          dh_next[j] * cache.o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
        const double d_i = dc * cache.g[j];
        const double d_f = dc * cache.c_prev[j];
        const double d_g = dc * cache.i[j];
        dz[j] = d_i * cache.i[j] * (1.0 - cache.i[j]);
        dz[hidden + j] = d_f * cache.f[j] * (1.0 - cache.f[j]);
        dz[2 * hidden + j] = d_g * (1.0 - cache.g[j] * cache.g[j]);
        dz[3 * hidden + j] = d_o * cache.o[j] * (1.0 - cache.o[j]);
        grads.dc_prev[j] = dc * cache.f[j];
    }

    for (int r = 0; r < 4 * hidden; ++r) {
        const double d = dz[r];
        w.b.grad[r] += d;
        double* wxg = &w.Wx.grad[static_cast<size_t>(r) * input];
        const double* wx = &w.Wx.data[static_cast<size_t>(r) * input];
        for (int c = 0; c < input; ++c) {
            wxg[c] += d * cache.x[c];
            grads.dx[c] += d * wx[c];
        }
        double* whg = &w.Wh.grad[static_cast<size_t>(r) * hidden];
        const double* wh = &w.Wh.data[static_cast<size_t>(r) * hidden];
        for (int c = 0; c < hidden; ++c) {
            whg[c] += d * cache.h_prev[c];
            grads.dh_prev[c] += d * wh[c];
        }
    }
    return grads;
}

Vec bilstm_forward(const std::vector<Vec>& seq, const LstmParamsView& fw,
                   const LstmParamsView& bw, BiLstmCache* cache) {
    if (seq.empty()) throw EmptySequenceError("bilstm_reduce: empty input sequence");
    const int hidden = fw.Wx.rows() / 4;
    const size_t steps = seq.size();

    if (cache) {
        cache->fw_steps.assign(steps, LstmStepCache{});
        cache->bw_steps.assign(steps, LstmStepCache{});
    }

    Vec h_fw(hidden, 0.0), c_fw(hidden, 0.0);
    for (size_t t = 0; t < steps; ++t) {
        Vec h_next, c_next;
        lstm_step_forward(seq[t], h_fw, c_fw, fw, h_next, c_next,
                          cache ? &cache->fw_steps[t] : nullptr);
        h_fw = std::move(h_next);
        c_fw = std::move(c_next);
    }

    Vec h_bw(hidden, 0.0), c_bw(hidden, 0.0);
    for (size_t t = 0; t < steps; ++t) {
        const Vec& x = seq[steps - 1 - t];
        Vec h_next, c_next;
        lstm_step_forward(x, h_bw, c_bw, bw, h_next, c_next,
                          cache ? &cache->bw_steps[t] : nullptr);
        h_bw = std::move(h_next);
        c_bw = std::move(c_next);
    }

    Vec out;
    out.reserve(static_cast<size_t>(2) * hidden);
    out.insert(out.end(), h_fw.begin(), h_fw.end());
    out.insert(out.end(), h_bw.begin(), h_bw.end());
    return out;
}

std::vector<Vec> bilstm_backward(const Vec& d_out, const LstmParamsMut& fw,
                                 const LstmParamsMut& bw, const BiLstmCache& cache) {
    const size_t steps = cache.fw_steps.size();
    const int hidden = static_cast<int>(d_out.size()) / 2;
    const int input = static_cast<int>(cache.fw_steps[0].x.size());

    std::vector<Vec> d_seq(steps, Vec(input, 0.0));

    // Forward direction: backprop through time from the last step.
    Vec dh(d_out.begin(), d_out.begin() + hidden);
    Vec dc(hidden, 0.0);
    for (size_t t = steps; t-- > 0;) {
        LstmStepGrads g = lstm_step_backward(dh, dc, fw, cache.fw_steps[t]);
        for (int c = 0; c < input; ++c) d_seq[t][c] += g.dx[c];
        dh = std::move(g.dh_prev);
        dc = std::move(g.dc_prev);
    }

    // Backward direction: its step t consumed seq[steps-1-t].
    dh.assign(d_out.begin() + hidden, d_out.end());
    dc.assign(hidden, 0.0);
    for (size_t t = steps; t-- > 0;) {
        LstmStepGrads g = lstm_step_backward(dh, dc, bw, cache.bw_steps[t]);
        for (int c = 0; c < input; ++c) d_seq[steps - 1 - t][c] += g.dx[c];
        dh = std::move(g.dh_prev);
        dc = std::move(g.dc_prev);
    }
    return d_seq;
}

double weighted_bce_loss(double p, int label, double weight, double* d_p) {
    constexpr double kEps = 1e-7;
    const bool clamped = p < kEps || p > 1.0 - kEps;
    const double pc = p < kEps ? kEps : (p > 1.0 - kEps ? 1.0 - kEps : p);
    const double y = label != 0 ? 1.0 : 0.0;
    const double loss = -weight * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    if (d_p) {
        *d_p = clamped ? 0.0 : -weight * (y / pc - (1.0 - y) / (1.0 - pc));
    }
    return loss;
}

} // namespace l2ac
