#pragma once

#include <vector>

#include "l2ac/tensor.hpp"

namespace l2ac {

// Hand-rolled forward/backward passes for the handful of layers the
// meta-classifier needs. Each forward optionally fills a cache consumed by
// the matching backward; backwards accumulate into Tensor::grad.

struct DenseCache {
    Vec x;
};

// y = W x + b. W is [rows x len(x)], b is [rows].
Vec dense_forward(const Vec& x, const Tensor& W, const Tensor& b, DenseCache* cache = nullptr);

// Accumulates dW, db; returns dL/dx.
Vec dense_backward(const Vec& d_out, Tensor& W, Tensor& b, const DenseCache& cache);

enum class Act { relu, sigmoid, tanh };

Vec activate(const Vec& x, Act kind);

// `y` is the forward output; all three derivatives are expressible in it.
Vec activate_backward(const Vec& d_out, const Vec& y, Act kind);

double sigmoid_scalar(double x);

// --- LSTM cell -------------------------------------------------------------
//
// Gate packing: Wx is [4H x I], Wh is [4H x H], b is [4H], rows blocked in
// the fixed order input(i), forget(f), candidate(g), output(o).

struct LstmParamsView {
    const Tensor& Wx;
    const Tensor& Wh;
    const Tensor& b;
};

struct LstmParamsMut {
    Tensor& Wx;
    Tensor& Wh;
    Tensor& b;
};

struct LstmStepCache {
    Vec x, h_prev, c_prev;
    Vec i, f, g, o;
    Vec c_next, tanh_c;
};

void lstm_step_forward(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                       const LstmParamsView& w, Vec& h_next, Vec& c_next,
                       LstmStepCache* cache = nullptr);

struct LstmStepGrads {
    Vec dx, dh_prev, dc_prev;
};

LstmStepGrads lstm_step_backward(const Vec& dh_next, const Vec& dc_next,
                                 const LstmParamsMut& w, const LstmStepCache& cache);

// --- Bidirectional many-to-one reduction ------------------------------------

struct BiLstmCache {
    std::vector<LstmStepCache> fw_steps, bw_steps;
};

// Runs one pass in sequence order and one over the reversed sequence;
// returns concat(final forward hidden, final backward hidden), length 2H.
Vec bilstm_forward(const std::vector<Vec>& seq, const LstmParamsView& fw,
                   const LstmParamsView& bw, BiLstmCache* cache = nullptr);

// Returns dL/d(seq[t]) for every step.
std::vector<Vec> bilstm_backward(const Vec& d_out, const LstmParamsMut& fw,
                                 const LstmParamsMut& bw, const BiLstmCache& cache);

// --- Loss --------------------------------------------------------------------

// -w * (y ln p + (1-y) ln(1-p)) with p clamped to [1e-7, 1-1e-7] before the
// logs. When d_p is given it receives dL/dp (zero in the clamped region, so
// the analytic gradient matches the computed function exactly).
double weighted_bce_loss(double p, int label, double weight, double* d_p = nullptr);

} // namespace l2ac
