#pragma once

#include "dqld/rng.hpp"

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace dqld {

// Single-layer LSTM over a scalar input sequence with a linear read-out of the
// final hidden state, one output per action. Gate rows are stacked
// [input; forget; output; candidate], each `hidden` rows tall.
struct LstmParams {
    Eigen::MatrixXd w_x;  // 4H x 1
    Eigen::MatrixXd w_h;  // 4H x H
    Eigen::VectorXd b;    // 4H
    Eigen::MatrixXd w_y;  // A x H
    Eigen::VectorXd b_y;  // A

    static LstmParams zeros(int hidden, int n_actions);
    // Uniform in +-1/sqrt(hidden).
    static LstmParams random(int hidden, int n_actions, Rng &rng);

    int hidden() const { return static_cast<int>(w_h.cols()); }
    int n_actions() const { return static_cast<int>(w_y.rows()); }
    std::size_t size() const;

    // Flat order: w_x, w_h, b, w_y, b_y; matrices row-major.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    bool operator==(const LstmParams &o) const;
};

// Q-values after running the sequence from a zero state.
Eigen::VectorXd lstm_forward(std::span<const double> inputs, const LstmParams &p);

// One training sample: an input sequence, the action whose Q-value is fitted,
// and the regression label.
struct FitSample {
    std::vector<double> inputs;
    int action = 0;
    double label = 0.0;
};

// mean over samples of (Q(inputs)[action] - label)^2
double lstm_loss(std::span<const FitSample> batch, const LstmParams &p);

// Gradient of lstm_loss by backpropagation through time, shaped like p.
LstmParams lstm_gradients(std::span<const FitSample> batch, const LstmParams &p);

double gradient_norm(const LstmParams &g);

// p -= lr * g, with g rescaled to norm clip_norm first when it is larger.
// clip_norm <= 0 disables clipping.
void sgd_step(LstmParams &p, const LstmParams &g, double lr, double clip_norm);

} // namespace dqld
