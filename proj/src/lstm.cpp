#include "dqld/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace dqld {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct StepCache {
    double x = 0.0;
    Eigen::VectorXd i, f, o, g, c, h, c_prev, h_prev;
};

void run(std::span<const double> inputs, const LstmParams &p, std::vector<StepCache> *cache, Eigen::VectorXd &h_out) {
    const int H = p.hidden();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd z(4 * H);
    for (double x : inputs) {
        z.noalias() = p.w_x.col(0) * x + p.w_h * h + p.b;
        StepCache s;
        s.x = x;
        s.i = z.segment(0, H).unaryExpr(&sigmoid);
        s.f = z.segment(H, H).unaryExpr(&sigmoid);
        s.o = z.segment(2 * H, H).unaryExpr(&sigmoid);
        s.g = z.segment(3 * H, H).array().tanh();
        s.c_prev = c;
        s.h_prev = h;
        c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
        h = s.o.cwiseProduct(c.array().tanh().matrix());
        if (cache) {
            s.c = c;
            s.h = h;
            cache->push_back(std::move(s));
        }
    }
    h_out = std::move(h);
}

template <typename F>
void for_each_block(LstmParams &p, F &&f) {
    f(p.w_x);
    f(p.w_h);
    f(p.b);
    f(p.w_y);
    f(p.b_y);
}

} // namespace

LstmParams LstmParams::zeros(int hidden, int n_actions) {
    if (hidden < 1 || n_actions < 1) throw std::invalid_argument("LstmParams: sizes must be positive");
    LstmParams p;
    p.w_x = Eigen::MatrixXd::Zero(4 * hidden, 1);
    p.w_h = Eigen::MatrixXd::Zero(4 * hidden, hidden);
    p.b = Eigen::VectorXd::Zero(4 * hidden);
    p.w_y = Eigen::MatrixXd::Zero(n_actions, hidden);
    p.b_y = Eigen::VectorXd::Zero(n_actions);
    return p;
}

LstmParams LstmParams::random(int hidden, int n_actions, Rng &rng) {
    LstmParams p = zeros(hidden, n_actions);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u(-bound, bound);
    // Row-major fill order so the draw sequence matches flatten().
    std::vector<double> flat(p.size());
    for (auto &v : flat) v = u(rng);
    p.assign(flat);
    return p;
}

std::size_t LstmParams::size() const {
    return static_cast<std::size_t>(w_x.size() + w_h.size() + b.size() + w_y.size() + b_y.size());
}

std::vector<double> LstmParams::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    auto push = [&out](const auto &m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    };
    push(w_x);
    push(w_h);
    push(b);
    push(w_y);
    push(b_y);
    return out;
}

void LstmParams::assign(std::span<const double> flat) {
    if (flat.size() != size()) throw std::invalid_argument("LstmParams::assign: size mismatch");
    std::size_t i = 0;
    for_each_block(*this, [&](auto &m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[i++];
    });
}

bool LstmParams::operator==(const LstmParams &o) const {
    return w_x == o.w_x && w_h == o.w_h && b == o.b && w_y == o.w_y && b_y == o.b_y;
}

Eigen::VectorXd lstm_forward(std::span<const double> inputs, const LstmParams &p) {
    if (inputs.empty()) throw std::invalid_argument("lstm_forward: empty sequence");
    Eigen::VectorXd h;
    run(inputs, p, nullptr, h);
    return p.w_y * h + p.b_y;
}

double lstm_loss(std::span<const FitSample> batch, const LstmParams &p) {
    if (batch.empty()) throw std::invalid_argument("lstm_loss: empty batch");
    double total = 0.0;
    for (const auto &s : batch) {
        const double e = lstm_forward(s.inputs, p)(s.action) - s.label;
        total += e * e;
    }
    return total / static_cast<double>(batch.size());
}

LstmParams lstm_gradients(std::span<const FitSample> batch, const LstmParams &p) {
    if (batch.empty()) throw std::invalid_argument("lstm_gradients: empty batch");
    const int H = p.hidden();
    LstmParams g = LstmParams::zeros(H, p.n_actions());
    std::vector<StepCache> cache;
    Eigen::VectorXd h_last;
    Eigen::VectorXd dz(4 * H);
    for (const auto &s : batch) {
        if (s.inputs.empty()) throw std::invalid_argument("lstm_gradients: empty sequence");
        cache.clear();
        run(s.inputs, p, &cache, h_last);
        const double q = p.w_y.row(s.action).dot(h_last) + p.b_y(s.action);
        const double dq = 2.0 * (q - s.label) / static_cast<double>(batch.size());

        g.w_y.row(s.action) += dq * h_last.transpose();
        g.b_y(s.action) += dq;
        Eigen::VectorXd dh = dq * p.w_y.row(s.action).transpose();
        Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);

        for (auto it = cache.rbegin(); it != cache.rend(); ++it) {
            const auto &st = *it;
            const Eigen::ArrayXd tanh_c = st.c.array().tanh();
            const Eigen::ArrayXd d_o = dh.array() * tanh_c;
            dc.array() += dh.array() * st.o.array() * (1.0 - tanh_c.square());
            const Eigen::ArrayXd d_i = dc.array() * st.g.array();
            const Eigen::ArrayXd d_g = dc.array() * st.i.array();
            const Eigen::ArrayXd d_f = dc.array() * st.c_prev.array();

            dz.segment(0, H) = (d_i * st.i.array() * (1.0 - st.i.array())).matrix();
            dz.segment(H, H) = (d_f * st.f.array() * (1.0 - st.f.array())).matrix();
            dz.segment(2 * H, H) = (d_o * st.o.array() * (1.0 - st.o.array())).matrix();
            dz.segment(3 * H, H) = (d_g * (1.0 - st.g.array().square())).matrix();

            g.w_x.col(0) += dz * st.x;
            g.w_h.noalias() += dz * st.h_prev.transpose();
            g.b += dz;
            dh.noalias() = p.w_h.transpose() * dz;
            dc = dc.cwiseProduct(st.f);
        }
    }
    return g;
}

double gradient_norm(const LstmParams &g) {
    return std::sqrt(g.w_x.squaredNorm() + g.w_h.squaredNorm() + g.b.squaredNorm() + g.w_y.squaredNorm() +
                     g.b_y.squaredNorm());
}

void sgd_step(LstmParams &p, const LstmParams &g, double lr, double clip_norm) {
    double scale = lr;
    const double norm = gradient_norm(g);
    if (clip_norm > 0.0 && norm > clip_norm) scale *= clip_norm / norm;
    p.w_x -= scale * g.w_x;
    p.w_h -= scale * g.w_h;
    p.b -= scale * g.b;
    p.w_y -= scale * g.w_y;
    p.b_y -= scale * g.b_y;
}

} // namespace dqld
