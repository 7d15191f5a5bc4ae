#include "dqld/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dqld {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {
// sigm saturates to exactly 0 or 1 in double precision for |x| > ~37.
double open_unit(double r) { return std::clamp(r, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)); }
} // namespace

double reward(ServiceClass cls, double sinr_linear, double sinr_qos_linear, double d_q, double d_qos,
              double d_q_floor) {
    const double r_mbb = std::max(sinr_linear, 0.0) / sinr_qos_linear;
    if (cls == ServiceClass::Embb) return open_unit(sigm(r_mbb));
    const double r_llc = d_qos / std::max(d_q, d_q_floor);
    return open_unit(sigm(r_mbb * r_llc));
}

ReplayMemory::ReplayMemory(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("ReplayMemory: capacity must be positive");
    buffer_.reserve(static_cast<std::size_t>(capacity));
}

void ReplayMemory::push(Experience e) {
    if (static_cast<int>(buffer_.size()) < capacity_) {
        buffer_.push_back(std::move(e));
        return;
    }
    buffer_[head_] = std::move(e);
    head_ = (head_ + 1) % buffer_.size();
}

std::vector<Experience> ReplayMemory::contents() const {
    std::vector<Experience> out;
    out.reserve(buffer_.size());
    for (std::size_t i = 0; i < buffer_.size(); ++i) out.push_back(buffer_[(head_ + i) % buffer_.size()]);
    return out;
}

std::vector<Experience> ReplayMemory::sample(int batch, Rng &rng) const {
    if (batch < 0 || static_cast<std::size_t>(batch) > buffer_.size())
        throw std::invalid_argument("ReplayMemory::sample: batch larger than memory");
    // Partial Fisher-Yates over indices.
    std::vector<std::size_t> idx(buffer_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Experience> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
        const auto j = std::uniform_int_distribution<std::size_t>(static_cast<std::size_t>(i), idx.size() - 1)(rng);
        std::swap(idx[i], idx[j]);
        out.push_back(buffer_[idx[i]]);
    }
    return out;
}

std::vector<double> normalize_cqi(std::span<const int> seq) {
    std::vector<double> out(seq.size());
    std::transform(seq.begin(), seq.end(), out.begin(), [](int c) { return c / 15.0; });
    return out;
}

std::optional<int> select_action(const Eigen::VectorXd &q_values, std::span<const int> eligible, double epsilon,
                                 Rng &rng) {
    if (eligible.empty()) return std::nullopt;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < epsilon) {
        const auto i = std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng);
        return eligible[i];
    }
    int best = eligible.front();
    for (int a : eligible)
        if (q_values(a) > q_values(best) || (q_values(a) == q_values(best) && a < best)) best = a;
    return best;
}

double lstm_train_step(std::span<const Experience> batch, LstmParams &params, const LstmParams &target,
                       double lr, double discount, double q_step, double clip_norm) {
    if (batch.empty()) throw std::invalid_argument("lstm_train_step: empty batch");
    std::vector<FitSample> samples;
    samples.reserve(batch.size());
    for (const auto &e : batch) {
        FitSample s;
        s.inputs = normalize_cqi(e.state_seq);
        s.action = e.action;
        const double y = e.reward + discount * lstm_forward(normalize_cqi(e.next_seq), target).maxCoeff();
        const double q = lstm_forward(s.inputs, params)(e.action);
        s.label = q + q_step * (y - q);
        samples.push_back(std::move(s));
    }
    const double loss = lstm_loss(samples, params);
    sgd_step(params, lstm_gradients(samples, params), lr, clip_norm);
    return loss;
}

DqlAgent::DqlAgent(const AgentConfig &cfg, int n_actions, int n_rbgs, Rng &rng)
    : cfg_(cfg), main_(LstmParams::random(cfg.hidden_units, n_actions, rng)), target_(main_),
      replay_(cfg.replay_capacity), history_(static_cast<std::size_t>(n_rbgs)) {}

LstmParams &DqlAgent::mutable_main() {
    q_cache_.clear();
    return main_;
}

namespace {

std::optional<std::uint64_t> history_key(const std::vector<int> &h) {
    if (h.size() > 15) return std::nullopt;
    std::uint64_t key = h.size();
    for (std::size_t i = 0; i < h.size(); ++i) key |= static_cast<std::uint64_t>(h[i] & 0xF) << (4 + 4 * i);
    return key;
}

} // namespace

const Eigen::VectorXd &DqlAgent::q_values(const std::vector<int> &history) {
    const auto key = history_key(history);
    if (key) {
        if (auto it = q_cache_.find(*key); it != q_cache_.end()) return it->second;
        return q_cache_.emplace(*key, lstm_forward(normalize_cqi(history), main_)).first->second;
    }
    static thread_local Eigen::VectorXd scratch;
    scratch = lstm_forward(normalize_cqi(history), main_);
    return scratch;
}

const std::vector<int> &DqlAgent::history(int rbg, int fallback) {
    auto &h = history_.at(static_cast<std::size_t>(rbg));
    if (h.empty()) h.push_back(fallback);
    return h;
}

const std::vector<int> &DqlAgent::observe(int rbg, int cqi) {
    auto &h = history_.at(static_cast<std::size_t>(rbg));
    h.push_back(cqi);
    if (static_cast<int>(h.size()) > cfg_.history_len) h.erase(h.begin());
    return h;
}

TrainStats DqlAgent::maybe_train_and_sync(std::int64_t tti, Rng &rng) {
    TrainStats st;
    if (tti > 0 && tti % cfg_.train_interval == 0 && static_cast<int>(replay_.size()) >= cfg_.batch_size) {
        const auto batch = replay_.sample(cfg_.batch_size, rng);
        st.loss = lstm_train_step(batch, main_, target_, cfg_.network_lr, cfg_.discount, cfg_.learning_rate,
                                  cfg_.grad_clip);
        st.trained = true;
        q_cache_.clear();
    }
    if (tti > 0 && tti % cfg_.copy_interval == 0) {
        target_ = main_;
        last_sync_ = tti;
        st.synced = true;
    }
    return st;
}

DqldResult dqld_schedule(std::span<const SchedUser> users, DqlAgent &agent, int n_rbgs,
                         const std::vector<bool> &blocked, std::span<const int> fallback_cqi, Rng &rng) {
    DqldResult res{Allocation(n_rbgs), {}};
    std::vector<std::size_t> backlogged;
    for (std::size_t i = 0; i < users.size(); ++i)
        if (users[i].pending_bits > 0) backlogged.push_back(i);
    if (backlogged.empty()) return res;
    std::sort(backlogged.begin(), backlogged.end(),
              [&](std::size_t a, std::size_t b) { return users[a].action_index < users[b].action_index; });
    std::vector<std::int64_t> granted(users.size(), 0);

    std::vector<int> eligible;
    for (int k = 0; k < n_rbgs; ++k) {
        if (!blocked.empty() && blocked[k]) continue;
        // Users whose data is not yet covered by this TTI's grants; once all
        // are covered the rest of the band stays open to every backlogged user.
        eligible.clear();
        for (std::size_t i : backlogged)
            if (granted[i] < users[i].pending_bits) eligible.push_back(users[i].action_index);
        if (eligible.empty())
            for (std::size_t i : backlogged) eligible.push_back(users[i].action_index);

        const auto &hist = agent.history(k, fallback_cqi[k]);
        int action = eligible.front();
        if (eligible.size() > 1) action = *select_action(agent.q_values(hist), eligible, agent.config().epsilon, rng);
        const auto it = std::find_if(backlogged.begin(), backlogged.end(),
                                     [&](std::size_t i) { return users[i].action_index == action; });
        const std::size_t i = *it;
        granted[i] += users[i].tbs_bits.empty() ? 0 : users[i].tbs_bits[k];
        res.allocation.assign(k, users[i].user_id);
        res.decisions.push_back(DqldDecision{k, action, users[i].user_id, hist});
    }
    return res;
}

} // namespace dqld
