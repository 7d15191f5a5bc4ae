#pragma once

#include "dqld/config.hpp"
#include "dqld/lstm.hpp"
#include "dqld/mac.hpp"
#include "dqld/rng.hpp"
#include "dqld/topology.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace dqld {

double sigm(double x);

// QoS reward in (0, 1). eMBB: sigm(sinr / sinr_qos). URLLC additionally scales
// the argument by d_qos / d_q, with d_q floored at d_q_floor (one TTI) so a
// packet that arrived this TTI does not divide by zero.
double reward(ServiceClass cls, double sinr_linear, double sinr_qos_linear, double d_q, double d_qos,
              double d_q_floor);

struct Experience {
    std::vector<int> state_seq;  // CQI history ending in s_t
    int action = 0;
    double reward = 0.0;
    std::vector<int> next_seq;   // history ending in s_{t+1}

    int state() const { return state_seq.back(); }
    int next_state() const { return next_seq.back(); }
};

// Ring buffer that overwrites the oldest entry once full.
class ReplayMemory {
public:
    explicit ReplayMemory(int capacity = 60);

    void push(Experience e);
    std::size_t size() const { return buffer_.size(); }
    int capacity() const { return capacity_; }
    // Oldest first.
    std::vector<Experience> contents() const;
    // Uniform without replacement.
    std::vector<Experience> sample(int batch, Rng &rng) const;

private:
    int capacity_;
    std::vector<Experience> buffer_;
    std::size_t head_ = 0;  // next slot to overwrite once full
};

// CQI (1..15) scaled into [1/15, 1].
std::vector<double> normalize_cqi(std::span<const int> seq);

// Epsilon-greedy over eligible action indices; greedy ties go to the lowest index.
// nullopt when nothing is eligible.
std::optional<int> select_action(const Eigen::VectorXd &q_values, std::span<const int> eligible, double epsilon,
                                 Rng &rng);

struct TrainStats {
    bool trained = false;
    bool synced = false;
    double loss = 0.0;
};

// One training step on a batch: labels move Q(s, a) a fraction q_step of the way
// toward r + discount * max_a' Q_target(s', a'); the loss is the mean squared
// error on taken actions and the update is one clipped SGD step.
double lstm_train_step(std::span<const Experience> batch, LstmParams &params, const LstmParams &target,
                       double lr, double discount, double q_step = 1.0, double clip_norm = 0.0);

// The per-beam deep Q-learning entity: main and target networks, replay memory
// and the CQI history of every (RBG, beam) link that forms its state.
class DqlAgent {
public:
    DqlAgent(const AgentConfig &cfg, int n_actions, int n_rbgs, Rng &rng);

    const LstmParams &main() const { return main_; }
    const LstmParams &target() const { return target_; }
    LstmParams &mutable_main();
    const ReplayMemory &replay() const { return replay_; }
    const AgentConfig &config() const { return cfg_; }

    // Q-values for a CQI history (cached until the next parameter change).
    const Eigen::VectorXd &q_values(const std::vector<int> &history);

    // State history of RBG k, seeding it with `fallback` when empty.
    const std::vector<int> &history(int rbg, int fallback);
    bool has_history(int rbg) const { return !history_[rbg].empty(); }
    // Appends the CQI fed back on RBG k and returns the new history.
    const std::vector<int> &observe(int rbg, int cqi);

    void remember(Experience e) { replay_.push(std::move(e)); }

    // Trains every train_interval TTIs when the replay memory holds a batch and
    // syncs the target every copy_interval TTIs.
    TrainStats maybe_train_and_sync(std::int64_t tti, Rng &rng);
    std::int64_t last_sync_tti() const { return last_sync_; }

private:
    AgentConfig cfg_;
    LstmParams main_;
    LstmParams target_;
    ReplayMemory replay_;
    std::vector<std::vector<int>> history_;
    std::unordered_map<std::uint64_t, Eigen::VectorXd> q_cache_;
    std::int64_t last_sync_ = 0;
};

struct DqldDecision {
    int rbg = 0;
    int action = 0;   // action index of the chosen user
    int user_id = 0;
    std::vector<int> state_seq;
};

struct DqldResult {
    Allocation allocation;
    std::vector<DqldDecision> decisions;
};

// For every free RBG in order: state = the (k, b) CQI history, action chosen
// epsilon-greedily among users whose pending bits exceed what they were already
// granted this TTI (all backlogged users once everyone is covered). With no
// backlogged user the allocation stays empty. fallback_cqi[k] seeds an empty history.
DqldResult dqld_schedule(std::span<const SchedUser> users, DqlAgent &agent, int n_rbgs,
                         const std::vector<bool> &blocked, std::span<const int> fallback_cqi, Rng &rng);

} // namespace dqld
