#pragma once

#include <span>
#include <vector>

#include "a4nt/tensor.hpp"

namespace a4nt {

/// Per-parameter mean-square accumulators for RMSprop.
struct RmspropState {
    std::vector<Tensor> accumulators;
    Real learning_rate = Real(1e-3);
    Real decay = Real(0.9);
    Real epsilon = Real(1e-8);
};

/// One RMSprop update, elementwise:
///   acc <- decay * acc + (1 - decay) * g^2
///   p   <- p - lr * g / (sqrt(acc) + epsilon)
/// Accumulators are created on first use. Returns false and leaves params and
/// state untouched when any gradient entry is non-finite.
[[nodiscard]] bool rmsprop_step(std::span<Parameter* const> params, RmspropState& state);

/// Global L2 norm over all gradients.
Real grad_norm(std::span<Parameter* const> params);

/// Scales gradients so their global norm is at most max_norm; returns the
/// norm before clipping.
Real clip_grad_norm(std::span<Parameter* const> params, Real max_norm);

/// Owns the parameter list of one model (or model pair) and its RMSprop
/// state; clips the global gradient norm before each update.
class Rmsprop {
public:
    Rmsprop() = default;
    Rmsprop(std::vector<Parameter*> params, Real learning_rate, Real clip_norm = Real(5));

    void zero_grad();
    /// Clips, then applies one update. Returns false on non-finite gradients.
    [[nodiscard]] bool step();

    Real learning_rate() const { return state_.learning_rate; }
    void set_learning_rate(Real lr) { state_.learning_rate = lr; }
    const RmspropState& state() const { return state_; }
    RmspropState& state() { return state_; }
    std::span<Parameter* const> params() const { return params_; }

private:
    std::vector<Parameter*> params_;
    RmspropState state_;
    Real clip_norm_ = Real(5);
};

}  // namespace a4nt
