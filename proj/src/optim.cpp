#include "a4nt/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace a4nt {

namespace {

bool all_finite(const Tensor& t) {
    for (Real v : t.values())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

bool rmsprop_step(std::span<Parameter* const> params, RmspropState& state) {
    if (state.accumulators.empty()) {
        state.accumulators.reserve(params.size());
        for (const Parameter* p : params) state.accumulators.emplace_back(p->value.shape());
    }
    if (state.accumulators.size() != params.size())
        throw ShapeError("rmsprop_step: state tracks " + std::to_string(state.accumulators.size()) +
                         " parameters, got " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = *params[i];
        if (p.grad.empty()) continue;
        if (!p.grad.same_shape(p.value) || !state.accumulators[i].same_shape(p.value))
            throw ShapeError("rmsprop_step: misaligned shapes for parameter " + p.name);
        if (!all_finite(p.grad)) return false;
    }
    const Real decay = state.decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (p.grad.empty()) continue;
        Tensor& acc = state.accumulators[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const Real g = p.grad[k];
            acc[k] = decay * acc[k] + (Real(1) - decay) * g * g;
            p.value[k] -= state.learning_rate * g / (std::sqrt(acc[k]) + state.epsilon);
        }
    }
    return true;
}

Real grad_norm(std::span<Parameter* const> params) {
    double total = 0.0;
    for (const Parameter* p : params)
        for (Real g : p->grad.values()) total += double(g) * double(g);
    return Real(std::sqrt(total));
}

Real clip_grad_norm(std::span<Parameter* const> params, Real max_norm) {
    const Real norm = grad_norm(params);
    if (std::isfinite(norm) && norm > max_norm && norm > Real(0)) {
        const Real k = max_norm / norm;
        for (Parameter* p : params)
            for (Real& g : p->grad.values()) g *= k;
    }
    return norm;
}

Rmsprop::Rmsprop(std::vector<Parameter*> params, Real learning_rate, Real clip_norm)
    : params_(std::move(params)), clip_norm_(clip_norm) {
    if (!(learning_rate > 0)) throw std::invalid_argument("Rmsprop: learning rate must be positive");
    state_.learning_rate = learning_rate;
}

void Rmsprop::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

bool Rmsprop::step() {
    if (clip_norm_ > 0) clip_grad_norm(params_, clip_norm_);
    return rmsprop_step(params_, state_);
}

}  // namespace a4nt
