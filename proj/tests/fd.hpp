#pragma once
// Central finite differences against tape gradients (64-bit build only).

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "a4nt/tape.hpp"

namespace fd {

struct Result {
    double max_rel_error = 0;
    double max_abs_grad = 0;
    std::size_t checked = 0;
    std::string worst;
};

inline double rel_error(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

/// `build` records a scalar loss on a fresh tape, binding `params` itself.
inline Result check(const std::vector<a4nt::Parameter*>& params, const std::function<a4nt::Var(a4nt::Tape&)>& build,
                    double h = 1e-5) {
    for (auto* p : params) p->zero_grad();
    {
        a4nt::Tape tape;
        tape.backward(build(tape));
    }
    auto eval = [&] {
        a4nt::Tape tape;
        return double(tape.value(build(tape))[0]);
    };
    Result r;
    for (auto* p : params) {
        const a4nt::Tensor analytic = p->grad.empty() ? a4nt::Tensor(p->value.shape()) : p->grad;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const a4nt::Real keep = p->value[i];
            p->value[i] = keep + h;
            const double up = eval();
            p->value[i] = keep - h;
            const double down = eval();
            p->value[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double e = rel_error(double(analytic[i]), numeric);
            r.max_abs_grad = std::max(r.max_abs_grad, std::abs(double(analytic[i])));
            ++r.checked;
            if (e > r.max_rel_error) {
                r.max_rel_error = e;
                r.worst = p->name + "[" + std::to_string(i) + "] analytic " + std::to_string(double(analytic[i])) +
                          " numeric " + std::to_string(numeric);
            }
        }
    }
    return r;
}

/// Refills every parameter uniformly in [-scale, scale].
inline void randomize(const std::vector<a4nt::Parameter*>& params, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto* p : params)
        for (auto& v : p->value.values()) v = a4nt::Real(u(rng));
}

inline a4nt::Parameter random_param(const std::string& name, std::size_t rows, std::size_t cols, std::uint64_t seed,
                                    double lo = -1, double hi = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    a4nt::Tensor t = a4nt::Tensor::matrix(rows, cols);
    for (auto& v : t.values()) v = a4nt::Real(u(rng));
    return a4nt::Parameter(name, t);
}

}  // namespace fd
