#pragma once

// Time-dependent generator A(t) = B + sum_k f_k(t) C_k.
//
// Op is either a dense Matrix (acting on state vectors, or an explicit
// superoperator) or a LiouvillianForm. Everything the propagators need is a
// linear combination of A at a few times, which collapses to one weighted sum
// of the stored parts.

#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cfet/liouvillian.hpp"

namespace cfet
{

using Modulation = std::function<double(double)>;

template <typename Op>
class Generator
{
public:
    struct Part
    {
        Op op;
        Modulation f;
    };

    Generator() = default;

    explicit Generator(Op constant, std::vector<Part> parts = {})
        : constant_(std::move(constant)), parts_(std::move(parts))
    {
        for (const auto& p : parts_) {
            if (state_dim(p.op) != state_dim(constant_))
                throw std::invalid_argument("generator parts must share one shape");
            if (!p.f)
                throw std::invalid_argument("generator part without modulation function");
        }
    }

    Generator& add(Op op, Modulation f)
    {
        parts_.push_back({std::move(op), std::move(f)});
        if (state_dim(parts_.back().op) != state_dim(constant_) || !parts_.back().f)
            throw std::invalid_argument("generator part does not match the constant part");
        return *this;
    }

    const Op& constant_part() const { return constant_; }
    const std::vector<Part>& modulated_parts() const { return parts_; }
    Index dim() const { return state_dim(constant_); }
    bool time_independent() const { return parts_.empty(); }

    /// f_k(t) for every modulated part.
    std::vector<double> modulations(double t) const
    {
        std::vector<double> out(parts_.size());
        for (std::size_t k = 0; k < parts_.size(); ++k) {
            out[k] = parts_[k].f(t);
            if (!std::isfinite(out[k]))
                throw std::domain_error("generator modulation is not finite at t = " + std::to_string(t));
        }
        return out;
    }

    /// b * B + sum_k c_k C_k
    Op assemble(double b, std::span<const double> c) const
    {
        if (c.size() != parts_.size())
            throw std::invalid_argument("assemble: wrong number of modulation weights");
        Op out = scaled(constant_, b);
        for (std::size_t k = 0; k < parts_.size(); ++k)
            add_scaled(out, c[k], parts_[k].op);
        return out;
    }

    Op eval(double t) const
    {
        const auto f = modulations(t);
        return assemble(1.0, f);
    }

    /// sum_i w_i A(t_i)
    Op combination(std::span<const double> weights, std::span<const double> times) const
    {
        if (weights.size() != times.size())
            throw std::invalid_argument("combination: weights and times differ in length");
        double b = 0.0;
        std::vector<double> c(parts_.size(), 0.0);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            b += weights[i];
            const auto f = modulations(times[i]);
            for (std::size_t k = 0; k < c.size(); ++k)
                c[k] += weights[i] * f[k];
        }
        return assemble(b, c);
    }

private:
    Op constant_;
    std::vector<Part> parts_;
};

} // namespace cfet
