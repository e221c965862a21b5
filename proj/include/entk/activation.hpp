#pragma once

#include "entk/common.hpp"

#include <cmath>

namespace entk {

enum class Activation { Linear, ReluNormalized, Tanh };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::ReluNormalized: return "relu_normalized";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "relu_normalized") return Activation::ReluNormalized;
    if (s == "tanh") return Activation::Tanh;
    throw DomainError("unknown activation: " + s);
}

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

// phi(h). relu_normalized is sqrt(2)*max(h,0): the sqrt(2) keeps
// <phi(u)^2> = q for u ~ N(0,q), so depth preserves feature norms.
inline double phi(Activation a, double h) {
    switch (a) {
        case Activation::Linear: return h;
        case Activation::ReluNormalized: return h > 0.0 ? kSqrt2 * h : 0.0;
        case Activation::Tanh: return std::tanh(h);
    }
    return 0.0;
}

// phi'(h); relu convention phi'(0) = 0 (Theta(0) = 0, measure-zero set).
inline double phi_dot(Activation a, double h) {
    switch (a) {
        case Activation::Linear: return 1.0;
        case Activation::ReluNormalized: return h > 0.0 ? kSqrt2 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(h);
            return 1.0 - t * t;
        }
    }
    return 0.0;
}

// phi''(h), needed by pathwise sensitivity integration. Zero a.e. for relu.
inline double phi_ddot(Activation a, double h) {
    switch (a) {
        case Activation::Linear: return 0.0;
        case Activation::ReluNormalized: return 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(h);
            return -2.0 * t * (1.0 - t * t);
        }
    }
    return 0.0;
}

struct ActEval {
    double value;
    double deriv;
};

// Value/derivative pair per the activation table.
inline ActEval activation_eval(Activation a, double h) {
    return ActEval{phi(a, h), phi_dot(a, h)};
}

}  // namespace entk
