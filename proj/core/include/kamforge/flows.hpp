#pragma once

#include <optional>
#include <vector>

#include "kamforge/jet.hpp"

namespace kamforge {

struct FlowOptions {
    double tol = 1e-12;        // local error tolerance
    double h_init = 0.05;
    double h_min = 1e-10;
    int max_steps = 100000;
    // optional escape guard: abort when domain_norm exceeds escape_norm
    const DomainSpec* guard = nullptr;
    double escape_norm = 1.0;
};

struct FlowEscapeError : std::runtime_error {
    double t_exit;
    explicit FlowEscapeError(double t)
        : std::runtime_error("flow escaped the domain at t = " + std::to_string(t)), t_exit(t) {}
};

// Time-t Hamiltonian flow of the jet S: rdot = -d_theta S, thetadot = d_r S,
// wdot = J grad_w S, integrated with an adaptive embedded Dormand-Prince 5(4).
PhasePoint flow_point(const JetFunction& S, double t, const PhasePoint& x0,
                      const FlowOptions& opt = {});

// Composition of time-1 flows of a generator list, applied first-to-last.
PhasePoint flow_composition(const std::vector<JetFunction>& gens, const PhasePoint& x0,
                            const FlowOptions& opt = {});

} // namespace kamforge
