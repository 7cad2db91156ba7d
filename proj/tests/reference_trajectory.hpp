#pragma once

#include "kovtop/euler_poisson.hpp"

namespace kovtop::testing {

constexpr double ref_l1 = 2.0, ref_l = 0.3, ref_c0 = 0.5, ref_k = 1.0;

/// Four-real-root trajectory sampled every 1e-3 on [0, t_end]; built once per process.
inline const Trajectory& reference_trajectory()
{
    static const Trajectory tr = [] {
        const MotionState s0 = state_from_invariants(ref_c0, IntegralSet{ref_l1, ref_l, ref_k * ref_k, 1.0}, 1);
        IntegrateOptions o;
        o.tol = 1e-12;
        o.sample_step = 1e-3;
        o.exact_sampling = true;
        return integrate_kovalevskaya(ref_c0, s0, 20.0, o);
    }();
    return tr;
}

}  // namespace kovtop::testing
