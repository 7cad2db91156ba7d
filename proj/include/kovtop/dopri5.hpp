#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace kovtop {

struct Dopri5Options {
    double rtol = 1e-10;
    double atol = 1e-10;
    bool exact_sampling = false;
    long max_steps = 100000000;
};

struct Dopri5Result {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> y;
    long accepted = 0;
    long rejected = 0;
};

using OdeRhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;
using StepHook = std::function<void(Eigen::VectorXd&)>;

// Samples are reported at `samples`, which must be monotone in the direction of t1.
// `hook` runs on the state after every accepted step (projection, for instance).
Dopri5Result dopri5(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                    const std::vector<double>& samples, const Dopri5Options& opt,
                    const StepHook& hook = {});

}  // namespace kovtop
