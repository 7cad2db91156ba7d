#pragma once

#include <string>
#include <vector>

namespace kovtop {

/// Central principal moments of a body and its mass.
struct InertiaTriple {
    double A1 = 0, B1 = 0, C1 = 0;
    double M = 1;
};

/// Mount point on the first central axis and the resulting moments at the mount.
struct MountSpec {
    double a = 0;
    double b = 0;
    double c = 0;
    double A = 0, B = 0, C = 0;
};

struct MountReport {
    double defect_B = 0;  ///< B1 + M a^2 - A1
    double defect_C = 0;  ///< C1 + M a^2 - A1/2
    double products_of_inertia = 0;  ///< largest |D'|, |E'|, |F'| at the mount
    bool kovalevskaya = false;  ///< A = B = 2C and center of gravity on the first axis
    std::vector<std::string> witnesses;  ///< reasons an off-axis mount cannot work
};

MountSpec design_mount(const InertiaTriple& t, double rel_tol = 1e-10);

MountReport verify_mount(const InertiaTriple& t, const MountSpec& spec);

}  // namespace kovtop
