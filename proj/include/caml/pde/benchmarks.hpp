#pragma once

#include <memory>
#include <string>
#include <vector>

#include "caml/pde/problem.hpp"

namespace caml::pde {

/// Laplace equation on the unit square: Dirichlet 100 on x=0 and y=0,
/// outward flux −15 on x=1 and y=1.
std::unique_ptr<Problem> heat_problem();

/// Truncated Fourier series of the heat benchmark (20 odd modes).
double heat_exact(double x, double y);

/// Δu = f with large-amplitude manufactured Dirichlet data.
std::unique_ptr<Problem> poisson_problem();

/// Steady incompressible Navier–Stokes at Re = 500, outputs (u, v, p).
std::unique_ptr<Problem> ns_problem();

/// −∇·(A∇u) + q u = f on the unit square with a centred circular hole.
std::unique_ptr<Problem> helmholtz_problem();

/// Δu = −2π² sin(πx) sin(πy), homogeneous Dirichlet.
std::unique_ptr<Problem> toy_poisson_problem();

/// Poisson variant with A=20, B=15, C=8, D=6 paired with a 5×80 network.
std::unique_ptr<Problem> two_phase_poisson_problem();

const std::vector<std::string>& benchmark_names();

/// Throws UsageError for unknown names.
std::unique_ptr<Problem> make_problem(const std::string& name);

}  // namespace caml::pde
