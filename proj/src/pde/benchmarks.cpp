#include "caml/pde/benchmarks.hpp"

#include <cmath>
#include <numbers>

#include "caml/error.hpp"

namespace caml::pde {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<BoundarySegment> unit_square_edges() {
  std::vector<BoundarySegment> e(4);
  e[0].name = "left";
  e[0].at = [](double s) { return Point{0.0, s}; };
  e[0].normal = [](Point) { return std::array<double, 2>{-1.0, 0.0}; };
  e[1].name = "bottom";
  e[1].at = [](double s) { return Point{s, 0.0}; };
  e[1].normal = [](Point) { return std::array<double, 2>{0.0, -1.0}; };
  e[2].name = "right";
  e[2].at = [](double s) { return Point{1.0, s}; };
  e[2].normal = [](Point) { return std::array<double, 2>{1.0, 0.0}; };
  e[3].name = "top";
  e[3].at = [](double s) { return Point{s, 1.0}; };
  e[3].normal = [](Point) { return std::array<double, 2>{0.0, 1.0}; };
  return e;
}

/// Dirichlet data copied from the exact solution of `problem`.
void dirichlet_from_exact(std::vector<BoundarySegment>& segs, const Problem& problem,
                          std::vector<int> fields) {
  for (BoundarySegment& s : segs) {
    s.alpha = 1.0;
    s.beta = 0.0;
    s.fields = fields;
    s.g = [&problem](int field, Point p) { return problem.exact(field, p); };
  }
}

// ---------------------------------------------------------------- heat

constexpr double kHeatT0 = 100.0;
constexpr double kHeatFlux = 15.0;
constexpr int kHeatModes = 20;

class Heat final : public ProblemImpl<Heat> {
 public:
  std::string name() const override { return "heat"; }

  std::vector<BoundarySegment> boundary() const override {
    auto segs = unit_square_edges();
    for (BoundarySegment& s : segs) {
      const bool dirichlet = s.name == "left" || s.name == "bottom";
      s.alpha = dirichlet ? 1.0 : 0.0;
      s.beta = dirichlet ? 0.0 : 1.0;
      const double g = dirichlet ? kHeatT0 : -kHeatFlux;
      s.g = [g](int, Point) { return g; };
    }
    return segs;
  }

  double source(int, Point) const override { return 0.0; }

  template <class T>
  T exact_t(int, const T& x, const T& y) const {
    using std::exp;
    using std::sin;
    using ad::exp;
    using ad::sin;
    // sinh(λx)/cosh(λ) written with decaying exponentials so no term overflows.
    auto ratio = [](double lam, const T& s) {
      return (exp((s - 1.0) * lam) - exp((s + 1.0) * -lam)) * (1.0 / (1.0 + std::exp(-2.0 * lam)));
    };
    T u = x * 0.0 + kHeatT0;
    for (int m = 1; m <= kHeatModes; ++m) {
      const int n = 2 * m - 1;
      const double lam = n * kPi / 2.0;
      const double coef = -8.0 * kHeatFlux / (n * n * kPi * kPi);
      u = u + (ratio(lam, x) * sin(y * lam) + ratio(lam, y) * sin(x * lam)) * coef;
    }
    return u;
  }

  template <class T>
  void residual_t(std::span<const FieldJet<T>> u, Point, T, std::span<T> r) const {
    r[0] = u[0].lap();
  }
};

// ------------------------------------------------ manufactured Poisson family

/// u* = A sin(2πx) + B cos(3πy) + C x + D y + E + S sin(πx) sin(πy), Δu* = f.
struct PoissonConstants {
  double a, b, c, d, e, s;
};

class ManufacturedPoisson final : public ProblemImpl<ManufacturedPoisson> {
 public:
  ManufacturedPoisson(std::string name, PoissonConstants k, nn::MlpSpec net)
      : name_(std::move(name)), k_(k), net_(net) {}

  std::string name() const override { return name_; }
  nn::MlpSpec default_network() const override { return net_; }

  std::vector<BoundarySegment> boundary() const override {
    auto segs = unit_square_edges();
    dirichlet_from_exact(segs, *this, {0});
    return segs;
  }

  double source(int, Point p) const override {
    return -4.0 * kPi * kPi * k_.a * std::sin(2 * kPi * p.x) -
           9.0 * kPi * kPi * k_.b * std::cos(3 * kPi * p.y) -
           2.0 * kPi * kPi * k_.s * std::sin(kPi * p.x) * std::sin(kPi * p.y);
  }

  template <class T>
  T exact_t(int, const T& x, const T& y) const {
    using std::cos;
    using std::sin;
    using ad::cos;
    using ad::sin;
    return sin(x * (2 * kPi)) * k_.a + cos(y * (3 * kPi)) * k_.b + x * k_.c + y * k_.d + k_.e +
           sin(x * kPi) * sin(y * kPi) * k_.s;
  }

  template <class T>
  void residual_t(std::span<const FieldJet<T>> u, Point p, T, std::span<T> r) const {
    r[0] = u[0].lap() - source(0, p);
  }

 private:
  std::string name_;
  PoissonConstants k_;
  nn::MlpSpec net_;
};

// ---------------------------------------------------------------- Navier–Stokes

constexpr double kReynolds = 500.0;

class NavierStokes final : public ProblemImpl<NavierStokes> {
 public:
  std::string name() const override { return "ns"; }
  int num_fields() const override { return 3; }
  int num_residuals() const override { return 3; }
  bool nonlinear_offset() const override { return true; }
  std::vector<int> offset_fields() const override { return {0, 1}; }
  std::vector<int> error_fields() const override { return {0, 1}; }

  nn::MlpSpec default_network() const override {
    nn::MlpSpec s;
    s.output_dim = 3;
    return s;
  }

  std::vector<BoundarySegment> boundary() const override {
    auto segs = unit_square_edges();
    dirichlet_from_exact(segs, *this, {0, 1});
    return segs;
  }

  double source(int component, Point p) const override {
    const double sx = std::sin(kPi * p.x), cx = std::cos(kPi * p.x);
    const double sy = std::sin(kPi * p.y), cy = std::cos(kPi * p.y);
    const double pi2 = kPi * kPi, pi3 = pi2 * kPi;
    if (component == 0) {
      return pi3 * sx * cx + pi2 * std::cos(kPi * (p.x + p.y)) +
             2 * kPi * std::cos(2 * kPi * p.x) * std::sin(2 * kPi * p.y) +
             2 * pi3 / kReynolds * sx * cy;
    }
    if (component == 1) {
      return pi3 * sy * cy - pi2 * std::cos(kPi * (p.x + p.y)) +
             2 * kPi * std::sin(2 * kPi * p.x) * std::cos(2 * kPi * p.y) -
             2 * pi3 / kReynolds * cx * sy;
    }
    return 0.0;
  }

  template <class T>
  T exact_t(int field, const T& x, const T& y) const {
    using std::cos;
    using std::sin;
    using ad::cos;
    using ad::sin;
    if (field == 0) return sin(x * kPi) * cos(y * kPi) * kPi + 1.0;
    if (field == 1) return cos(x * kPi) * sin(y * kPi) * -kPi + 1.0;
    return sin(x * (2 * kPi)) * sin(y * (2 * kPi));
  }

  /// Momentum with the offset shifting both advecting velocities, then continuity.
  template <class T>
  void residual_t(std::span<const FieldJet<T>> f, Point p, T c, std::span<T> r) const {
    const FieldJet<T>& u = f[0];
    const FieldJet<T>& v = f[1];
    const FieldJet<T>& pr = f[2];
    const T uc = u.v + c;
    const T vc = v.v + c;
    constexpr double nu = 1.0 / kReynolds;
    r[0] = uc * u.g[0] + vc * u.g[1] + pr.g[0] - u.lap() * nu - source(0, p);
    r[1] = uc * v.g[0] + vc * v.g[1] + pr.g[1] - v.lap() * nu - source(1, p);
    r[2] = u.g[0] + v.g[1];
  }
};

// ---------------------------------------------------------------- Helmholtz

constexpr double kHoleRadius = 0.25;

class Helmholtz final : public ProblemImpl<Helmholtz> {
 public:
  std::string name() const override { return "helmholtz"; }
  nn::JetOrder interior_order() const override { return nn::JetOrder::kFull; }

  bool in_domain(Point p) const override {
    const double dx = p.x - 0.5, dy = p.y - 0.5;
    return Problem::in_domain(p) && dx * dx + dy * dy >= kHoleRadius * kHoleRadius;
  }

  std::vector<BoundarySegment> boundary() const override {
    auto segs = unit_square_edges();
    BoundarySegment hole;
    hole.name = "hole";
    hole.at = [](double s) {
      return Point{0.5 + kHoleRadius * std::cos(2 * kPi * s), 0.5 + kHoleRadius * std::sin(2 * kPi * s)};
    };
    // Outward from Ω means pointing into the hole.
    hole.normal = [](Point p) {
      return std::array<double, 2>{-(p.x - 0.5) / kHoleRadius, -(p.y - 0.5) / kHoleRadius};
    };
    segs.push_back(hole);
    dirichlet_from_exact(segs, *this, {0});
    return segs;
  }

  static double q(Point p) { return 2.0 + std::cos(kPi * p.x) * std::cos(kPi * p.y); }
  double gamma(Point p) const override { return q(p); }

  double source(int, Point p) const override {
    const double sx = std::sin(kPi * p.x), cx = std::cos(kPi * p.x);
    const double s2y = std::sin(2 * kPi * p.y), c2y = std::cos(2 * kPi * p.y);
    const double e = 0.2 * std::exp(p.x + p.y);
    const double pi2 = kPi * kPi;
    const double u = 100.0 + sx * c2y + e;
    const double ux = kPi * cx * c2y + e;
    const double uy = -2 * kPi * sx * s2y + e;
    const double uxx = -pi2 * sx * c2y + e;
    const double uyy = -4 * pi2 * sx * c2y + e;
    const double uxy = -2 * pi2 * cx * s2y + e;
    const Coeffs a = coeffs(p);
    const double div = a.a11 * uxx + 2 * a.a12 * uxy + a.a22 * uyy + a.bx * ux + a.by * uy;
    return -div + q(p) * u;
  }

  template <class T>
  T exact_t(int, const T& x, const T& y) const {
    using std::cos;
    using std::exp;
    using std::sin;
    using ad::cos;
    using ad::exp;
    using ad::sin;
    return sin(x * kPi) * cos(y * (2 * kPi)) + exp(x + y) * 0.2 + 100.0;
  }

  template <class T>
  void residual_t(std::span<const FieldJet<T>> f, Point p, T c, std::span<T> r) const {
    const FieldJet<T>& u = f[0];
    const Coeffs a = coeffs(p);
    const T div = u.h[0] * a.a11 + u.h[1] * (2 * a.a12) + u.h[2] * a.a22 + u.g[0] * a.bx + u.g[1] * a.by;
    r[0] = (u.v + c) * q(p) - div - source(0, p);
  }

 private:
  /// ∇·(A∇u) = a11 uxx + 2 a12 uxy + a22 uyy + bx ux + by uy.
  struct Coeffs {
    double a11, a12, a22, bx, by;
  };
  static Coeffs coeffs(Point p) {
    const double sx = std::sin(kPi * p.x), cx = std::cos(kPi * p.x);
    const double sy = std::sin(kPi * p.y), cy = std::cos(kPi * p.y);
    Coeffs k;
    k.a11 = 1.0 + 0.3 * p.x;
    k.a22 = 1.0 + 0.3 * p.y;
    k.a12 = 0.15 * sx * sy;
    k.bx = 0.3 + 0.15 * kPi * sx * cy;
    k.by = 0.15 * kPi * cx * sy + 0.3;
    return k;
  }
};

}  // namespace

nn::MlpSpec Problem::default_network() const { return nn::MlpSpec{}; }

bool Problem::in_domain(Point p) const {
  const Bounds b = bounds();
  return p.x >= b.x0 && p.x <= b.x1 && p.y >= b.y0 && p.y <= b.y1;
}

bool Problem::offset_applies(int field) const {
  for (int f : offset_fields()) {
    if (f == field) return true;
  }
  return false;
}

std::vector<FieldJet<double>> exact_field_jets(const Problem& problem, Point p) {
  std::vector<FieldJet<double>> out(problem.num_fields());
  for (int f = 0; f < problem.num_fields(); ++f) {
    const ad::DualTaylor j = problem.exact_jet(f, p);
    out[f].v = j.value();
    out[f].g = {j.grad(0), j.grad(1)};
    out[f].h = {j.hess(0, 0), j.hess(0, 1), j.hess(1, 1)};
  }
  return out;
}

double heat_exact(double x, double y) {
  static const Heat heat;
  return heat.exact_t<double>(0, x, y);
}

std::unique_ptr<Problem> heat_problem() { return std::make_unique<Heat>(); }

std::unique_ptr<Problem> poisson_problem() {
  return std::make_unique<ManufacturedPoisson>("poisson", PoissonConstants{30, 25, 18, 16, 10, 1},
                                               nn::MlpSpec{});
}

std::unique_ptr<Problem> toy_poisson_problem() {
  return std::make_unique<ManufacturedPoisson>("toy_poisson", PoissonConstants{0, 0, 0, 0, 0, 1},
                                               nn::MlpSpec{});
}

std::unique_ptr<Problem> two_phase_poisson_problem() {
  nn::MlpSpec net;
  net.hidden_layers = 5;
  net.hidden_width = 80;
  return std::make_unique<ManufacturedPoisson>("two_phase_poisson", PoissonConstants{20, 15, 8, 6, 0, 1},
                                               net);
}

std::unique_ptr<Problem> ns_problem() { return std::make_unique<NavierStokes>(); }

std::unique_ptr<Problem> helmholtz_problem() { return std::make_unique<Helmholtz>(); }

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"heat", "poisson", "ns", "helmholtz", "toy_poisson",
                                              "two_phase_poisson"};
  return names;
}

std::unique_ptr<Problem> make_problem(const std::string& name) {
  if (name == "heat") return heat_problem();
  if (name == "poisson") return poisson_problem();
  if (name == "ns") return ns_problem();
  if (name == "helmholtz") return helmholtz_problem();
  if (name == "toy_poisson") return toy_poisson_problem();
  if (name == "two_phase_poisson") return two_phase_poisson_problem();
  throw UsageError("unknown benchmark '" + name + "'");
}

}  // namespace caml::pde
