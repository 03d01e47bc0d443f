#include "outflux/extension.hpp"

#include "outflux/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace outflux {

namespace {

constexpr double kPi = std::numbers::pi;
const Mat2 kMirror = (Mat2() << 1.0, 0.0, 0.0, -1.0).finished();

FieldSample scaled(FieldSample s, double c) {
  s.value *= c;
  s.grad *= c;
  return s;
}

// M A(Mx) and its Jacobian M J(Mx) M.
FieldSample reflect(const FieldSample& s) {
  FieldSample r;
  r.value = kMirror * s.value;
  r.grad = kMirror * s.grad * kMirror;
  return r;
}

// Cubic Hermite interpolant on sorted nodes.
struct HermiteSpline {
  std::vector<double> t, v, m;

  std::array<double, 3> eval(double x) const {
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - t.begin() - 1, 0));
    i = std::min(i, t.size() - 2);
    const double w = t[i + 1] - t[i], u = (x - t[i]) / w;
    const double u2 = u * u, u3 = u2 * u;
    const double va = v[i], vb = v[i + 1], ma = m[i], mb = m[i + 1];
    const double val = (2 * u3 - 3 * u2 + 1) * va + (u3 - 2 * u2 + u) * w * ma +
                       (-2 * u3 + 3 * u2) * vb + (u3 - u2) * w * mb;
    const double d1 = ((6 * u2 - 6 * u) * va + (-6 * u2 + 6 * u) * vb) / w +
                      (3 * u2 - 4 * u + 1) * ma + (3 * u2 - 2 * u) * mb;
    const double d2 = ((12 * u - 6) * va + (-12 * u + 6) * vb) / (w * w) +
                      ((6 * u - 4) * ma + (6 * u - 2) * mb) / w;
    return {val, d1, d2};
  }
};

// Stream-function profiles along a boundary parameter s in [0, extent]:
// E' = p (normal data), T = q (tangential data), both extended oddly.
struct CollarProfiles {
  HermiteSpline E, T;
  double extent = 0.0;
  double raw_end = 0.0;  // E(extent) before drift removal: half the flux

  // (E, E', E'') and (T, T', T'') at s, odd extension, constant beyond.
  std::array<double, 3> e(double s) const { return odd(E, s, true); }
  std::array<double, 3> tt(double s) const { return odd(T, s, false); }

 private:
  std::array<double, 3> odd(const HermiteSpline& sp, double s, bool hold) const {
    const double a = std::abs(s), sign = s < 0 ? -1.0 : 1.0;
    if (a >= extent) return {hold ? sign * sp.v.back() : 0.0, 0.0, 0.0};
    const auto r = sp.eval(a);
    return {sign * r[0], r[1], sign * r[2]};
  }
};

// Builds E and T from `trace(s) -> (p, p', q, q')` with adaptive node
// placement: geometric clustering towards both ends plus bisection until the
// interpolants reproduce p and q at interior check points.
CollarProfiles build_profiles(const std::function<std::array<double, 4>(double)>& trace,
                              double extent) {
  std::vector<double> seeds{0.0, extent};
  for (int j = 1; j < 64; ++j) seeds.push_back(extent * j / 64.0);
  for (int j = 7; j <= 48; ++j) {
    seeds.push_back(extent * std::ldexp(1.0, -j));
    seeds.push_back(extent * (1.0 - std::ldexp(1.0, -j)));
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  double scale = 0.0;
  for (double s : seeds) {
    const auto tr = trace(s);
    scale = std::max({scale, std::abs(tr[0]), std::abs(tr[2])});
  }
  const double tol = 1e-11 * std::max(scale, 1e-300);

  struct Node {
    double s;
    std::array<double, 4> tr;
  };
  std::vector<Node> nodes;
  auto cubic_check = [&](const Node& a, const Node& b) {
    const double w = b.s - a.s;
    // Derivative of the E cubic from slopes only needs the integral.
    const double integral = integrate_adaptive([&](double s) { return trace(s)[0]; }, a.s, b.s,
                                               1e-12, 1e-16 * scale * w + 1e-300)
                                .value;
    HermiteSpline e{{a.s, b.s}, {0.0, integral}, {a.tr[0], b.tr[0]}};
    HermiteSpline t{{a.s, b.s}, {a.tr[2], b.tr[2]}, {a.tr[3], b.tr[3]}};
    double err = 0.0;
    for (double f : {0.25, 0.5, 0.75}) {
      const double s = a.s + f * w;
      const auto tr = trace(s);
      err = std::max({err, std::abs(e.eval(s)[1] - tr[0]), std::abs(t.eval(s)[0] - tr[2])});
    }
    return std::make_pair(err, integral);
  };
  std::vector<double> integrals;
  std::function<void(const Node&, const Node&, int)> refine = [&](const Node& a, const Node& b,
                                                                  int depth) {
    const auto [err, integral] = cubic_check(a, b);
    if (err <= tol || depth >= 40) {
      nodes.push_back(b);
      integrals.push_back(integral);
      return;
    }
    const double m = 0.5 * (a.s + b.s);
    const Node mid{m, trace(m)};
    refine(a, mid, depth + 1);
    refine(mid, b, depth + 1);
  };
  nodes.push_back({0.0, trace(0.0)});
  for (std::size_t i = 1; i < seeds.size(); ++i) {
    const Node a = nodes.back();
    refine(a, Node{seeds[i], trace(seeds[i])}, 0);
  }

  CollarProfiles out;
  out.extent = extent;
  double acc = 0.0;
  std::vector<double> ev{0.0};
  for (double v : integrals) ev.push_back(acc += v);
  out.raw_end = acc;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double s = nodes[i].s;
    out.E.t.push_back(s);
    out.T.t.push_back(s);
    // Remove the quadrature drift so that E(extent) = 0 exactly.
    out.E.v.push_back(ev[i] - acc * s / extent);
    out.E.m.push_back(nodes[i].tr[0] - acc / extent);
    out.T.v.push_back(nodes[i].tr[2]);
    out.T.m.push_back(nodes[i].tr[3]);
  }
  return out;
}

class CollarCorrector {
 public:
  CollarCorrector(CollarProfiles profiles, HopfCutoff chi, bool hole, Vec2 center, double radius,
                  double x_left)
      : p_(std::move(profiles)), chi_(chi), hole_(hole), center_(center), r_(radius),
        x_left_(x_left) {}

  FieldSample operator()(const Vec2& x) const {
    if (hole_) return eval_hole(x);
    return eval_wall(x);
  }

 private:
  FieldSample eval_wall(const Vec2& x) const {
    // Points on the boundary up to rounding count as boundary points.
    const double d = std::max(x(0) - x_left_, 0.0);
    if (x(0) - x_left_ < -1e-12 * chi_.rho() || d >= chi_.rho()) return {};
    const auto c = chi_.eval(d);
    const auto E = p_.e(x(1)), T = p_.tt(x(1));
    const double G = E[0] + d * T[0], Gs = E[1] + d * T[1], Gss = E[2] + d * T[2];
    ScalarJet phi;
    phi.value = c[0] * G;
    phi.grad = Vec2(c[1] * G + c[0] * T[0], c[0] * Gs);
    const double hxy = c[1] * Gs + c[0] * T[1];
    phi.hess << c[2] * G + 2 * c[1] * T[0], hxy, hxy, c[0] * Gss;
    return curl_of(phi);
  }

  FieldSample eval_hole(const Vec2& x) const {
    const Vec2 rel = x - center_;
    const double rho = rel.norm(), d = std::max(rho - r_, 0.0);
    if (rho - r_ < -1e-12 * r_ || d >= chi_.rho()) return {};
    const double th = std::atan2(rel(1), rel(0));
    const auto c = chi_.eval(d);
    const auto E = p_.e(th), T = p_.tt(th);
    const double G = E[0] + d * T[0], Gt = E[1] + d * T[1], Gtt = E[2] + d * T[2];
    const double f_r = c[1] * G + c[0] * T[0];
    const double f_rr = c[2] * G + 2 * c[1] * T[0];
    const double f_t = c[0] * Gt;
    const double f_rt = c[1] * Gt + c[0] * T[1];
    const double f_tt = c[0] * Gtt;
    Mat2 rot;  // columns e_rho, e_theta
    rot << rel(0) / rho, -rel(1) / rho, rel(1) / rho, rel(0) / rho;
    Mat2 hp;
    const double h_rt = f_rt / rho - f_t / (rho * rho);
    hp << f_rr, h_rt, h_rt, f_tt / (rho * rho) + f_r / rho;
    ScalarJet phi;
    phi.value = c[0] * G;
    phi.grad = rot * Vec2(f_r, f_t / rho);
    phi.hess = rot * hp * rot.transpose();
    phi.hess(1, 0) = phi.hess(0, 1);
    return curl_of(phi);
  }

  CollarProfiles p_;
  HopfCutoff chi_;
  bool hole_;
  Vec2 center_;
  double r_, x_left_;
};

double left_height(const DomainSpec& spec) { return spec.wall(spec.x_left); }

}  // namespace

double BoundaryData::flux(int component) const {
  if (component == 0) return inflow_flux;
  return holes.at(static_cast<std::size_t>(component - 1)).flux;
}

double BoundaryData::total_flux() const {
  double f = inflow_flux;
  for (const auto& h : holes) f += h.flux;
  return f;
}

std::pair<Vec2, Vec2> BoundaryData::inlet_trace(const DomainSpec& spec, double x2) const {
  const double H = left_height(spec);
  if (std::abs(x2) >= H) return {Vec2::Zero(), Vec2::Zero()};
  // Outward normal -e1: the flux is -int a1 = inflow_flux.
  const double c = -0.75 * inflow_flux / H;
  return {Vec2(c * (1.0 - x2 * x2 / (H * H)), 0.0), Vec2(-2.0 * c * x2 / (H * H), 0.0)};
}

std::pair<Vec2, Vec2> BoundaryData::hole_trace(const DomainSpec& spec, int i,
                                               double theta) const {
  const auto& h = holes.at(static_cast<std::size_t>(i));
  const double r = spec.holes.at(static_cast<std::size_t>(i)).radius;
  const Vec2 er(std::cos(theta), std::sin(theta)), et(-std::sin(theta), std::cos(theta));
  // a = -n_rho e_rho + swirl sin(theta) e_theta, the normal into the hole is -e_rho.
  const double q = h.flux / (2.0 * kPi * r);
  const double n = q * (1.0 + h.beta * std::cos(theta));
  const double dn = -q * h.beta * std::sin(theta);
  const double t = h.swirl * std::sin(theta), dt = h.swirl * std::cos(theta);
  const Vec2 value = -n * er + t * et;
  const Vec2 deriv = -dn * er - n * et + dt * et - t * er;
  return {value, deriv};
}

BoundaryData BoundaryData::scaled(double s) const {
  BoundaryData out = *this;
  out.inflow_flux *= s;
  for (auto& h : out.holes) {
    h.flux *= s;
    h.swirl *= s;
  }
  return out;
}

StripSpec make_strips(const DomainSpec& spec, std::optional<double> delta_override) {
  StripSpec st;
  double delta = left_height(spec);
  for (const auto& h : spec.holes) delta = std::min(delta, h.radius);
  st.delta = delta_override ? *delta_override : 0.5 * delta;
  const int n = static_cast<int>(spec.holes.size());
  if (n == 0) return st;
  st.start.push_back(spec.x_left - st.delta);
  for (int i = 0; i + 1 < n; ++i) st.start.push_back(spec.holes[i].center - 0.5 * spec.holes[i].radius);
  st.end = spec.holes.back().center + 0.5 * spec.holes.back().radius;
  return st;
}

void validate_strips(const DomainSpec& spec, const StripSpec& st) {
  if (!(st.delta > 0.0)) throw HypothesisError("strip half-height must be positive");
  for (const auto& h : spec.holes)
    if (st.delta > 0.5 * h.radius * (1.0 + 1e-12))
      throw HypothesisError("strip half-height exceeds half a hole radius");
  if (2.0 * st.delta > left_height(spec))
    throw HypothesisError("strip does not fit under the wall");
  for (std::size_t c = 0; c < st.start.size(); ++c) {
    if (spec.inside(Vec2(st.start[c], 0.0)))
      throw HypothesisError("strip " + std::to_string(c) + " starts inside the domain");
  }
  if (!spec.holes.empty() && spec.inside(Vec2(st.end, 0.0)))
    throw HypothesisError("strips end inside the domain");
  // Between start and end the corridor core |x2| <= delta/2 must meet only
  // the holes and the left wall, and stay under the outer wall.
  for (double x1 = spec.x_left; x1 <= st.end; x1 += st.delta / 8.0)
    if (spec.wall(x1) <= st.delta) throw HypothesisError("strip leaves the domain");
}

FieldSample tilde_xi_field(const OutletCutoff& cutoff, const Vec2& x) {
  if (std::abs(x(1)) > cutoff.g(x(0)) * (1.0 + 1e-14))
    throw PreconditionError("xi~ evaluated outside the outlet");
  if (x(1) >= 0.0) return curl_of(cutoff.eval(x));
  return reflect(curl_of(cutoff.eval(mirror(x))));
}

std::string to_string(TermKind kind) {
  switch (kind) {
    case TermKind::CarrierStrip: return "carrier_strip";
    case TermKind::CarrierOutlet: return "carrier_outlet";
    case TermKind::Corrector: return "corrector";
  }
  return "unknown";
}

ExtensionTerm carrier_strip(const DomainSpec& spec, const StripSpec& strips, int c, double flux,
                            double epsilon) {
  const int n = static_cast<int>(spec.holes.size());
  if (c < 0 || c >= n) throw PreconditionError("strip carrier needs a component before the last hole");
  ExtensionTerm term;
  term.kind = TermKind::CarrierStrip;
  term.component = c;
  const double lo = strips.start.at(static_cast<std::size_t>(c)), hi = strips.end;
  const double delta = strips.delta;
  if (flux == 0.0) {
    term.field = [](const Vec2&) { return FieldSample{}; };
    return term;
  }
  const OutletCutoff xi = OutletCutoff::strip(delta, epsilon);
  term.field = [xi, lo, hi, delta, flux](const Vec2& x) {
    if (x(0) < lo || x(0) > hi || std::abs(x(1)) >= delta) return FieldSample{};
    return scaled(tilde_xi_field(xi, x), -0.5 * flux);
  };
  return term;
}

ExtensionTerm carrier_outlet(const DomainSpec& spec, const OutletCutoff& cutoff, double flux) {
  const double start = spec.drain_start();
  if (!spec.holes.empty()) {
    const double top = cutoff.band(start).second;
    if (!(top < spec.holes.back().radius))
      throw HypothesisError("outlet band top " + std::to_string(top) +
                            " does not cross the last hole (radius " +
                            std::to_string(spec.holes.back().radius) + ")");
  }
  ExtensionTerm term;
  term.kind = TermKind::CarrierOutlet;
  term.component = static_cast<int>(spec.holes.size());
  if (flux == 0.0) {
    term.field = [](const Vec2&) { return FieldSample{}; };
    return term;
  }
  term.field = [cutoff, start, flux](const Vec2& x) {
    if (x(0) < start || std::abs(x(1)) >= cutoff.band(x(0)).second) return FieldSample{};
    return scaled(tilde_xi_field(cutoff, x), -0.5 * flux);
  };
  return term;
}

ExtensionTerm corrector(const DomainSpec& spec, int component, const CurveTrace& residual,
                        const HopfCutoff& chi) {
  ExtensionTerm term;
  term.kind = TermKind::Corrector;
  term.component = component;
  CollarProfiles profiles;
  if (component == 0) {
    auto trace = [&](double s) -> std::array<double, 4> {
      const auto [h, dh] = residual(s);
      return {-h(0), -dh(0), h(1), dh(1)};
    };
    profiles = build_profiles(trace, left_height(spec));
  } else {
    const double r = spec.holes.at(static_cast<std::size_t>(component - 1)).radius;
    auto trace = [&](double th) -> std::array<double, 4> {
      const auto [h, dh] = residual(th);
      const Vec2 er(std::cos(th), std::sin(th)), et(-std::sin(th), std::cos(th));
      const double hr = h.dot(er), ht = h.dot(et);
      const double dhr = dh.dot(er) + ht, dht = dh.dot(et) - hr;
      return {-r * hr, -r * dhr, ht, dht};
    };
    profiles = build_profiles(trace, kPi);
  }
  // E(extent) is half the flux out of Omega through the component.
  const double flux = 2.0 * profiles.raw_end;
  if (std::abs(flux) > 1e-8)
    throw PreconditionError("residual flux " + std::to_string(flux) + " on component " +
                            std::to_string(component));
  bool zero = true;
  for (double v : profiles.E.v) zero &= v == 0.0;
  for (double v : profiles.T.v) zero &= v == 0.0;
  for (double v : profiles.T.m) zero &= v == 0.0;
  if (zero) {
    term.field = [](const Vec2&) { return FieldSample{}; };
    return term;
  }
  const bool hole = component > 0;
  const Vec2 center = hole ? Vec2(spec.holes[component - 1].center, 0.0) : Vec2::Zero();
  const double r = hole ? spec.holes[component - 1].radius : 0.0;
  auto impl = std::make_shared<CollarCorrector>(std::move(profiles), chi, hole, center, r,
                                                spec.x_left);
  term.field = [impl](const Vec2& x) { return (*impl)(x); };
  return term;
}

FieldFn symmetrize(FieldFn field) {
  return [field = std::move(field)](const Vec2& x) {
    const FieldSample a = field(x), b = reflect(field(mirror(x)));
    FieldSample s;
    s.value = 0.5 * (a.value + b.value);
    s.grad = 0.5 * (a.grad + b.grad);
    return s;
  };
}

FieldSample ExtensionField::eval(const Vec2& x) const {
  FieldSample s;
  for (const auto& t : terms) s += t.field(x);
  return s;
}

FieldFn ExtensionField::as_function() const {
  auto self = std::make_shared<ExtensionField>(*this);
  return [self](const Vec2& x) { return self->eval(x); };
}

std::vector<double> ExtensionField::ledger() const {
  std::vector<double> total;
  for (const auto& t : terms) {
    if (total.size() < t.flux.size()) total.resize(t.flux.size(), 0.0);
    for (std::size_t c = 0; c < t.flux.size(); ++c) total[c] += t.flux[c];
  }
  return total;
}

double default_collar(const DomainSpec& spec, int component) {
  const int n = static_cast<int>(spec.holes.size());
  if (component == 0) {
    const double room = n > 0 ? spec.holes[0].center - spec.holes[0].radius - spec.x_left
                              : left_height(spec);
    return 0.5 * room;
  }
  const auto& h = spec.holes.at(static_cast<std::size_t>(component - 1));
  double room = h.center - h.radius - spec.x_left;
  if (component > 1) {
    const auto& p = spec.holes[component - 2];
    room = std::min(room, h.center - h.radius - (p.center + p.radius));
  }
  if (component < n) {
    const auto& q = spec.holes[component];
    room = std::min(room, q.center - q.radius - (h.center + h.radius));
  }
  for (int s = 0; s <= 64; ++s) {
    const double th = kPi * s / 64.0;
    const double x1 = h.center + h.radius * std::cos(th);
    room = std::min(room, spec.wall(x1) - h.radius * std::sin(th));
  }
  return 0.5 * room;
}

ExtensionField assemble_extension(const DomainSpec& spec, const BoundaryData& data,
                                  const ExtensionOptions& options) {
  if (static_cast<int>(data.holes.size()) != static_cast<int>(spec.holes.size()))
    throw PreconditionError("boundary data must give one trace per hole");
  const int n = static_cast<int>(spec.holes.size());
  ExtensionField ext;
  ext.epsilon = options.epsilon;
  ext.strips = make_strips(spec, options.delta);
  if (n > 0) validate_strips(spec, ext.strips);

  for (int c = 0; c < n; ++c)
    ext.terms.push_back(carrier_strip(spec, ext.strips, c, data.flux(c), options.epsilon));
  const OutletCutoff xi(spec.profile, spec.gamma, options.epsilon);
  ext.terms.push_back(carrier_outlet(spec, xi, data.total_flux()));

  // Correctors take up the zero-flux residual on every component.
  ExtensionField carriers = ext;
  for (int c = 0; c <= n; ++c) {
    const double rho = options.collar ? std::min(*options.collar, default_collar(spec, c) * 2.0)
                                      : default_collar(spec, c);
    ext.collars.push_back(rho);
    const HopfCutoff chi(options.epsilon, rho);
    CurveTrace residual;
    if (c == 0) {
      residual = [&](double x2) {
        auto [a, da] = data.inlet_trace(spec, x2);
        const FieldSample b = carriers.eval(Vec2(spec.x_left, x2));
        return std::make_pair(Vec2(a - b.value), Vec2(da - b.grad.col(1)));
      };
    } else {
      const auto& h = spec.holes[c - 1];
      residual = [&, h, c](double th) {
        auto [a, da] = data.hole_trace(spec, c - 1, th);
        const Vec2 x(h.center + h.radius * std::cos(th), h.radius * std::sin(th));
        const Vec2 dx(-h.radius * std::sin(th), h.radius * std::cos(th));
        const FieldSample b = carriers.eval(x);
        return std::make_pair(Vec2(a - b.value), Vec2(da - b.grad * dx));
      };
    }
    ext.terms.push_back(corrector(spec, c, residual, chi));
  }

  for (auto& t : ext.terms) {
    t.flux.assign(static_cast<std::size_t>(n + 1), 0.0);
    for (int c = 0; c <= n; ++c) t.flux[c] = boundary_flux(t.field, spec, c);
  }
  return ext;
}

namespace {

// Carriers vary on the scale of x2 down to g e^{-1/epsilon}: dyadic breaks
// towards the axis keep every adaptive panel at its natural scale.
double axis_integral(const std::function<double(double)>& f, double top) {
  std::vector<double> breaks;
  for (int j = 1; j <= 160; ++j) breaks.push_back(std::ldexp(top, -j));
  return integrate_piecewise(f, 0.0, top, breaks, 1e-11, 1e-16).value;
}

}  // namespace

double boundary_flux(const FieldFn& field, const DomainSpec& spec, int component) {
  if (component == 0) {
    const double H = left_height(spec);
    auto f = [&](double x2) { return field(Vec2(spec.x_left, x2)).value(0); };
    return -2.0 * axis_integral(f, H);
  }
  const auto& h = spec.holes.at(static_cast<std::size_t>(component - 1));
  auto f = [&](double th) {
    const Vec2 er(std::cos(th), std::sin(th));
    return -h.radius * field(Vec2(h.center, 0.0) + h.radius * er).value.dot(er);
  };
  // The hole meets the axis at both ends, where the carriers have their layer.
  std::vector<double> breaks;
  for (int j = 1; j <= 160; ++j) {
    breaks.push_back(std::ldexp(0.5 * kPi, -j));
    breaks.push_back(kPi - std::ldexp(0.5 * kPi, -j));
  }
  breaks.push_back(0.5 * kPi);
  std::sort(breaks.begin(), breaks.end());
  return 2.0 * integrate_piecewise(f, 0.0, kPi, breaks, 1e-11, 1e-16).value;
}

double cross_section_flux(const FieldFn& field, const DomainSpec& spec, double x1) {
  const double w = spec.wall(x1);
  auto f = [&](double x2) { return field(Vec2(x1, x2)).value(0); };
  return 2.0 * axis_integral(f, w);
}

DecayReport decay_check(const FieldFn& field, const DomainSpec& spec, double x1_lo,
                        double x1_hi, int samples) {
  DecayReport r;
  for (int i = 0; i <= samples; ++i) {
    const double x1 = x1_lo + (x1_hi - x1_lo) * i / samples;
    const double w = spec.wall(x1), g = spec.profile.value(std::max(x1, spec.profile.r_star()));
    // Log-spaced heights: the carriers vary on the scale of x2.
    for (int j = 0; j <= samples; ++j) {
      const double x2 = w * std::exp(-30.0 * (1.0 - static_cast<double>(j) / samples)) *
                        (1.0 - 1e-9);
      const FieldSample s = field(Vec2(x1, x2));
      r.sup_value_g = std::max(r.sup_value_g, s.value.norm() * g);
      r.sup_grad_g2 = std::max(r.sup_grad_g2, s.grad.norm() * g * g);
    }
  }
  return r;
}

}  // namespace outflux
