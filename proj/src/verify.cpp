#include "esfem/verify.hpp"

#include "esfem/io.hpp"
#include "esfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace esfem {

using Index = Eigen::Index;

namespace {

using Coeffs = Eigen::Matrix<double, 3, Eigen::Dynamic>;

void gather(const SurfaceMesh& mesh, const NodalVector& v, Index e, Coeffs& out) {
  out.resize(3, mesh.nodes_per_element());
  for (int i = 0; i < mesh.nodes_per_element(); ++i) out.col(i) = v.row(mesh.elements(e, i)).transpose();
}

/// Visits the surface quadrature points of every Γ_h^θ at the Gauss–Legendre
/// θ-nodes. `fn(element, point, weight, frame, E)` receives the combined
/// θ × surface weight including the area element, and E = ∇_{Γ_h^θ} e_h^θ.
template <typename Fn>
void for_each_theta_point(const SurfaceAssembler& assembler, const NodalVector& x_star, const NodalVector& x,
                          int theta_order, Fn&& fn) {
  if (x_star.rows() != x.rows()) throw PreconditionError("x and x* differ in size");
  const NodalVector e = x - x_star;
  const auto line = gauss_legendre<double>(theta_order);
  const SurfaceMesh& mesh = assembler.mesh();
  Coeffs ec;
  Index current = -1;
  for (int t = 0; t < theta_order; ++t) {
    const NodalVector xt = intermediate_nodal(x_star, x, line.points[t]);
    current = -1;
    assembler.for_each_point(xt, assembler.quadrature_table(),
                             [&](Index el, std::size_t q, double w, const ElementPointFrame<double>& f) {
                               if (el != current) {
                                 gather(mesh, e, el, ec);
                                 current = el;
                               }
                               const Mat3 E = f.basis_gradients * ec.transpose();
                               fn(el, q, line.weights[t] * w * f.area_element, f, E);
                             });
  }
}

void finish(IdentityReport& r) {
  r.abs_residual = std::abs(r.lhs - r.rhs);
  const double denom = std::max({std::abs(r.lhs), std::abs(r.rhs), kResidualFloor * r.scale});
  r.rel_residual = denom > 0 ? r.abs_residual / denom : 0.0;
}

}  // namespace

double IdentityReport::part(const std::string& key) const {
  for (const auto& [k, v] : breakdown)
    if (k == key) return v;
  throw PreconditionError("identity report has no part '" + key + "'");
}

IdentityReport mass_difference_identity(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                        const NodalVector& x, const NodalVector& w, const NodalVector& z,
                                        int theta_order) {
  const SparseSymMatrix m_star = assembler.mass(x_star);
  const SparseSymMatrix m = assembler.mass(x);
  IdentityReport r;
  r.name = "massdiff";
  r.theta_quadrature_order = theta_order;
  r.surface_quadrature_exactness = assembler.quadrature_exactness();
  r.lhs = quadratic_form(m, w, z) - quadratic_form(m_star, w, z);
  r.scale = std::sqrt(std::abs(quadratic_form(m_star, w, w) * quadratic_form(m_star, z, z)));

  const SurfaceMesh& mesh = assembler.mesh();
  const auto& values = assembler.quadrature_table().values;
  Coeffs wc, zc;
  Index current = -1;
  double rhs = 0;
  for_each_theta_point(assembler, x_star, x, theta_order,
                       [&](Index e, std::size_t q, double weight, const ElementPointFrame<double>&, const Mat3& E) {
                         if (e != current) {
                           gather(mesh, w, e, wc);
                           gather(mesh, z, e, zc);
                           current = e;
                         }
                         const Vec3 wh = wc * values.row(q).transpose();
                         const Vec3 zh = zc * values.row(q).transpose();
                         rhs += weight * wh.dot(zh) * E.trace();
                       });
  r.rhs = rhs;
  finish(r);
  return r;
}

IdentityReport stiffness_difference_identity(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                             const NodalVector& x, const NodalVector& w, int theta_order) {
  IdentityReport r;
  r.name = "stiffdiff";
  r.theta_quadrature_order = theta_order;
  r.surface_quadrature_exactness = assembler.quadrature_exactness();
  const NodalVector ax_star = assembler.apply_Ax(x_star);
  r.lhs = w.cwiseProduct(assembler.apply_Ax(x)).sum() - w.cwiseProduct(ax_star).sum();
  const SparseSymMatrix a_star = assembler.stiffness(x_star);
  r.scale = std::sqrt(std::abs(quadratic_form(a_star, w, w) * x_star.cwiseProduct(ax_star).sum()));

  const SurfaceMesh& mesh = assembler.mesh();
  Coeffs wc;
  Index current = -1;
  double deformation = 0, direct = 0;
  for_each_theta_point(assembler, x_star, x, theta_order,
                       [&](Index e, std::size_t, double weight, const ElementPointFrame<double>& f, const Mat3& E) {
                         if (e != current) {
                           gather(mesh, w, e, wc);
                           current = e;
                         }
                         const Mat3 W = f.basis_gradients * wc.transpose();
                         const Mat3 D = E.trace() * Mat3::Identity() - (E + E.transpose());
                         deformation += weight * W.cwiseProduct(D * f.projector).sum();
                         direct += weight * W.cwiseProduct(E).sum();
                       });
  r.rhs = deformation + direct;
  r.breakdown = {{"deformation_part", deformation}, {"gradient_part", direct}};
  finish(r);
  return r;
}

IdentityReport monotone_decomposition(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                      const NodalVector& x, int theta_order) {
  IdentityReport r;
  r.name = "monotone";
  r.theta_quadrature_order = theta_order;
  r.surface_quadrature_exactness = assembler.quadrature_exactness();
  const NodalVector e = x - x_star;
  r.lhs = (assembler.apply_Ax(x) - assembler.apply_Ax(x_star)).cwiseProduct(e).sum();
  r.scale = std::abs(quadratic_form(assembler.stiffness(x_star), e, e));

  double trace_part = 0, normal_part = 0;
  for_each_theta_point(assembler, x_star, x, theta_order,
                       [&](Index, std::size_t, double weight, const ElementPointFrame<double>& f, const Mat3& E) {
                         const double tr = E.trace();
                         trace_part += weight * (tr * tr - (E * E).trace());
                         normal_part += weight * (E * f.normal).squaredNorm();
                       });
  r.rhs = trace_part + normal_part;
  r.breakdown = {{"trace_part", trace_part}, {"normal_part", normal_part}};
  finish(r);
  return r;
}

double trace_functional(const SurfaceAssembler& assembler, const NodalVector& x_surface, const NodalVector& e) {
  if (e.rows() != x_surface.rows()) throw PreconditionError("trace_functional: size mismatch");
  const SurfaceMesh& mesh = assembler.mesh();
  Coeffs ec;
  Index current = -1;
  double total = 0;
  assembler.for_each_point(x_surface, assembler.quadrature_table(),
                           [&](Index el, std::size_t, double w, const ElementPointFrame<double>& f) {
                             if (el != current) {
                               gather(mesh, e, el, ec);
                               current = el;
                             }
                             const Mat3 E = f.basis_gradients * ec.transpose();
                             const double tr = E.trace();
                             total += w * f.area_element * (tr * tr - (E * E).trace());
                           });
  return total;
}

NormEquivalenceReport norm_equivalence_probe(const SurfaceAssembler& assembler, const NodalVector& x_star,
                                             const NodalVector& e, int trials, const std::vector<double>& thetas,
                                             std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("norm_equivalence_probe: need at least one trial");
  NormEquivalenceReport rep;
  rep.trials = trials;
  rep.thetas = thetas;
  rep.hypothesis_value = gradient_linf(assembler, x_star, e);
  if (rep.hypothesis_value > kNormEquivalenceHypothesis * (1 + 1e-12))
    throw PreconditionError("norm_equivalence_probe: |grad e|_inf = " + std::to_string(rep.hypothesis_value) +
                            " exceeds 1/2");

  const SurfaceMesh& mesh = assembler.mesh();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<NodalVector> ws(trials, NodalVector(mesh.node_count, 3));
  for (auto& w : ws)
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);

  struct Norms {
    std::vector<double> linf_value, linf_grad, l2_value, l2_grad;
  };
  auto measure = [&](const NodalVector& xt) {
    Norms n{std::vector<double>(trials, 0.0), std::vector<double>(trials, 0.0), {}, {}};
    Coeffs wc;
    std::vector<Coeffs> per_trial(trials);
    Index current = -1;
    auto visit = [&](const Tabulation& table) {
      current = -1;
      assembler.for_each_point(xt, table, [&](Index el, std::size_t q, double, const ElementPointFrame<double>& f) {
        if (el != current) {
          for (int s = 0; s < trials; ++s) gather(mesh, ws[s], el, per_trial[s]);
          current = el;
        }
        for (int s = 0; s < trials; ++s) {
          const Vec3 value = per_trial[s] * table.values.row(q).transpose();
          n.linf_value[s] = std::max(n.linf_value[s], value.norm());
          n.linf_grad[s] = std::max(n.linf_grad[s], (f.basis_gradients * per_trial[s].transpose()).norm());
        }
      });
    };
    visit(assembler.quadrature_table());
    visit(assembler.node_table());
    SparseSymMatrix m, a;
    assembler.mass_and_stiffness(xt, m, a);
    for (int s = 0; s < trials; ++s) {
      n.l2_value.push_back(std::sqrt(std::max(0.0, quadratic_form(m, ws[s], ws[s]))));
      n.l2_grad.push_back(std::sqrt(std::max(0.0, quadratic_form(a, ws[s], ws[s]))));
    }
    return n;
  };

  const Norms base = measure(x_star);
  const double inf = std::numeric_limits<double>::infinity();
  rep.linf_value = rep.linf_gradient = rep.l2_value = rep.l2_gradient = {inf, -inf};
  auto update = [](RatioRange& r, double v) {
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  };
  for (double theta : thetas) {
    const NodalVector xt = x_star + theta * e;
    const Norms cur = measure(xt);
    for (int s = 0; s < trials; ++s) {
      update(rep.linf_value, cur.linf_value[s] / base.linf_value[s]);
      update(rep.linf_gradient, cur.linf_grad[s] / base.linf_grad[s]);
      update(rep.l2_value, cur.l2_value[s] / base.l2_value[s]);
      update(rep.l2_gradient, cur.l2_grad[s] / base.l2_grad[s]);
    }
  }
  return rep;
}

DefectReport defect(const SurfaceAssembler& assembler, const NodalVector& x0, const Sphere& solution, double t,
                    const LinearSolveParams& params) {
  DefectReport rep;
  rep.t = t;
  const NodalVector x_star = exact_nodal(x0, solution, t);
  const NodalVector v_star = exact_velocity(x0, solution, t);
  const SparseSymMatrix m = assembler.mass(x_star);
  const NodalVector rhs = m * v_star + assembler.apply_Ax(x_star);
  rep.defect = solve_spd(m, rhs, params, nullptr, &v_star);
  rep.solve_residual = (m * rep.defect - rhs).norm() / rhs.norm();
  rep.norm_M_defect = std::sqrt(std::max(0.0, quadratic_form(m, rep.defect, rep.defect)));
  rep.h = mesh_size(assembler.mesh(), x_star).h_max;
  return rep;
}

bool residuals_settle(const std::vector<IdentityReport>& reports) {
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const double floor = kResidualFloor * reports[i].scale;
    if (reports[i].abs_residual > std::max(reports[i - 1].abs_residual, floor)) return false;
  }
  return true;
}

EOCTable eoc(const std::vector<std::pair<double, double>>& rows) {
  if (rows.size() < 2) throw PreconditionError("eoc: need at least two rows");
  EOCTable t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [h, v] = rows[i];
    if (!(v > 0)) throw PreconditionError("eoc: values must be positive");
    if (!(h > 0)) throw PreconditionError("eoc: mesh sizes must be positive");
    if (i > 0 && !(h < rows[i - 1].first)) throw PreconditionError("eoc: mesh sizes must strictly decrease");
    t.h.push_back(h);
    t.values.push_back(v);
  }
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    t.orders.push_back(std::log(t.values[i] / t.values[i + 1]) / std::log(t.h[i] / t.h[i + 1]));
  return t;
}

NodalVector random_field(Index nodes, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  NodalVector e(nodes, 3);
  for (Index i = 0; i < nodes; ++i)
    for (int c = 0; c < 3; ++c) e(i, c) = uni(rng);
  const double m = e.rowwise().norm().maxCoeff();
  return m > 0 ? NodalVector((amplitude / m) * e) : e;
}

nlohmann::json to_json(const IdentityReport& r) {
  nlohmann::json j{{"identity", r.name},
                   {"lhs", r.lhs},
                   {"rhs", r.rhs},
                   {"abs_residual", r.abs_residual},
                   {"rel_residual", r.rel_residual},
                   {"theta_quadrature_order", r.theta_quadrature_order},
                   {"surface_quadrature_exactness", r.surface_quadrature_exactness}};
  auto& parts = j["breakdown"] = nlohmann::json::object();
  for (const auto& [k, v] : r.breakdown) parts[k] = v;
  return j;
}

nlohmann::json to_json(const NormEquivalenceReport& r) {
  auto range = [](const RatioRange& x) { return nlohmann::json{{"min", x.min}, {"max", x.max}}; };
  return {{"hypothesis_value", r.hypothesis_value}, {"trials", r.trials},
          {"thetas", r.thetas},                     {"linf_value", range(r.linf_value)},
          {"linf_gradient", range(r.linf_gradient)}, {"l2_value", range(r.l2_value)},
          {"l2_gradient", range(r.l2_gradient)}};
}

nlohmann::json to_json(const DefectReport& r) {
  return {{"t", r.t}, {"norm_M_defect", r.norm_M_defect}, {"h", r.h}, {"solve_residual", r.solve_residual}};
}

nlohmann::json to_json(const EOCTable& t) { return {{"h", t.h}, {"values", t.values}, {"orders", t.orders}}; }

std::string identity_csv_header() {
  return "identity,h,k,theta_order,quad_exactness,lhs,rhs,abs_residual,rel_residual,parts";
}

std::string csv_row(const IdentityReport& r, double h, int degree) {
  std::ostringstream os;
  os << r.name << ',' << format_scientific(h) << ',' << degree << ',' << r.theta_quadrature_order << ','
     << r.surface_quadrature_exactness << ',' << format_scientific(r.lhs) << ',' << format_scientific(r.rhs) << ','
     << format_scientific(r.abs_residual) << ',' << format_scientific(r.rel_residual) << ',';
  for (std::size_t i = 0; i < r.breakdown.size(); ++i)
    os << (i ? ";" : "") << r.breakdown[i].first << '=' << format_scientific(r.breakdown[i].second);
  return os.str();
}

}  // namespace esfem
