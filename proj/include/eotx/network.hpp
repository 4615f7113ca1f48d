#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "eotx/params.hpp"

namespace eotx {

using Mat6 = Eigen::Matrix<cplx, 6, 6>;
using Mat6x10 = Eigen::Matrix<cplx, 6, 10>;
using Mat4x6 = Eigen::Matrix<cplx, 4, 6>;
using Mat4x10 = Eigen::Matrix<cplx, 4, 10>;
using Mat4x10r = Eigen::Matrix<double, 4, 10>;

/// Output rows of the scattering matrix.
enum Out : int { out_e = 0, out_o, out_e_dag, out_o_dag };
/// Input columns; daggered copies follow at +5.
enum In : int {
  in_e_ext = 0, in_e_int, in_o_ext, in_o_int, in_m,
  in_e_ext_dag, in_e_int_dag, in_o_ext_dag, in_o_int_dag, in_m_dag
};
/// Mode basis [a_e, a_o, b, a_e+, a_o+, b+].
enum Basis : int { a_e = 0, a_o, b_m, a_e_dag, a_o_dag, b_m_dag };

struct SystemMatrices {
  Mat6 a_mat = Mat6::Zero();
  Mat6x10 b_mat = Mat6x10::Zero();
  Mat4x6 c_mat = Mat4x6::Zero();
  Mat4x10r d_mat = Mat4x10r::Zero();
};

struct ScatteringMatrix {
  double omega = 0;
  Mat4x10 upsilon = Mat4x10::Zero();

  cplx operator()(int out, int in) const { return upsilon(out, in); }
};

/// Raised when the dynamical matrix is unstable or (-i w I - A) is singular.
class InstabilityError : public std::runtime_error {
public:
  InstabilityError(const std::string& what, cplx eig) : std::runtime_error(what), eigenvalue(eig) {}
  cplx eigenvalue;
};

struct OutputCoefficients {
  cplx alpha_ee, alpha_oo, alpha_eo, alpha_em, alpha_om;
  cplx alpha_t_ee, alpha_t_oo, alpha_t_eo, alpha_t_oe, alpha_t_em, alpha_t_om;

  cplx alpha_oe() const { return alpha_eo; }
};

inline SystemMatrices build_matrices(const DeviceParams& p, const DriveConfig& d,
                                     const DerivedDrive& dd) {
  const cplx i(0, 1);
  const double ke = p.kappa(Mode::e), ko = p.kappa(Mode::o), gm = p.gamma_m();
  const double ge = dd.g_e, go = dd.g_o;
  SystemMatrices s;
  auto& A = s.a_mat;
  A(a_e, a_e) = -(ke / 2 + i * d.delta_e);
  A(a_e, b_m) = -i * ge;
  A(a_e, b_m_dag) = -i * ge;
  A(a_o, a_o) = -(ko / 2 + i * d.delta_o);
  A(a_o, b_m) = -i * go;
  A(a_o, b_m_dag) = -i * go;
  A(b_m, a_e) = -i * ge;
  A(b_m, a_o) = -i * go;
  A(b_m, b_m) = -(gm / 2 + i * p.omega_m);
  A(b_m, a_e_dag) = -i * ge;
  A(b_m, a_o_dag) = -i * go;
  A(a_e_dag, b_m) = i * ge;
  A(a_e_dag, a_e_dag) = -(ke / 2 - i * d.delta_e);
  A(a_e_dag, b_m_dag) = i * ge;
  A(a_o_dag, b_m) = i * go;
  A(a_o_dag, a_o_dag) = -(ko / 2 - i * d.delta_o);
  A(a_o_dag, b_m_dag) = i * go;
  A(b_m_dag, a_e) = i * ge;
  A(b_m_dag, a_o) = i * go;
  A(b_m_dag, a_e_dag) = i * ge;
  A(b_m_dag, a_o_dag) = i * go;
  A(b_m_dag, b_m_dag) = -(gm / 2 - i * p.omega_m);

  const double se_ex = std::sqrt(p.kappa_ex_e), se_in = std::sqrt(p.kappa_in_e);
  const double so_ex = std::sqrt(p.kappa_ex_o), so_in = std::sqrt(p.kappa_in_o);
  for (int off : {0, 5}) {
    const int row = off == 0 ? 0 : 3;
    s.b_mat(row + 0, off + 0) = se_ex;
    s.b_mat(row + 0, off + 1) = se_in;
    s.b_mat(row + 1, off + 2) = so_ex;
    s.b_mat(row + 1, off + 3) = so_in;
    s.b_mat(row + 2, off + 4) = std::sqrt(gm);
  }
  s.c_mat(out_e, a_e) = se_ex;
  s.c_mat(out_o, a_o) = so_ex;
  s.c_mat(out_e_dag, a_e_dag) = se_ex;
  s.c_mat(out_o_dag, a_o_dag) = so_ex;
  s.d_mat(out_e, in_e_ext) = 1;
  s.d_mat(out_o, in_o_ext) = 1;
  s.d_mat(out_e_dag, in_e_ext_dag) = 1;
  s.d_mat(out_o_dag, in_o_ext_dag) = 1;
  return s;
}

inline SystemMatrices build_matrices(const DeviceParams& p, const DriveConfig& d) {
  return build_matrices(p, d, derive(p, d));
}

inline Eigen::Matrix<cplx, 6, 1> eigenvalues(const SystemMatrices& s) {
  Eigen::ComplexEigenSolver<Mat6> es(s.a_mat, false);
  return es.eigenvalues();
}

/// Eigenvalue with the largest real part.
inline cplx dominant_eigenvalue(const SystemMatrices& s) {
  auto ev = eigenvalues(s);
  Eigen::Index k = 0;
  ev.real().maxCoeff(&k);
  return ev(k);
}

inline bool is_stable(const SystemMatrices& s) { return dominant_eigenvalue(s).real() < 0; }

inline void require_stable(const SystemMatrices& s) {
  const cplx ev = dominant_eigenvalue(s);
  if (ev.real() >= 0) {
    std::ostringstream os;
    os << "unstable dynamical matrix: eigenvalue " << ev.real() << (ev.imag() < 0 ? " - " : " + ")
       << std::abs(ev.imag()) << "i rad/s";
    throw InstabilityError(os.str(), ev);
  }
}

/// (-i w I - A)^-1 B via LU solve.
inline Mat6x10 response(const SystemMatrices& s, double omega) {
  const Mat6 m = cplx(0, -omega) * Mat6::Identity() - s.a_mat;
  Eigen::PartialPivLU<Mat6> lu(m);
  if (!(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon())) {
    auto ev = eigenvalues(s);
    Eigen::Index k = 0;
    (ev.array() + cplx(0, omega)).abs().minCoeff(&k);
    std::ostringstream os;
    os << "singular (-i w I - A) at omega = " << omega << " rad/s; eigenvalue " << ev(k);
    throw InstabilityError(os.str(), ev(k));
  }
  return lu.solve(s.b_mat);
}

inline ScatteringMatrix scattering_at(const SystemMatrices& s, double omega) {
  ScatteringMatrix r;
  r.omega = omega;
  r.upsilon = s.c_mat * response(s, omega) - s.d_mat.cast<cplx>();
  return r;
}

/// Closed-form output coefficients.
inline OutputCoefficients analytic_coefficients(const DeviceParams& p, const DriveConfig& d,
                                                double omega) {
  const auto dd = derive(p, d, omega);
  const cplx i(0, 1);
  const double ke = p.kappa(Mode::e), ko = p.kappa(Mode::o), gm = p.gamma_m();
  const double ge2 = dd.g_e * dd.g_e, go2 = dd.g_o * dd.g_o;
  const cplx ce = susceptibility(p, d, Kind::e, omega), cet = susceptibility(p, d, Kind::e, omega, true);
  const cplx co = susceptibility(p, d, Kind::o, omega), cot = susceptibility(p, d, Kind::o, omega, true);
  const cplx cm = susceptibility(p, d, Kind::m, omega), cmt = susceptibility(p, d, Kind::m, omega, true);
  const cplx dm = cm - cmt;
  const cplx den = 1.0 + dm * (ge2 * (ce - cet) + go2 * (co - cot));
  const cplx mm = -dm;
  const double geo = dd.g_e * dd.g_o, skk = std::sqrt(ke * ko);

  OutputCoefficients c;
  c.alpha_ee = ke * ce * (1.0 + dm * (go2 * (co - cot) - ge2 * cet)) / den;
  c.alpha_oo = ko * co * (1.0 + dm * (ge2 * (ce - cet) - go2 * cot)) / den;
  c.alpha_eo = skk * ce * co * geo * mm / den;
  c.alpha_em = -i * std::sqrt(ke * gm) * dd.g_e * ce * cm / den;
  c.alpha_om = -i * std::sqrt(ko * gm) * dd.g_o * co * cm / den;
  c.alpha_t_ee = ke * ce * cet * ge2 * mm / den;
  c.alpha_t_oo = ko * co * cot * go2 * mm / den;
  c.alpha_t_eo = skk * ce * cot * geo * mm / den;
  c.alpha_t_oe = skk * cet * co * geo * mm / den;
  c.alpha_t_em = -i * std::sqrt(ke * gm) * dd.g_e * ce * cmt / den;
  c.alpha_t_om = -i * std::sqrt(ko * gm) * dd.g_o * co * cmt / den;
  return c;
}

struct CommutatorResiduals {
  double e = 0;
  double o = 0;
};

/// LHS - 1 of the output commutator sum rules for the e and o rows.
inline CommutatorResiduals commutator_residuals(const ScatteringMatrix& sm) {
  auto row = [&](int r) {
    double s = 0;
    for (int k = 0; k < 5; ++k) s += std::norm(sm.upsilon(r, k)) - std::norm(sm.upsilon(r, k + 5));
    return s - 1.0;
  };
  return {row(out_e), row(out_o)};
}

/// Row-major CSV with interleaved re,im columns.
template <typename Derived>
void write_matrix_csv(std::ostream& os, const Eigen::MatrixBase<Derived>& m) {
  const auto old = os.precision(17);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    os << (c ? "," : "") << "re_" << c << ",im_" << c;
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const cplx v = cplx(m(r, c));
      os << (c ? "," : "") << v.real() << ',' << v.imag();
    }
    os << '\n';
  }
  os.precision(old);
}

} // namespace eotx
