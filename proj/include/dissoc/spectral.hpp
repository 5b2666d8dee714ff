#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/FFT>

namespace dissoc {

// Which ladder operator a field stands in for.  Annihilation-like fields
// transform with exp(-ikx), creation-like ones with exp(+ikx); getting this
// wrong flips momentum labels, so every transform call names its convention.
enum class FieldSign { annihilation, creation };

// Discrete Fourier machinery for one periodic grid of m points on [-L/2, L/2).
//
// Mode amplitudes are unitary: a_j = sqrt(dx/m) * sum_n f(x_n) exp(-i k_j x_n),
// so that sum_j |a_j|^2 == dx * sum_n |f|^2 exactly and |a_j|^2 is the
// occupation of lattice mode k_j.  The momentum grid is FFT-ordered:
// k_j = 2*pi*j/L for j < m/2 and 2*pi*(j-m)/L above.
//
// Instances hold FFT plans and scratch buffers and are not thread-safe;
// each worker owns one.
template <typename Scalar>
class Dft {
 public:
  using Complex = std::complex<Scalar>;
  using CArray = Eigen::Array<Complex, Eigen::Dynamic, 1>;
  using RArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  Dft(Eigen::Index m, Scalar box_length)
      : m_(m), box_length_(box_length), dx_(box_length / static_cast<Scalar>(m)) {
    assert(m >= 1);
    k_.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index shifted = (j < (m + 1) / 2) ? j : j - m;
      k_[j] = static_cast<Scalar>(2.0 * M_PI) * static_cast<Scalar>(shifted) / box_length;
    }
    // exp(+i k_j L/2): the phase that refers transforms to the grid origin at
    // -L/2.  For power-of-two m this is exactly (-1)^j.
    origin_phase_.resize(m);
    for (Eigen::Index j = 0; j < m; ++j)
      origin_phase_[j] = (j % 2 == 0) ? Complex(1, 0) : Complex(-1, 0);
    vin_.resize(m);
    vout_.resize(m);
  }

  Eigen::Index size() const { return m_; }
  Scalar dx() const { return dx_; }
  Scalar box_length() const { return box_length_; }
  const RArray& k() const { return k_; }

  // Raw periodic transforms: fwd is the plain unscaled DFT, inv its inverse
  // (scaled by 1/m), both without the origin phase.  Building blocks only.
  void raw_fwd(CArray& f) {
    if (m_ == 1) return;
    vin_ = f.matrix();
    fft_.fwd(vout_, vin_);
    f = vout_.array();
  }

  void raw_inv(CArray& f) {
    if (m_ == 1) return;
    vin_ = f.matrix();
    fft_.inv(vout_, vin_);
    f = vout_.array();
  }

  // Unitary mode amplitudes of a position-space field.
  CArray to_momentum(const CArray& f, FieldSign sign) {
    assert(f.size() == m_);
    CArray out;
    const Scalar unit = std::sqrt(dx_ / static_cast<Scalar>(m_));
    if (sign == FieldSign::annihilation) {
      out = f;
      raw_fwd(out);
      out *= origin_phase_ * unit;
    } else {
      out = f;
      raw_inv(out);
      out *= origin_phase_ * (unit * static_cast<Scalar>(m_));
    }
    return out;
  }

  // Inverse of to_momentum with the matching sign.
  CArray to_position(const CArray& modes, FieldSign sign) {
    assert(modes.size() == m_);
    CArray out = modes * origin_phase_;
    const Scalar root_dx_m = std::sqrt(dx_ * static_cast<Scalar>(m_));
    if (sign == FieldSign::annihilation) {
      raw_inv(out);
      out *= static_cast<Scalar>(m_) / root_dx_m;
    } else {
      raw_fwd(out);
      out *= Scalar(1) / root_dx_m;
    }
    return out;
  }

  // Momentum transform of a two-point function, one sign per axis
  // (row index = x, column index = x').
  CMatrix to_momentum_2d(const CMatrix& g, FieldSign row_sign, FieldSign col_sign) {
    assert(g.rows() == m_ && g.cols() == m_);
    CMatrix out = g;
    transform_cols(out, row_sign);
    transform_rows(out, col_sign);
    const Scalar unit = dx_ / static_cast<Scalar>(m_);
    out *= unit;
    return out;
  }

 private:
  // DFT along the row index (x) of every column, with origin phase, unscaled.
  void transform_cols(CMatrix& g, FieldSign sign) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      col_ = g.col(c).array();
      if (sign == FieldSign::annihilation) {
        raw_fwd(col_);
      } else {
        raw_inv(col_);
        col_ *= static_cast<Scalar>(m_);
      }
      g.col(c) = (col_ * origin_phase_).matrix();
    }
  }

  void transform_rows(CMatrix& g, FieldSign sign) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      col_ = g.row(r).transpose().array();
      if (sign == FieldSign::annihilation) {
        raw_fwd(col_);
      } else {
        raw_inv(col_);
        col_ *= static_cast<Scalar>(m_);
      }
      g.row(r) = (col_ * origin_phase_).matrix().transpose();
    }
  }

  Eigen::Index m_;
  Scalar box_length_, dx_;
  RArray k_;
  CArray origin_phase_;
  Eigen::FFT<Scalar> fft_;
  Eigen::Matrix<Complex, Eigen::Dynamic, 1> vin_, vout_;
  CArray col_;

 public:
  // exp(-i hbar k^2 dt / (2 mass)) on this grid: one kinetic step for an
  // annihilation-like field obeying df/dt = +i hbar/(2 mass) d^2f/dx^2.
  // Conjugate the result for the corresponding creation-like field.
  CArray kinetic_factors(Scalar dt, Scalar mass, Scalar hbar) const {
    CArray out(m_);
    for (Eigen::Index j = 0; j < m_; ++j) {
      const Scalar angle = -hbar * k_[j] * k_[j] * dt / (2 * mass);
      out[j] = Complex(std::cos(angle), std::sin(angle));
    }
    return out;
  }

  // Multiply each k-mode by factors(k); exact free evolution when the factors
  // come from kinetic_factors.  The origin phase cancels and is skipped.
  void apply_kinetic_1d(CArray& f, const CArray& factors) {
    assert(f.size() == m_ && factors.size() == m_);
    raw_fwd(f);
    f *= factors;
    raw_inv(f);
  }

  // Same for a two-point function: multiply mode (k, k') by
  // row_factors(k) * col_factors(k').
  void apply_kinetic_2d(CMatrix& g, const CArray& row_factors, const CArray& col_factors) {
    assert(g.rows() == m_ && g.cols() == m_);
    for (Eigen::Index c = 0; c < m_; ++c) {
      col_ = g.col(c).array();
      raw_fwd(col_);
      g.col(c) = (col_ * row_factors).matrix();
    }
    for (Eigen::Index r = 0; r < m_; ++r) {
      col_ = g.row(r).transpose().array();
      raw_fwd(col_);
      col_ *= col_factors;
      raw_inv(col_);
      g.row(r) = col_.matrix().transpose();
    }
    for (Eigen::Index c = 0; c < m_; ++c) {
      col_ = g.col(c).array();
      raw_inv(col_);
      g.col(c) = col_.matrix();
    }
  }
};

}  // namespace dissoc
