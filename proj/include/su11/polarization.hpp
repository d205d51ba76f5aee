#pragma once

// Two-photon polarization algebra: Jones vectors, Bell states and
// tensor-square operators acting on the {HH, HV, VH, VV} pair basis.
//
// Basis index = 2 * signal + idler, with H = 0 and V = 1. The signal photon
// is the higher-frequency half of the pair (omega > Omega / 2).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace su11 {

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar = double>
using JonesVector = Eigen::Matrix<Complex<Scalar>, 2, 1>;

template <typename Scalar = double>
using JonesMatrix = Eigen::Matrix<Complex<Scalar>, 2, 2>;

template <typename Scalar = double>
using PairAmplitudes = Eigen::Matrix<Complex<Scalar>, 4, 1>;

template <typename Scalar = double>
using PairMatrix = Eigen::Matrix<Complex<Scalar>, 4, 4>;

enum PairIndex : int { kHH = 0, kHV = 1, kVH = 2, kVV = 3 };

enum class BellKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

enum class WaveplateKind { Half, Quarter };

constexpr std::string_view to_string(BellKind kind) {
    switch (kind) {
        case BellKind::PhiPlus: return "PhiPlus";
        case BellKind::PhiMinus: return "PhiMinus";
        case BellKind::PsiPlus: return "PsiPlus";
        case BellKind::PsiMinus: return "PsiMinus";
    }
    return "?";
}

/// Pair state. When `normalized` is false the amplitudes carry the
/// parametric gain scale and are not renormalized anywhere.
template <typename Scalar = double>
struct BiphotonPolarState {
    PairAmplitudes<Scalar> c = PairAmplitudes<Scalar>::Zero();
    bool normalized = true;

    Scalar norm_squared() const { return c.squaredNorm(); }
    const Complex<Scalar>& operator[](int k) const { return c(k); }
};

/// U and its tensor square U (x) U acting on both photons.
template <typename Scalar = double>
struct TwoPhotonOperator {
    JonesMatrix<Scalar> single;
    PairMatrix<Scalar> pair;
};

namespace detail {

template <typename Scalar>
bool all_finite(const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m(i).real()) || !std::isfinite(m(i).imag())) return false;
    }
    return true;
}

template <typename Scalar>
JonesMatrix<Scalar> rotation_matrix(Scalar theta) {
    const Scalar c = std::cos(theta);
    const Scalar s = std::sin(theta);
    JonesMatrix<Scalar> r;
    r << c, -s, s, c;
    return r;
}

// 1e-9 for double; loosened to a few ulps of 1 for narrower scalars.
template <typename Scalar>
constexpr Scalar default_tolerance() {
    return std::max(Scalar(1e-9), Scalar(64) * std::numeric_limits<Scalar>::epsilon());
}

}  // namespace detail

template <typename Scalar = double>
JonesVector<Scalar> jones_vector(Complex<Scalar> e_h, Complex<Scalar> e_v) {
    JonesVector<Scalar> v;
    v << e_h, e_v;
    if (!detail::all_finite<Scalar>(v)) throw std::invalid_argument("jones_vector: non-finite component");
    return v;
}

/// Linear polarization at `angle` from the H axis.
template <typename Scalar = double>
JonesVector<Scalar> linear_polarization(Scalar angle) {
    return jones_vector<Scalar>(std::cos(angle), std::sin(angle));
}

template <typename Scalar>
bool is_normalized(const JonesVector<Scalar>& v, Scalar tol = detail::default_tolerance<Scalar>()) {
    return std::abs(v.squaredNorm() - Scalar(1)) <= tol;
}

/// Relative pump phase arg(e_V) - arg(e_H).
template <typename Scalar>
Scalar pump_phase(const JonesVector<Scalar>& v) {
    return std::arg(v(1)) - std::arg(v(0));
}

template <typename Scalar = double>
BiphotonPolarState<Scalar> bell_state(BellKind kind) {
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    BiphotonPolarState<Scalar> s;
    switch (kind) {
        case BellKind::PhiPlus: s.c << r, 0, 0, r; break;
        case BellKind::PhiMinus: s.c << r, 0, 0, -r; break;
        case BellKind::PsiPlus: s.c << 0, r, r, 0; break;
        case BellKind::PsiMinus: s.c << 0, r, -r, 0; break;
    }
    return s;
}

/// Crossed type-0 crystals: the H crystal emits |HH> with amplitude
/// gain * e_H and the V crystal |VV> with gain * e_V. The pair amplitude is
/// linear in the pump field, so a -45 degree pump yields Phi-.
template <typename Scalar>
BiphotonPolarState<Scalar> pump_generation_vector(const JonesVector<Scalar>& pump, Scalar gain) {
    if (!is_normalized(pump)) throw std::invalid_argument("pump_generation_vector: pump not normalized");
    if (!std::isfinite(gain) || gain < 0) throw std::invalid_argument("pump_generation_vector: gain must be finite and >= 0");
    BiphotonPolarState<Scalar> s;
    s.c << gain * pump(0), Complex<Scalar>(0), Complex<Scalar>(0), gain * pump(1);
    s.normalized = false;
    return s;
}

template <typename Scalar>
PairMatrix<Scalar> tensor_square(const JonesMatrix<Scalar>& u) {
    PairMatrix<Scalar> m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) m(2 * i + j, 2 * k + l) = u(i, k) * u(j, l);
    return m;
}

/// Wraps a single-photon Jones matrix; rejects non-unitary input.
template <typename Scalar>
TwoPhotonOperator<Scalar> make_operator(const JonesMatrix<Scalar>& u) {
    if (!detail::all_finite<Scalar>(u)) throw std::invalid_argument("make_operator: non-finite matrix");
    const JonesMatrix<Scalar> defect = u * u.adjoint() - JonesMatrix<Scalar>::Identity();
    const Scalar tol = std::max(Scalar(1e-10), Scalar(64) * std::numeric_limits<Scalar>::epsilon());
    if (defect.cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("make_operator: matrix is not unitary");
    return {u, tensor_square(u)};
}

/// Common rotation of both photons' polarization by theta.
template <typename Scalar>
TwoPhotonOperator<Scalar> rotation_operator(Scalar theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("rotation_operator: non-finite angle");
    const JonesMatrix<Scalar> u = detail::rotation_matrix(theta);
    return {u, tensor_square(u)};
}

/// Linear retarder R(axis) diag(1, e^{i retardance}) R(-axis).
/// det = e^{i retardance}: -1 for a half-wave plate, i for a quarter-wave plate.
template <typename Scalar>
TwoPhotonOperator<Scalar> retarder_operator(Scalar axis, Scalar retardance) {
    if (!std::isfinite(axis) || !std::isfinite(retardance))
        throw std::invalid_argument("retarder_operator: non-finite argument");
    JonesMatrix<Scalar> d = JonesMatrix<Scalar>::Zero();
    d(0, 0) = 1;
    d(1, 1) = std::polar(Scalar(1), retardance);
    const JonesMatrix<Scalar> u = detail::rotation_matrix(axis) * d * detail::rotation_matrix(-axis);
    return {u, tensor_square(u)};
}

template <typename Scalar>
TwoPhotonOperator<Scalar> waveplate_operator(WaveplateKind kind, Scalar axis_angle) {
    if (kind == WaveplateKind::Half) {
        if (!std::isfinite(axis_angle)) throw std::invalid_argument("waveplate_operator: non-finite angle");
        // Closed form keeps the matrix real; equals retarder(axis, pi).
        const Scalar c = std::cos(2 * axis_angle);
        const Scalar s = std::sin(2 * axis_angle);
        JonesMatrix<Scalar> u;
        u << c, s, s, -c;
        return {u, tensor_square(u)};
    }
    return retarder_operator(axis_angle, std::numbers::pi_v<Scalar> / 2);
}

template <typename Scalar>
TwoPhotonOperator<Scalar> adjoint(const TwoPhotonOperator<Scalar>& op) {
    return {op.single.adjoint(), op.pair.adjoint()};
}

/// Operator product: `second` applied after `first`.
template <typename Scalar>
TwoPhotonOperator<Scalar> compose(const TwoPhotonOperator<Scalar>& second, const TwoPhotonOperator<Scalar>& first) {
    const JonesMatrix<Scalar> u = second.single * first.single;
    return {u, tensor_square(u)};
}

template <typename Scalar>
BiphotonPolarState<Scalar> apply_operator(const BiphotonPolarState<Scalar>& state, const TwoPhotonOperator<Scalar>& op) {
    return {op.pair * state.c, state.normalized};
}

template <typename Scalar>
BiphotonPolarState<Scalar> operator*(const TwoPhotonOperator<Scalar>& op, const BiphotonPolarState<Scalar>& state) {
    return apply_operator(state, op);
}

/// Differential phase on the VV amplitude (unequal crystal lengths).
template <typename Scalar>
BiphotonPolarState<Scalar> apply_birefringence(BiphotonPolarState<Scalar> state, Scalar delta) {
    state.c(kVV) *= std::polar(Scalar(1), delta);
    return state;
}

template <typename Scalar>
BiphotonPolarState<Scalar> normalize(const BiphotonPolarState<Scalar>& state) {
    const Scalar n = std::sqrt(state.norm_squared());
    if (!(n > 0)) throw std::invalid_argument("normalize: zero state");
    return {state.c / n, true};
}

template <typename Scalar>
bool is_normalized(const BiphotonPolarState<Scalar>& s, Scalar tol = detail::default_tolerance<Scalar>()) {
    return s.normalized && std::abs(s.norm_squared() - Scalar(1)) <= tol;
}

/// <a|b>; both arguments must be normalized states.
template <typename Scalar>
Complex<Scalar> overlap(const BiphotonPolarState<Scalar>& a, const BiphotonPolarState<Scalar>& b) {
    if (!is_normalized(a) || !is_normalized(b)) throw std::invalid_argument("overlap: unnormalized state");
    return a.c.dot(b.c);  // Eigen's dot conjugates the left operand
}

template <typename Scalar>
Scalar fidelity(const BiphotonPolarState<Scalar>& state, BellKind kind) {
    return std::norm(overlap(bell_state<Scalar>(kind), state));
}

}  // namespace su11
