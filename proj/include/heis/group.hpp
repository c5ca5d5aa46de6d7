#pragma once

// Closed-form algebra and geometry of the Heisenberg group H = R^2 x R
// with multiplication twisted by the standard symplectic form
//   omega(v1, v2) = x1*y2 - x2*y1.
// All operations are exact formulas in IEEE doubles; every type is an
// immutable value and every function is pure.

#include <cmath>
#include <cstdint>

namespace heis {

// symplectic form on the horizontal plane
inline double omega(double x1, double y1, double x2, double y2) {
    return x1 * y2 - x2 * y1;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double omega(Vec2 a, Vec2 b) { return omega(a.x, a.y, b.x, b.y); }
inline double norm2(Vec2 a) { return std::sqrt(dot(a, a)); }

// group element g = (v, z) = (x, y, z)
struct GroupElement {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec2 planar() const { return {x, y}; }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

// Lie algebra element h = (a, c) = (a, b, c); horizontal part (a, b)
struct AlgebraVector {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    Vec2 horizontal() const { return {a, b}; }
};

// tangent vector v in T_g H, carried with its base point
struct TangentVector {
    GroupElement base;
    double v1 = 0.0;
    double v2 = 0.0;
    double v3 = 0.0;

    Vec2 planar() const { return {v1, v2}; }
};

enum class Side { Left, Right };

inline GroupElement identity() { return {0.0, 0.0, 0.0}; }

// (v1,z1)*(v2,z2) = (v1+v2, z1+z2 + omega(v1,v2)/2)
inline GroupElement multiply(const GroupElement& g1, const GroupElement& g2) {
    return {g1.x + g2.x, g1.y + g2.y,
            g1.z + g2.z + 0.5 * omega(g1.x, g1.y, g2.x, g2.y)};
}

inline GroupElement inverse(const GroupElement& g) { return {-g.x, -g.y, -g.z}; }

// differential of left multiplication L_k(g) = k^{-1} g (note the convention:
// L_k is translation by k^{-1}) and of right multiplication R_k(g) = g k.
// Both act on components identically:
//   d(v1, v2, v3) = (v1, v2, v3 + omega(v, k)/2),
// only the base point of the result differs (k^{-1} g vs g k).
inline TangentVector translate_differential(Side side, const GroupElement& k,
                                            const TangentVector& v) {
    GroupElement base = (side == Side::Left) ? multiply(inverse(k), v.base)
                                             : multiply(v.base, k);
    return {base, v.v1, v.v2, v.v3 + 0.5 * omega(v.v1, v.v2, k.x, k.y)};
}

// Ad_k(h) = (a, b, c + omega(a, k))
inline AlgebraVector adjoint(const GroupElement& k, const AlgebraVector& h) {
    return {h.a, h.b, h.c + omega(h.a, h.b, k.x, k.y)};
}

// [h1, h2] = (0, 0, omega(a1, a2)); step-2 nilpotent
inline AlgebraVector bracket(const AlgebraVector& h1, const AlgebraVector& h2) {
    return {0.0, 0.0, omega(h1.a, h1.b, h2.a, h2.b)};
}

// unique left-invariant extension of h evaluated at g:
//   h~(g) = (a, b, c + omega(x, a)/2).
// On the basis this is the frame X = dx - (y/2) dz, Y = dy + (x/2) dz, Z = dz.
inline TangentVector left_invariant_field(const AlgebraVector& h,
                                          const GroupElement& g) {
    return {g, h.a, h.b, h.c + 0.5 * omega(g.x, g.y, h.a, h.b)};
}

// flow of the left-invariant field h~ through g, i.e. g * (ta, tb, tc):
//   (x + at, y + bt, z + ct + (t/2) omega(x, a)).
// Satisfies curve(t+s) = integral_curve(h, curve(t), s) exactly and
// d/dt curve = h~(curve).
inline GroupElement integral_curve(const AlgebraVector& h, const GroupElement& g,
                                   double t) {
    return {g.x + h.a * t, g.y + h.b * t,
            g.z + h.c * t + 0.5 * t * omega(g.x, g.y, h.a, h.b)};
}

// exp(a, b, c) = (a, b, c) in exponential coordinates
inline GroupElement exp_map(const AlgebraVector& h) { return {h.a, h.b, h.c}; }

// Maurer-Cartan forms at k:
//   theta^l_k(v) = (v1, v2, v3 + omega(v, k)/2)
//   theta^r_k(v) = (v1, v2, v3 - omega(v, k)/2)
// related by theta^r_k(v) = Ad_{k^{-1}}(theta^l_k(v)).
inline AlgebraVector maurer_cartan(Side side, const GroupElement& k,
                                   const TangentVector& v) {
    double half = 0.5 * omega(v.v1, v.v2, k.x, k.y);
    if (side == Side::Left) return {v.v1, v.v2, v.v3 + half};
    return {v.v1, v.v2, v.v3 - half};
}

// homogeneous quasi-norm N(x,y,z) = sqrt(x^2 + y^2 + |z|);
// degree 1 under the dilation (x,y,z) -> (lx, ly, l^2 z)
inline double homogeneous_norm(const GroupElement& g) {
    return std::sqrt(g.x * g.x + g.y * g.y + std::fabs(g.z));
}

// rho(g1, g2) = N(g1^{-1} g2); left-invariant by construction
inline double homogeneous_distance(const GroupElement& g1, const GroupElement& g2) {
    return homogeneous_norm(multiply(inverse(g1), g2));
}

inline GroupElement dilate(double lambda, const GroupElement& g) {
    return {lambda * g.x, lambda * g.y, lambda * lambda * g.z};
}

}  // namespace heis
