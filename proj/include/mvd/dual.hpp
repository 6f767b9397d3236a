#pragma once

#include <array>
#include <cmath>

namespace mvd {

/// Forward-mode dual number with N tangent directions. Used for the small
/// per-pixel derivative chains in the rasterizer backward pass.
template <int N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {} // NOLINT: implicit lift of constants

    static Dual variable(double value, int index)
    {
        Dual r(value);
        r.d[index] = 1.0;
        return r;
    }

    Dual& operator+=(const Dual& o)
    {
        v += o.v;
        for (int i = 0; i < N; ++i)
            d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o)
    {
        v -= o.v;
        for (int i = 0; i < N; ++i)
            d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o)
    {
        for (int i = 0; i < N; ++i)
            d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o)
    {
        const double inv = 1.0 / o.v;
        const double q = v * inv;
        for (int i = 0; i < N; ++i)
            d[i] = (d[i] - q * o.d[i]) * inv;
        v = q;
        return *this;
    }
};

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double b, const Dual<N>& a) { return Dual<N>(b) - a; }
template <int N> Dual<N> operator*(Dual<N> a, double b)
{
    a.v *= b;
    for (auto& x : a.d)
        x *= b;
    return a;
}
template <int N> Dual<N> operator*(double b, Dual<N> a) { return a * b; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> Dual<N> operator/(double b, const Dual<N>& a) { return Dual<N>(b) / a; }
template <int N> Dual<N> operator-(Dual<N> a)
{
    a.v = -a.v;
    for (auto& x : a.d)
        x = -x;
    return a;
}

template <int N> Dual<N> sqrt(const Dual<N>& a)
{
    Dual<N> r(std::sqrt(a.v));
    const double k = r.v > 0.0 ? 0.5 / r.v : 0.0;
    for (int i = 0; i < N; ++i)
        r.d[i] = a.d[i] * k;
    return r;
}

template <int N> Dual<N> exp(const Dual<N>& a)
{
    Dual<N> r(std::exp(a.v));
    for (int i = 0; i < N; ++i)
        r.d[i] = a.d[i] * r.v;
    return r;
}

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N>& x) { return x.v; }

} // namespace mvd
