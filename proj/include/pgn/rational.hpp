#pragma once

// Exact rational arithmetic on 128-bit integers with overflow detection.
// All poset comparisons and convex-hull equalities in this project must be
// decided without tolerance, so every combinatorial quantity is a Rational.

#include <cstdint>
#include <compare>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pgn {

class RationalOverflow : public std::overflow_error {
public:
    RationalOverflow() : std::overflow_error("rational arithmetic overflow") {}
};

class Rational {
public:
    using Int = __int128;

    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(long long n, long long d) : num_(n), den_(d) { normalize(); }

    // Parses "p", "-p", "p/q". Throws std::invalid_argument on bad input.
    static Rational parse(const std::string& s);

    Int num() const { return num_; }
    Int den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_negative() const { return num_ < 0; }
    bool is_positive() const { return num_ > 0; }
    bool is_integer() const { return den_ == 1; }

    Rational operator-() const { Rational r; r.num_ = -num_; r.den_ = den_; return r; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        Int g = gcd_int(a.den_, b.den_);
        Int bd = b.den_ / g;
        Int n = checked_add(checked_mul(a.num_, bd), checked_mul(b.num_, a.den_ / g));
        Int d = checked_mul(a.den_, bd);
        return make(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        Int g1 = gcd_int(a.num_, b.den_);
        Int g2 = gcd_int(b.num_, a.den_);
        Int n = checked_mul(a.num_ / g1, b.num_ / g2);
        Int d = checked_mul(a.den_ / g2, b.den_ / g1);
        return make(n, d);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        Rational inv;
        inv.num_ = b.den_;
        inv.den_ = b.num_;
        if (inv.den_ < 0) { inv.num_ = -inv.num_; inv.den_ = -inv.den_; }
        return a * inv;
    }

    Rational& operator+=(const Rational& b) { *this = *this + b; return *this; }
    Rational& operator-=(const Rational& b) { *this = *this - b; return *this; }
    Rational& operator*=(const Rational& b) { *this = *this * b; return *this; }
    Rational& operator/=(const Rational& b) { *this = *this / b; return *this; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return checked_mul(a.num_, b.den_) < checked_mul(b.num_, a.den_);
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    Rational abs() const { return num_ < 0 ? -*this : *this; }

    // max(x, 0).
    Rational positive_part() const { return num_ > 0 ? *this : Rational(0); }

    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    // Canonical string: "p" when integral, "p/q" otherwise, sign on numerator.
    std::string str() const;

    static Rational min(const Rational& a, const Rational& b) { return a < b ? a : b; }
    static Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

private:
    Int num_;
    Int den_;

    static Rational make(Int n, Int d) { Rational r; r.num_ = n; r.den_ = d; r.normalize_reduced(); return r; }

    static Int gcd_int(Int a, Int b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b) { Int t = a % b; a = b; b = t; }
        return a;
    }

    static Int checked_mul(Int a, Int b) {
        Int r;
        if (__builtin_mul_overflow(a, b, &r)) throw RationalOverflow();
        return r;
    }
    static Int checked_add(Int a, Int b) {
        Int r;
        if (__builtin_add_overflow(a, b, &r)) throw RationalOverflow();
        return r;
    }

    void normalize() {
        if (den_ == 0) throw std::domain_error("rational with zero denominator");
        normalize_reduced();
    }
    void normalize_reduced() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        Int g = gcd_int(num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }
};

inline Rational Rational::parse(const std::string& s) {
    auto parse_int = [](const std::string& t) -> Int {
        if (t.empty()) throw std::invalid_argument("empty rational component");
        size_t i = 0;
        bool neg = false;
        if (t[0] == '-' || t[0] == '+') { neg = (t[0] == '-'); i = 1; }
        if (i == t.size()) throw std::invalid_argument("bad rational: " + t);
        Int v = 0;
        for (; i < t.size(); ++i) {
            if (t[i] < '0' || t[i] > '9') throw std::invalid_argument("bad rational: " + t);
            Int d = t[i] - '0';
            if (__builtin_mul_overflow(v, (Int)10, &v) || __builtin_add_overflow(v, d, &v))
                throw RationalOverflow();
        }
        return neg ? -v : v;
    };
    auto slash = s.find('/');
    if (slash == std::string::npos) {
        Rational r;
        r.num_ = parse_int(s);
        r.den_ = 1;
        return r;
    }
    Rational r;
    r.num_ = parse_int(s.substr(0, slash));
    r.den_ = parse_int(s.substr(slash + 1));
    r.normalize();
    return r;
}

inline std::string Rational::str() const {
    auto int_str = [](Int v) {
        if (v == 0) return std::string("0");
        bool neg = v < 0;
        std::string out;
        // -INT128_MIN does not overflow in the loop below because we negate digit by digit.
        unsigned __int128 u = neg ? (unsigned __int128)(-(v + 1)) + 1 : (unsigned __int128)v;
        while (u) { out.push_back(char('0' + int(u % 10))); u /= 10; }
        if (neg) out.push_back('-');
        return std::string(out.rbegin(), out.rend());
    };
    if (den_ == 1) return int_str(num_);
    return int_str(num_) + "/" + int_str(den_);
}

} // namespace pgn
