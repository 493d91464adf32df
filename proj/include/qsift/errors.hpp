#pragma once

#include <stdexcept>
#include <string>

namespace qsift {

enum class errc {
    not_square_free,
    even_modulus,
    factorization_timeout,
    zero_divisor,
    non_coprime_moduli,
    non_coprime,
    not_divisor,
    zero_frequency,
    numerical_instability,
    cap_exceeded,
    empty_omega,
    degenerate_set,
    interval_contains_zero,
    overflow,
    bad_argument,
};

inline const char* errc_name(errc e) {
    switch (e) {
        case errc::not_square_free:        return "NotSquareFree";
        case errc::even_modulus:           return "EvenModulus";
        case errc::factorization_timeout:  return "FactorizationTimeout";
        case errc::zero_divisor:           return "ZeroDivisor";
        case errc::non_coprime_moduli:     return "NonCoprimeModuli";
        case errc::non_coprime:            return "NonCoprime";
        case errc::not_divisor:            return "NotDivisor";
        case errc::zero_frequency:         return "ZeroFrequency";
        case errc::numerical_instability:  return "NumericalInstability";
        case errc::cap_exceeded:           return "CapExceeded";
        case errc::empty_omega:            return "EmptyOmega";
        case errc::degenerate_set:         return "DegenerateSet";
        case errc::interval_contains_zero: return "IntervalContainsZero";
        case errc::overflow:               return "Overflow";
        case errc::bad_argument:           return "BadArgument";
    }
    return "Unknown";
}

class error : public std::runtime_error {
public:
    error(errc kind, const std::string& what)
        : std::runtime_error(std::string(errc_name(kind)) + ": " + what), kind_(kind) {}

    errc kind() const { return kind_; }

private:
    errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& what) {
    throw error(kind, what);
}

} // namespace qsift
