#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinnse {

/// Configuration / contract violations (bad shapes, bad specs, bad CLI input).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent data files.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failures (divergence, non-finite losses, singular solves).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

#define PINNSE_CHECK(cond, msg)                                        \
    do {                                                               \
        if (!(cond)) throw ::pinnse::ConfigError(std::string(msg));    \
    } while (0)

#define PINNSE_CHECK_DATA(cond, msg)                                   \
    do {                                                               \
        if (!(cond)) throw ::pinnse::DataError(std::string(msg));      \
    } while (0)

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

/// Pooling over the snapshot axis of a Deep Set encoder. Each kind is
/// permutation invariant over rows; mean_square divides by the valid row
/// count, not the padded length.
enum class PoolKind : uint8_t { mean_square, sum, sum_abs };

inline const char* pool_kind_name(PoolKind k) {
    switch (k) {
        case PoolKind::mean_square: return "mean_square";
        case PoolKind::sum: return "sum";
        case PoolKind::sum_abs: return "sum_abs";
    }
    return "?";
}

inline PoolKind pool_kind_from(const std::string& s) {
    if (s == "mean_square") return PoolKind::mean_square;
    if (s == "sum") return PoolKind::sum;
    if (s == "sum_abs") return PoolKind::sum_abs;
    throw ConfigError("unknown pooling kind: " + s);
}

enum class ActivationKind : uint8_t { gelu, swish, sin_swish, gelu_sin };

inline const char* activation_name(ActivationKind k) {
    switch (k) {
        case ActivationKind::gelu: return "gelu";
        case ActivationKind::swish: return "swish";
        case ActivationKind::sin_swish: return "sin_swish";
        case ActivationKind::gelu_sin: return "gelu_sin";
    }
    return "?";
}

inline ActivationKind activation_from(const std::string& s) {
    if (s == "gelu") return ActivationKind::gelu;
    if (s == "swish") return ActivationKind::swish;
    if (s == "sin_swish") return ActivationKind::sin_swish;
    if (s == "gelu_sin") return ActivationKind::gelu_sin;
    throw ConfigError("unknown activation kind: " + s);
}

}  // namespace pinnse
