#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osteorad/error.hpp"

namespace osteorad::ml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline void check_features(const Matrix& x) {
    if (x.rows() == 0 || x.cols() == 0) throw DataError("empty feature matrix");
    if (!x.allFinite()) throw NumericError("non-finite feature value");
}

/// Training preconditions shared by every family: finite X, binary y, both classes.
inline void check_training(const Matrix& x, const Labels& y) {
    check_features(x);
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw DataError("label count differs from row count");
    std::size_t pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
        pos += static_cast<std::size_t>(v);
    }
    if (pos == 0 || pos == y.size()) throw DataError("training labels contain a single class");
}

inline Vector to_vector(const Labels& y) {
    Vector v(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
    return v;
}

inline Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[r]);
    return out;
}

/// Ordered hyperparameter assignment. Infinity (e.g. unlimited depth) is
/// written as JSON null.
struct Params {
    std::vector<std::pair<std::string, double>> values;

    double get(std::string_view name) const {
        for (const auto& [k, v] : values) {
            if (k == name) return v;
        }
        throw ConfigError("missing hyperparameter '" + std::string(name) + "'");
    }

    friend bool operator==(const Params&, const Params&) = default;
};

inline nlohmann::ordered_json param_value_json(double v) {
    if (std::isinf(v)) return nullptr;
    return v;
}

inline double param_value_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    if (!j.is_number()) throw ConfigError("hyperparameter values must be numbers or null");
    return j.get<double>();
}

inline nlohmann::ordered_json to_json(const Params& p) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : p.values) j[k] = param_value_json(v);
    return j;
}

inline std::vector<double> vec_of(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector vector_from(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::ordered_json matrix_json(const Matrix& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(row);
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw DataError("ragged matrix in model document");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

}  // namespace osteorad::ml
