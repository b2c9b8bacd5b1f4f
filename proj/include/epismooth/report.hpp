#pragma once

// Text output shared by the command-line tool: 17-significant-digit numbers,
// a JSON writer that keeps that precision, and ProbeReport serialization.

#include <cmath>
#include <cstdio>
#include <string>

#include "json.hpp"

#include "epismooth/types.hpp"
#include "epismooth/verify.hpp"

namespace epismooth::report {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0.0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Non-finite numbers become the strings "inf", "-inf" and "nan" so the
/// output stays valid JSON.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }

inline Json vector(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(number(v(i)));
    }
    return arr;
}

namespace detail {

inline void write(const Json& j, std::string& out) {
    switch (j.type()) {
    case Json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) {
                out += ',';
            }
            first = false;
            out += Json(it.key()).dump();
            out += ':';
            write(it.value(), out);
        }
        out += '}';
        break;
    }
    case Json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& e : j) {
            if (!first) {
                out += ',';
            }
            first = false;
            write(e, out);
        }
        out += ']';
        break;
    }
    case Json::value_t::number_float:
        out += format_double(j.get<double>());
        break;
    default:
        out += j.dump();
    }
}

} // namespace detail

/// Compact dump with every float printed as %.17g.
inline std::string dump(const Json& j) {
    std::string out;
    detail::write(j, out);
    return out;
}

inline Json to_json(const verify::ProbeReport& r) {
    Json j;
    j["probe"] = r.name;
    j["passed"] = r.passed;
    j["expect_failure"] = r.expect_failure;
    j["as_expected"] = r.as_expected();
    j["margin"] = number(r.margin);
    j["witness"] = r.witness ? vector(*r.witness) : Json(nullptr);
    Json metrics = Json::object();
    for (const auto& [k, v] : r.metrics) {
        metrics[k] = number(v);
    }
    j["metrics"] = metrics;
    if (!r.detail.empty()) {
        j["detail"] = r.detail;
    }
    return j;
}

} // namespace epismooth::report
