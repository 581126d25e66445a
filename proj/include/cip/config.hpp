#pragma once

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "cip/study.hpp"

namespace cip {

// Flat key = value run configuration; '#' comments, unknown keys rejected.
struct RunConfig {
    std::string scenario;
    int degree = 0;
    std::vector<int> neles;
    double gamma = 0.01;
    double theta = 0.5;
    CipVariant variant = CipVariant::abs_beta;
    ErrorSelection errors;
    double weight_K = 2.0;
    double weight_r0 = 0.2;
    Vec2 weight_center{0.0, 0.0};
    bool weight_center_set = false;
    std::string output_dir = ".";
    long snapshot_stride = 0;
    bool compare_unstabilized = false;

    RunParams params() const {
        RunParams p;
        p.degree = degree;
        p.gamma = gamma;
        p.theta = theta;
        p.variant = variant;
        p.errors = errors;
        p.weight_K = weight_K;
        p.weight_r0 = weight_r0;
        p.weight_center = weight_center;
        p.weight_center_set = weight_center_set;
        p.snapshot_stride = snapshot_stride;
        return p;
    }
};

namespace detail {

inline std::runtime_error config_error(int line, const std::string& msg) {
    return std::runtime_error("config error at line " + std::to_string(line) + ": " + msg);
}

inline double config_number(const std::string& v, int line) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size()) {
        throw config_error(line, "malformed number '" + v + "'");
    }
    return x;
}

inline long config_integer(const std::string& v, int line) {
    const double x = config_number(v, line);
    const long i = static_cast<long>(x);
    if (static_cast<double>(i) != x) {
        throw config_error(line, "expected integer, got '" + v + "'");
    }
    return i;
}

inline bool config_bool(const std::string& v, int line) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw config_error(line, "expected boolean, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

} // namespace detail

inline ErrorSelection parse_error_selection(const std::string& value, int line) {
    ErrorSelection sel;
    sel.global_l2 = false;
    for (const auto& name : detail::split_list(value)) {
        if (name == "global_l2") {
            sel.global_l2 = true;
        } else if (name == "local_l2") {
            sel.local_l2 = true;
        } else if (name == "matderiv") {
            sel.matderiv = true;
        } else if (name == "stab_seminorm") {
            sel.stab_seminorm = true;
        } else if (name == "weighted_l2") {
            sel.weighted_l2 = true;
        } else if (name == "dual_norm") {
            sel.dual_norm = true;
        } else if (name == "estimator") {
            sel.estimator = true;
        } else {
            throw detail::config_error(line, "unknown error measure '" + name + "'");
        }
    }
    return sel;
}

inline RunConfig parse_config_stream(std::istream& in) {
    RunConfig cfg;
    bool have_scenario = false, have_degree = false, have_nele = false;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) {
            raw = raw.substr(0, hash);
        }
        const auto first = raw.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto eq = raw.find('=');
        if (eq == std::string::npos) {
            throw detail::config_error(line_no, "expected 'key = value'");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(raw.substr(0, eq));
        const std::string value = trim(raw.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw detail::config_error(line_no, "expected 'key = value'");
        }

        if (key == "scenario") {
            cfg.scenario = value;
            have_scenario = true;
        } else if (key == "degree") {
            const long k = detail::config_integer(value, line_no);
            if (k != 1 && k != 2) {
                throw detail::config_error(line_no, "degree must be 1 or 2");
            }
            cfg.degree = static_cast<int>(k);
            have_degree = true;
        } else if (key == "nele") {
            cfg.neles.clear();
            for (const auto& tok : detail::split_list(value)) {
                const long n = detail::config_integer(tok, line_no);
                if (n <= 0) {
                    throw detail::config_error(line_no, "nele values must be positive");
                }
                cfg.neles.push_back(static_cast<int>(n));
            }
            if (cfg.neles.empty()) {
                throw detail::config_error(line_no, "empty nele list");
            }
            have_nele = true;
        } else if (key == "gamma") {
            cfg.gamma = detail::config_number(value, line_no);
            if (cfg.gamma < 0.0) {
                throw detail::config_error(line_no, "gamma must be >= 0");
            }
        } else if (key == "theta") {
            cfg.theta = detail::config_number(value, line_no);
            if (cfg.theta < 0.5 || cfg.theta > 1.0) {
                throw detail::config_error(line_no, "theta must be in [0.5, 1]");
            }
        } else if (key == "cip_variant") {
            if (value == "abs_beta") {
                cfg.variant = CipVariant::abs_beta;
            } else if (value == "abs_beta_n") {
                cfg.variant = CipVariant::abs_beta_n;
            } else {
                throw detail::config_error(line_no, "cip_variant must be abs_beta or abs_beta_n");
            }
        } else if (key == "errors") {
            cfg.errors = parse_error_selection(value, line_no);
        } else if (key == "K") {
            cfg.weight_K = detail::config_number(value, line_no);
            if (cfg.weight_K <= 1.0) {
                throw detail::config_error(line_no, "K must be > 1");
            }
        } else if (key == "r0") {
            cfg.weight_r0 = detail::config_number(value, line_no);
            if (cfg.weight_r0 <= 0.0) {
                throw detail::config_error(line_no, "r0 must be > 0");
            }
        } else if (key == "x0") {
            const auto parts = detail::split_list(value);
            if (parts.size() != 2) {
                throw detail::config_error(line_no, "x0 needs two coordinates");
            }
            cfg.weight_center = {detail::config_number(parts[0], line_no),
                                 detail::config_number(parts[1], line_no)};
            cfg.weight_center_set = true;
        } else if (key == "output_dir") {
            cfg.output_dir = value;
        } else if (key == "snapshot_stride") {
            const long s = detail::config_integer(value, line_no);
            if (s < 0) {
                throw detail::config_error(line_no, "snapshot_stride must be >= 0");
            }
            cfg.snapshot_stride = s;
        } else if (key == "compare_unstabilized") {
            cfg.compare_unstabilized = detail::config_bool(value, line_no);
        } else {
            throw detail::config_error(line_no, "unknown key '" + key + "'");
        }
    }
    if (!have_scenario) {
        throw std::runtime_error("config error: missing mandatory key 'scenario'");
    }
    if (!have_degree) {
        throw std::runtime_error("config error: missing mandatory key 'degree'");
    }
    if (!have_nele) {
        throw std::runtime_error("config error: missing mandatory key 'nele'");
    }
    make_scenario(cfg.scenario); // validates the name
    return cfg;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("parse_config: cannot open '" + path + "'");
    }
    return parse_config_stream(in);
}

} // namespace cip
