#include "ppfilter/link.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ppfilter {

namespace {

double parse_parameter(const std::string& text) {
    if (text == "inf" || text == "+inf" || text == "Inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) {
        throw std::invalid_argument("bad link parameter '" + text + "'");
    }
    return value;
}

} // namespace

LinkFunction LinkFunction::root(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
        throw std::invalid_argument("root link requires a finite c >= 0");
    }
    return {LinkFamily::root, c};
}

LinkFunction LinkFunction::logaffine(double c) {
    if (std::isnan(c)) {
        throw std::invalid_argument("logaffine link requires a numeric c");
    }
    return {LinkFamily::logaffine, c};
}

LinkFunction LinkFunction::parse(const std::string& text) {
    if (text == "log") return log();
    if (text == "identity") return identity();
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    if (colon == std::string::npos) {
        if (name == "root") return root(0.0);
        throw std::invalid_argument("unknown link family '" + text + "'");
    }
    const double c = parse_parameter(text.substr(colon + 1));
    if (name == "root") return root(c);
    if (name == "logaffine") return logaffine(c);
    throw std::invalid_argument("unknown link family '" + text + "'");
}

std::string LinkFunction::describe() const {
    std::ostringstream out;
    switch (family) {
    case LinkFamily::log: return "log";
    case LinkFamily::identity: return "identity";
    case LinkFamily::root: out << "root:" << c; break;
    case LinkFamily::logaffine:
        if (std::isinf(c)) return "logaffine:inf";
        out << "logaffine:" << c;
        break;
    }
    return out.str();
}

bool LinkFunction::continuously_differentiable() const noexcept {
    return family != LinkFamily::root || c > 1.0;
}

double LinkFunction::inverse(double rate) const {
    if (!(rate > 0.0)) {
        throw std::invalid_argument("link inverse needs a positive rate");
    }
    switch (family) {
    case LinkFamily::log: return std::log(rate);
    case LinkFamily::identity: return rate;
    case LinkFamily::root: return std::pow(rate, 1.0 / (c + 1.0));
    case LinkFamily::logaffine: {
        const double x = std::log(rate);
        if (x <= c) return x;
        return rate * std::exp(-c) + c - 1.0;
    }
    }
    return 0.0;
}

PhiValue phi(const LinkFunction& link, double x) {
    switch (link.family) {
    case LinkFamily::log: {
        const double e = std::exp(x);
        return {e, e};
    }
    case LinkFamily::identity:
        return {x, 1.0};
    case LinkFamily::root:
        if (x < 0.0) return {0.0, 0.0};
        if (link.c == 0.0) return {x, 1.0};
        return {std::pow(x, link.c + 1.0), (link.c + 1.0) * std::pow(x, link.c)};
    case LinkFamily::logaffine: {
        if (x <= link.c) {
            const double e = std::exp(x);
            return {e, e};
        }
        const double ec = std::exp(link.c);
        return {ec * (x - link.c + 1.0), ec};
    }
    }
    return {0.0, 0.0};
}

std::optional<double> log_phi(const LinkFunction& link, double x) {
    switch (link.family) {
    case LinkFamily::log:
        return x;
    case LinkFamily::identity:
        if (x > 0.0) return std::log(x);
        return std::nullopt;
    case LinkFamily::root:
        if (x > 0.0) return (link.c + 1.0) * std::log(x);
        return std::nullopt;
    case LinkFamily::logaffine:
        if (x <= link.c) return x;
        return link.c + std::log1p(x - link.c);
    }
    return std::nullopt;
}

double phi_log_deriv(const LinkFunction& link, double x) {
    switch (link.family) {
    case LinkFamily::log: return 1.0;
    case LinkFamily::identity: return 1.0 / x;
    case LinkFamily::root: return x > 0.0 ? (link.c + 1.0) / x : 0.0;
    case LinkFamily::logaffine: return x <= link.c ? 1.0 : 1.0 / (x - link.c + 1.0);
    }
    return 0.0;
}

} // namespace ppfilter
