#include "ufkm/nmi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "ufkm/error.hpp"

namespace ufkm {

double nmi(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) throw ShapeError("nmi: label vectors differ in length");
    if (a.empty()) throw ShapeError("nmi: empty label vectors");
    const double n = static_cast<double>(a.size());

    std::map<std::size_t, std::size_t> count_a, count_b;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++count_a[a[i]];
        ++count_b[b[i]];
        ++joint[{a[i], b[i]}];
    }

    const auto entropy = [n](const std::map<std::size_t, std::size_t>& counts) {
        double h = 0.0;
        for (const auto& [label, c] : counts) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
        return h;
    };
    const double ha = entropy(count_a);
    const double hb = entropy(count_b);
    if (ha == 0.0 || hb == 0.0) return (ha == 0.0 && hb == 0.0) ? 1.0 : 0.0;

    double mi = 0.0;
    for (const auto& [pair, c] : joint) {
        const double pxy = static_cast<double>(c) / n;
        const double px = static_cast<double>(count_a.at(pair.first)) / n;
        const double py = static_cast<double>(count_b.at(pair.second)) / n;
        mi += pxy * std::log(pxy / (px * py));
    }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

}  // namespace ufkm
