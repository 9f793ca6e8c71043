#include "copsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "copsl/errors.hpp"
#include "copsl/io.hpp"

namespace copsl {

bool dominates(std::span<const double> a, std::span<const double> b) {
    bool strictly = false;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] > b[j]) return false;
        if (a[j] < b[j]) strictly = true;
    }
    return strictly;
}

std::vector<ObjectiveVector> nondominated_filter(const std::vector<ObjectiveVector>& points) {
    std::vector<ObjectiveVector> sorted = points;
    std::sort(sorted.begin(), sorted.end());
    // After a lexicographic sort every dominator (and every duplicate) of a
    // point precedes it, so one pass against the kept set suffices.
    std::vector<ObjectiveVector> kept;
    for (const auto& p : sorted) {
        const bool covered = std::any_of(kept.begin(), kept.end(), [&](const ObjectiveVector& q) {
            for (std::size_t j = 0; j < p.size(); ++j)
                if (q[j] > p[j]) return false;
            return true;
        });
        if (!covered) kept.push_back(p);
    }
    return kept;
}

namespace {

std::vector<ObjectiveVector> strictly_inside(const std::vector<ObjectiveVector>& points,
                                             std::span<const double> ref) {
    std::vector<ObjectiveVector> out;
    for (const auto& p : points) {
        if (p.size() != ref.size()) throw InputError("hypervolume: point and reference dimensions differ");
        bool inside = true;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (!std::isfinite(p[j])) throw InputError("hypervolume: non-finite objective value");
            if (!(p[j] < ref[j])) inside = false;
        }
        if (inside) out.push_back(p);
    }
    return out;
}

// Expects a nondominated set sorted by f1 ascending (hence f2 descending).
double sweep_2d(const std::vector<ObjectiveVector>& front, double r1, double r2) {
    double area = 0.0;
    double prev_f2 = r2;
    for (const auto& p : front) {
        area += (r1 - p[0]) * (prev_f2 - p[1]);
        prev_f2 = p[1];
    }
    return area;
}

} // namespace

double hv_2d(const std::vector<ObjectiveVector>& points, std::span<const double> ref) {
    if (ref.size() != 2) throw InputError("hv_2d: reference point must have 2 entries");
    auto front = nondominated_filter(strictly_inside(points, ref));
    return sweep_2d(front, ref[0], ref[1]);
}

double hv_3d(const std::vector<ObjectiveVector>& points, std::span<const double> ref) {
    if (ref.size() != 3) throw InputError("hv_3d: reference point must have 3 entries");
    auto front = nondominated_filter(strictly_inside(points, ref));
    std::sort(front.begin(), front.end(),
              [](const ObjectiveVector& a, const ObjectiveVector& b) { return a[2] < b[2]; });

    double volume = 0.0;
    std::vector<ObjectiveVector> slice;  // 2-D projections seen so far
    for (std::size_t k = 0; k < front.size(); ++k) {
        slice.push_back({front[k][0], front[k][1]});
        const double next = k + 1 < front.size() ? front[k + 1][2] : ref[2];
        const double thickness = next - front[k][2];
        if (thickness <= 0.0) continue;
        slice = nondominated_filter(slice);
        volume += thickness * sweep_2d(slice, ref[0], ref[1]);
    }
    return volume;
}

double hypervolume(const std::vector<ObjectiveVector>& points, std::span<const double> ref) {
    if (ref.size() == 2) return hv_2d(points, ref);
    if (ref.size() == 3) return hv_3d(points, ref);
    throw UnsupportedError("exact hypervolume is implemented for 2 and 3 objectives only");
}

MonteCarloEstimate hv_monte_carlo(const std::vector<ObjectiveVector>& points, std::span<const double> ref,
                                  std::size_t samples, RngStream& rng) {
    if (samples == 0) throw InputError("hv_monte_carlo: samples must be >= 1");
    const auto inside = strictly_inside(points, ref);
    if (inside.empty()) return {};
    const std::size_t m = ref.size();
    std::vector<double> lo(ref.begin(), ref.end());
    for (const auto& p : inside)
        for (std::size_t j = 0; j < m; ++j) lo[j] = std::min(lo[j], p[j]);
    double box = 1.0;
    for (std::size_t j = 0; j < m; ++j) box *= ref[j] - lo[j];

    std::vector<double> s(m);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t j = 0; j < m; ++j) s[j] = rng.uniform(lo[j], ref[j]);
        for (const auto& p : inside) {
            bool covered = true;
            for (std::size_t j = 0; j < m && covered; ++j) covered = p[j] <= s[j];
            if (covered) {
                ++hits;
                break;
            }
        }
    }
    const double n = static_cast<double>(samples);
    const double frac = static_cast<double>(hits) / n;
    return {box * frac, box * std::sqrt(frac * (1.0 - frac) / n)};
}

double log_hv_diff(double hv_true, double hv_learned) {
    return std::log10(std::max(hv_true - hv_learned, kLogHvFloor));
}

void write_front_csv(const std::filesystem::path& path, const FrontApproximation& front) {
    const std::size_t m = front.reference_point.size();
    std::ostringstream out;
    out << "# m=" << m << " ref=";
    for (std::size_t j = 0; j < m; ++j) out << (j ? "," : "") << format_double(front.reference_point[j]);
    out << "\n";
    for (std::size_t j = 0; j < m; ++j) out << (j ? "," : "") << "f" << (j + 1);
    out << "\n";
    for (const auto& p : front.points) {
        for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << format_double(p[j]);
        out << "\n";
    }
    write_file_atomic(path, out.str());
}

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& where) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(cell, &used));
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw LoadError(where + ": cannot parse number '" + cell + "'");
        }
    }
    return values;
}

} // namespace

FrontApproximation read_front_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    FrontApproximation front;
    std::size_t declared_m = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (line[0] == '#') {
            std::istringstream header(line.substr(1));
            std::string token;
            while (header >> token) {
                if (token.rfind("m=", 0) == 0) declared_m = std::stoul(token.substr(2));
                else if (token.rfind("ref=", 0) == 0) front.reference_point = parse_numbers(token.substr(4), where);
            }
            continue;
        }
        if (line[0] == 'f') continue;  // column names
        auto row = parse_numbers(line, where);
        if (!front.points.empty() && row.size() != front.points.front().size())
            throw LoadError(where + ": inconsistent number of columns");
        front.points.push_back(std::move(row));
    }
    const std::size_t m = front.points.empty() ? declared_m : front.points.front().size();
    if (declared_m != 0 && m != declared_m)
        throw LoadError(path.string() + ": header declares m=" + std::to_string(declared_m) + " but rows have " +
                        std::to_string(m) + " columns");
    if (!front.reference_point.empty() && m != 0 && front.reference_point.size() != m)
        throw LoadError(path.string() + ": header reference point has the wrong length");
    return front;
}

} // namespace copsl
