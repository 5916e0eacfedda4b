#include "symshrink/bmg.hpp"

#include <cmath>
#include <limits>

#include "symshrink/error.hpp"
#include "symshrink/format.hpp"

namespace symshrink {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool admits(std::size_t n, double order_log10, std::size_t m, double kappa) {
    if (std::isinf(order_log10) && order_log10 > 0) return n > 0;
    const double rhs = kappa * static_cast<double>(m);
    // Small orders are compared in the linear domain so that equality cases hold exactly.
    if (order_log10 < 15.0) {
        const double order = std::round(std::pow(10.0, order_log10) * 1e6) / 1e6;
        return static_cast<double>(n) * order >= rhs * (1.0 - 1e-12);
    }
    if (n == 0) return false;
    return std::log10(static_cast<double>(n)) + order_log10 >= std::log10(rhs);
}

}  // namespace

CandidateLibrary::CandidateLibrary(std::vector<GroupAction> candidates) {
    for (auto& g : candidates) add(std::move(g));
}

void CandidateLibrary::add(GroupAction g) {
    for (const auto& c : candidates_) {
        if (c.name() == g.name()) throw ConfigError("candidate library: duplicate name '" + g.name() + "'");
    }
    if (!candidates_.empty() && g.dim() != candidates_.front().dim()) {
        throw DimensionError("candidate library: '" + g.name() + "' acts on " + std::to_string(g.dim()) +
                             " indices, the library on " + std::to_string(candidates_.front().dim()));
    }
    candidates_.push_back(std::move(g));
}

void CandidateLibrary::append(const CandidateLibrary& other) {
    for (const auto& g : other.candidates()) add(g);
}

std::size_t CandidateLibrary::dim() const {
    if (candidates_.empty()) throw ConfigError("candidate library is empty");
    return candidates_.front().dim();
}

bool CandidateLibrary::contains_trivial() const {
    for (const auto& g : candidates_)
        if (g.kind() == GroupKind::Trivial) return true;
    return false;
}

bool CandidateLibrary::contains_full_symmetric() const {
    for (const auto& g : candidates_)
        if (g.kind() == GroupKind::FullSymmetric) return true;
    return false;
}

const GroupAction& CandidateLibrary::find(const std::string& name) const {
    for (const auto& g : candidates_)
        if (g.name() == name) return g;
    throw ConfigError("candidate library has no group named '" + name + "'");
}

double BMGReport::score_of(const std::string& name) const {
    for (const auto& c : candidates)
        if (c.name == name && c.admitted) return c.mean_cv_nll;
    throw ConfigError("no Tier-2 score for '" + name + "'");
}

std::vector<std::string> tier1_admit(const CandidateLibrary& lib, std::size_t n, std::size_t m, double kappa) {
    std::vector<double> bounds;
    for (const auto& g : lib.candidates()) bounds.push_back(g.order_log10_lower_bound());
    return tier1_admit(lib, n, m, kappa, bounds);
}

std::vector<std::string> tier1_admit(const CandidateLibrary& lib, std::size_t n, std::size_t m, double kappa,
                                     const std::vector<double>& order_log10_bounds) {
    if (!(kappa >= 1.0)) throw ConfigError("tier1_admit: kappa must be at least 1");
    if (order_log10_bounds.size() != lib.size()) throw ConfigError("tier1_admit: one order bound per candidate");
    std::vector<std::string> out;
    for (std::size_t k = 0; k < lib.size(); ++k) {
        if (admits(n, order_log10_bounds[k], m, kappa)) out.push_back(lib.candidates()[k].name());
    }
    return out;
}

double delta_residual(const GroupAction& g, const SymmetricMatrix& r_hat) {
    const double norm = frobenius_norm(r_hat);
    if (!(norm > 0.0)) throw ConfigError("delta_residual: zero matrix");
    return std::sqrt(frobenius_distance_squared(r_hat, reynolds_project(g, r_hat))) / norm;
}

BMGReport tier2_select(const Dataset& data, const std::vector<GroupAction>& admitted, const AlphaGrid& grid,
                       const FoldScheme& folds, bool use_lwnl_sample_term) {
    if (admitted.empty()) throw ConfigError("tier2_select: no admitted candidates; use the fallback path");
    BMGReport report;
    std::size_t best = 0;
    for (std::size_t k = 0; k < admitted.size(); ++k) {
        const auto cv = cv_nll_alpha(data, admitted[k], grid, folds, use_lwnl_sample_term);
        report.tier1_admitted.push_back(admitted[k].name());
        report.candidates.push_back({admitted[k].name(), true, cv.best_score(), cv.alpha});
        if (report.candidates[k].mean_cv_nll < report.candidates[best].mean_cv_nll) best = k;
    }
    const auto& winner = report.candidates[best];
    report.selected = winner.name;
    report.alpha = winner.best_alpha;

    double second = kInf;
    for (std::size_t k = 0; k < report.candidates.size(); ++k) {
        if (k == best) continue;
        const double s = report.candidates[k].mean_cv_nll;
        if (s == winner.mean_cv_nll) report.tie = true;
        second = std::min(second, s);
    }
    if (report.candidates.size() < 2 || second == winner.mean_cv_nll) {
        report.bmg_margin = 0.0;
    } else {
        report.bmg_margin = second - winner.mean_cv_nll;
    }
    report.delta_residual = delta_residual(admitted[best], sample_covariance(data));
    return report;
}

std::pair<EstimatorResult, BMGReport> bmg_with_fallback(const Dataset& data, const CandidateLibrary& lib,
                                                        const BmgOptions& options) {
    if (lib.empty()) throw ConfigError("bmg: candidate library is empty");
    if (lib.dim() != data.dim()) {
        throw DimensionError("bmg: library acts on " + std::to_string(lib.dim()) + " indices, data has " +
                             std::to_string(data.dim()) + " columns");
    }
    const auto admitted_names = tier1_admit(lib, data.n_obs(), data.dim(), options.kappa);

    auto fallback = [&](const std::string& reason) {
        BMGReport report;
        report.fallback_used = true;
        report.fallback_reason = reason;
        report.tier1_admitted = admitted_names;
        for (const auto& g : lib.candidates()) report.candidates.push_back({g.name(), false, kNaN, kNaN});
        auto est = lw2004_auto(data);
        est.set(EstimatorFlag::BmgFallback);
        report.selected = "";
        report.alpha = *est.alpha;
        const auto r_hat = sample_covariance(data);
        report.delta_residual = frobenius_norm(r_hat) > 0.0
                                    ? delta_residual(GroupAction::haar_orthogonal(data.dim()), r_hat)
                                    : 0.0;
        return std::make_pair(std::move(est), std::move(report));
    };

    if (admitted_names.empty()) return fallback("no candidate passed the rank prefilter");
    // Every training complement must keep two rows and every fold one row.
    if (data.n_obs() < options.folds || data.n_obs() < 3 ||
        data.n_obs() - (data.n_obs() + options.folds - 1) / options.folds < 2) {
        return fallback("too few observations for cross-validation");
    }

    const FoldScheme folds = options.shuffled_folds
                                 ? FoldScheme::shuffled(data.n_obs(), options.folds, options.fold_seed)
                                 : FoldScheme::contiguous(data.n_obs(), options.folds);
    std::vector<GroupAction> admitted;
    for (const auto& name : admitted_names) admitted.push_back(lib.find(name));
    BMGReport tier2 = tier2_select(data, admitted, options.grid, folds, options.use_lwnl);

    // Report every library member in library order, admitted or not.
    BMGReport report = tier2;
    report.candidates.clear();
    for (const auto& g : lib.candidates()) {
        bool found = false;
        for (const auto& c : tier2.candidates) {
            if (c.name == g.name()) {
                report.candidates.push_back(c);
                found = true;
            }
        }
        if (!found) report.candidates.push_back({g.name(), false, kNaN, kNaN});
    }

    const GroupAction& g = lib.find(report.selected);
    EstimatorResult est = options.use_lwnl ? ad_lwnl_blend(data, g, report.alpha)
                                           : ad_blend(sample_covariance(data), g, report.alpha);
    return {std::move(est), std::move(report)};
}

void write_bmg_report_csv(const BMGReport& report, std::ostream& out, bool header,
                          const std::string& prefix_columns, const std::string& prefix_values) {
    if (header) out << prefix_columns << "candidate,admitted,mean_cv_nll,best_alpha,selected,margin,delta\n";
    for (const auto& c : report.candidates) {
        out << prefix_values << c.name << ',' << (c.admitted ? 1 : 0) << ',' << format_double(c.mean_cv_nll) << ','
            << format_double(c.best_alpha) << ',' << (c.name == report.selected ? 1 : 0) << ','
            << format_double(report.bmg_margin) << ',' << format_double(report.delta_residual) << '\n';
    }
}

}  // namespace symshrink
