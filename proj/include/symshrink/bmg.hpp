#pragma once

// Best-matched-group selection: an effective-rank prefilter followed by
// cross-validated held-out NLL per candidate.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "symshrink/calibration.hpp"
#include "symshrink/groups.hpp"
#include "symshrink/matrix.hpp"
#include "symshrink/shrinkage.hpp"

namespace symshrink {

class CandidateLibrary {
public:
    CandidateLibrary() = default;
    explicit CandidateLibrary(std::vector<GroupAction> candidates);

    // Throws ConfigError on a duplicate name or a dimension that differs from the others.
    void add(GroupAction g);
    void append(const CandidateLibrary& other);

    const std::vector<GroupAction>& candidates() const noexcept { return candidates_; }
    std::size_t size() const noexcept { return candidates_.size(); }
    bool empty() const noexcept { return candidates_.empty(); }
    std::size_t dim() const;
    bool contains_trivial() const;
    bool contains_full_symmetric() const;
    const GroupAction& find(const std::string& name) const;

private:
    std::vector<GroupAction> candidates_;
};

struct BmgOptions {
    double kappa = 2.0;
    AlphaGrid grid = AlphaGrid::uniform(13);
    std::size_t folds = 5;
    bool use_lwnl = false;
    bool shuffled_folds = false;  // contiguous unless set
    std::uint64_t fold_seed = 0;
};

struct CandidateScore {
    std::string name;
    bool admitted = false;
    double mean_cv_nll = 0.0;  // NaN when not admitted
    double best_alpha = 0.0;   // NaN when not admitted
};

struct BMGReport {
    std::string selected;
    double alpha = 0.0;
    std::vector<std::string> tier1_admitted;
    std::vector<CandidateScore> candidates;  // library order, admitted or not
    double bmg_margin = 0.0;
    double delta_residual = 0.0;
    bool fallback_used = false;
    bool tie = false;  // another admitted candidate matched the best score exactly
    std::string fallback_reason;

    // Tier-2 score of an admitted candidate; throws if absent.
    double score_of(const std::string& name) const;
};

// Admits G iff N * |G| >= kappa * M, with |G| replaced by each candidate's order lower
// bound (log10 scale, +inf for the closed-form kinds).
std::vector<std::string> tier1_admit(const CandidateLibrary& lib, std::size_t n, std::size_t m, double kappa);
std::vector<std::string> tier1_admit(const CandidateLibrary& lib, std::size_t n, std::size_t m, double kappa,
                                     const std::vector<double>& order_log10_bounds);

BMGReport tier2_select(const Dataset& data, const std::vector<GroupAction>& admitted, const AlphaGrid& grid,
                       const FoldScheme& folds, bool use_lwnl_sample_term);

// ||R - Pi_G(R)||_F / ||R||_F; throws ConfigError for the zero matrix.
double delta_residual(const GroupAction& g, const SymmetricMatrix& r_hat);

// Full pipeline. Falls back to LW2004 with the plug-in alpha when nothing is admitted
// or the data are too short to cross-validate. Never throws on valid centered data.
std::pair<EstimatorResult, BMGReport> bmg_with_fallback(const Dataset& data, const CandidateLibrary& lib,
                                                        const BmgOptions& options = {});

// candidate,admitted,mean_cv_nll,best_alpha,selected,margin,delta
void write_bmg_report_csv(const BMGReport& report, std::ostream& out, bool header = true,
                          const std::string& prefix_columns = "", const std::string& prefix_values = "");

}  // namespace symshrink
