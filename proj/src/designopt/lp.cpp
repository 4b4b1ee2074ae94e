#include "dvoi/lp.h"
#include "dvoi/errors.h"

#include <Highs.h>
#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace dvoi {

namespace {

double to_highs(double v) {
    if (std::isinf(v)) {
        return v > 0 ? kHighsInf : -kHighsInf;
    }
    return v;
}

HighsLp to_highs_lp(const LpProblem &lp) {
    HighsLp h;
    h.num_col_ = static_cast<HighsInt>(lp.num_columns());
    h.num_row_ = static_cast<HighsInt>(lp.num_rows());
    h.sense_ = ObjSense::kMinimize;
    h.offset_ = lp.offset();
    h.col_cost_ = lp.cost();
    h.col_lower_.resize(lp.num_columns());
    h.col_upper_.resize(lp.num_columns());
    std::transform(lp.column_lower().begin(), lp.column_lower().end(), h.col_lower_.begin(), to_highs);
    std::transform(lp.column_upper().begin(), lp.column_upper().end(), h.col_upper_.begin(), to_highs);
    h.row_lower_.resize(lp.num_rows());
    h.row_upper_.resize(lp.num_rows());
    std::transform(lp.row_lower().begin(), lp.row_lower().end(), h.row_lower_.begin(), to_highs);
    std::transform(lp.row_upper().begin(), lp.row_upper().end(), h.row_upper_.begin(), to_highs);
    h.a_matrix_.format_ = MatrixFormat::kRowwise;
    h.a_matrix_.num_col_ = h.num_col_;
    h.a_matrix_.num_row_ = h.num_row_;
    h.a_matrix_.start_.assign(lp.row_start().begin(), lp.row_start().end());
    h.a_matrix_.index_.assign(lp.row_index().begin(), lp.row_index().end());
    h.a_matrix_.value_ = lp.row_value();
    return h;
}

void configure(Highs &highs, const LpOptions &options, std::size_t columns) {
    highs.setOptionValue("output_flag", false);
    highs.setOptionValue("threads", 1);
    highs.setOptionValue("primal_feasibility_tolerance", options.feasibility_tolerance);
    highs.setOptionValue("dual_feasibility_tolerance", options.feasibility_tolerance);
    if (std::isfinite(options.time_limit_seconds)) {
        highs.setOptionValue("time_limit", options.time_limit_seconds);
    }
    bool ipm = options.method == LpMethod::interior_point;
    if (options.method == LpMethod::automatic) {
        ipm = columns >= options.ipm_min_columns;
    }
    // Crossover stays on so callers always get a basic solution.
    highs.setOptionValue("solver", ipm ? "ipm" : "simplex");
}

} // namespace

std::size_t LpProblem::add_column(double cost, double lower, double upper) {
    cost_.push_back(cost);
    col_lower_.push_back(lower);
    col_upper_.push_back(upper);
    return cost_.size() - 1;
}

std::size_t LpProblem::add_row(double lower, double upper, const std::vector<std::pair<std::size_t, double>> &terms) {
    // Merge duplicates so the matrix stays well formed.
    std::map<std::size_t, double> merged;
    for (auto [col, coef] : terms) {
        if (col >= cost_.size()) {
            throw ArgumentError(fmt::format("row references unknown column {}", col));
        }
        merged[col] += coef;
    }
    for (auto [col, coef] : merged) {
        if (coef != 0.0) {
            index_.push_back(static_cast<int>(col));
            value_.push_back(coef);
        }
    }
    start_.push_back(static_cast<int>(index_.size()));
    row_lower_.push_back(lower);
    row_upper_.push_back(upper);
    return row_lower_.size() - 1;
}

LpSolution solve_lp(const LpProblem &lp, const LpOptions &options) {
    Highs highs;
    configure(highs, options, lp.num_columns());
    LpSolution out;
    if (highs.passModel(to_highs_lp(lp)) == HighsStatus::kError) {
        out.status = "model rejected";
        return out;
    }
    highs.run();
    const auto status = highs.getModelStatus();
    out.status = highs.modelStatusToString(status);
    const auto &info = highs.getInfo();
    out.iterations = info.simplex_iteration_count + std::max<HighsInt>(info.ipm_iteration_count, 0);
    out.optimal = status == HighsModelStatus::kOptimal;
    if (out.optimal) {
        out.objective = info.objective_function_value;
        out.x = highs.getSolution().col_value;
    }
    return out;
}

std::string lp_solver_version() {
    return fmt::format("HiGHS {}.{}.{}", highsVersionMajor(), highsVersionMinor(), highsVersionPatch());
}

void write_lp(const LpProblem &lp, const std::filesystem::path &path) {
    Highs highs;
    highs.setOptionValue("output_flag", false);
    if (highs.passModel(to_highs_lp(lp)) == HighsStatus::kError ||
        highs.writeModel(path.string()) == HighsStatus::kError) {
        throw IoError(fmt::format("cannot write LP to '{}'", path.string()));
    }
}

} // namespace dvoi
