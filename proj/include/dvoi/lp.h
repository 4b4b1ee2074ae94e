#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dvoi {

inline constexpr double lp_inf = std::numeric_limits<double>::infinity();

/// Minimisation LP assembled row by row.
class LpProblem {
  public:
    std::size_t add_column(double cost, double lower = 0.0, double upper = lp_inf);
    /// Adds lower <= sum(coef * x[col]) <= upper. Repeated columns are summed.
    std::size_t add_row(double lower, double upper, const std::vector<std::pair<std::size_t, double>> &terms);

    void set_offset(double offset) { offset_ = offset; }
    double offset() const { return offset_; }

    std::size_t num_columns() const { return cost_.size(); }
    std::size_t num_rows() const { return row_lower_.size(); }
    std::size_t num_nonzeros() const { return index_.size(); }

    const std::vector<double> &cost() const { return cost_; }
    const std::vector<double> &column_lower() const { return col_lower_; }
    const std::vector<double> &column_upper() const { return col_upper_; }
    const std::vector<double> &row_lower() const { return row_lower_; }
    const std::vector<double> &row_upper() const { return row_upper_; }
    const std::vector<int> &row_start() const { return start_; }
    const std::vector<int> &row_index() const { return index_; }
    const std::vector<double> &row_value() const { return value_; }

  private:
    std::vector<double> cost_, col_lower_, col_upper_;
    std::vector<double> row_lower_, row_upper_;
    std::vector<int> start_{0}, index_;
    std::vector<double> value_;
    double offset_{0.0};
};

enum class LpMethod {
    automatic, ///< interior point with crossover above ipm_min_columns, simplex below
    simplex,
    interior_point,
};

struct LpOptions {
    double feasibility_tolerance{1e-7};
    double time_limit_seconds{lp_inf};
    LpMethod method{LpMethod::automatic};
    std::size_t ipm_min_columns{20000};
};

struct LpSolution {
    bool optimal{false};
    std::string status;
    double objective{0.0};
    std::vector<double> x;
    long long iterations{0};
};

/// Solves the LP; never throws on non-optimal status, callers inspect `optimal`.
LpSolution solve_lp(const LpProblem &lp, const LpOptions &options = {});

/// "major.minor.patch" of the linked solver.
std::string lp_solver_version();

/// Writes the LP in CPLEX-LP or MPS format, chosen by file extension.
void write_lp(const LpProblem &lp, const std::filesystem::path &path);

} // namespace dvoi
