#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace dfrc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using CellIndex = Eigen::Index;
using CellList = std::vector<CellIndex>;

/**
 * Frame geometry of the delay-Doppler grid: M delay bins (subcarriers),
 * N Doppler bins (time slots), and a reduced cyclic prefix of cp_len
 * samples prepended once per frame.
 */
struct GridConfig {
    int subcarriers = 8;   // M, delay axis
    int time_slots = 16;   // N, Doppler axis
    int cp_len = 0;        // N_CP

    int grid_size() const { return subcarriers * time_slots; }
    int frame_len() const { return grid_size() + cp_len; }
    // f_CP = MN / (MN + N_CP), the rate loss from the prefix
    double cp_fraction() const {
        return static_cast<double>(grid_size()) / static_cast<double>(frame_len());
    }

    // Cells are linearized delay-first: cell = delay + M * doppler.
    CellIndex cell(int delay, int doppler) const {
        return delay + static_cast<CellIndex>(subcarriers) * doppler;
    }
    int delay_of(CellIndex cell) const { return static_cast<int>(cell % subcarriers); }
    int doppler_of(CellIndex cell) const { return static_cast<int>(cell / subcarriers); }

    void validate() const {
        if (subcarriers < 1 || time_slots < 1)
            throw std::invalid_argument("grid: subcarriers and time_slots must be >= 1");
        if (cp_len < 0 || cp_len >= grid_size())
            throw std::invalid_argument("grid: cp_len must satisfy 0 <= cp_len < M*N");
    }
};

/**
 * Pilot/data cell assignment on the DD grid plus the receive-side
 * selection sets. Each list is an ordered set of distinct cell indices;
 * the k-th entry is the grid cell carried by the k-th symbol, so the
 * lists define the 0/1 column-selection matrices used throughout.
 */
struct Placement {
    CellList pilot_cells;
    CellList data_cells;
    CellList rx_pilot_cells;
    CellList rx_data_cells;

    int pilot_count() const { return static_cast<int>(pilot_cells.size()); }
    int data_count() const { return static_cast<int>(data_cells.size()); }
    int rx_pilot_count() const { return static_cast<int>(rx_pilot_cells.size()); }
    int rx_data_count() const { return static_cast<int>(rx_data_cells.size()); }

    double pilot_ratio() const {
        return static_cast<double>(pilot_count()) / (pilot_count() + data_count());
    }
    double guard_ratio(const GridConfig& cfg) const {
        return static_cast<double>(cfg.grid_size() - pilot_count() - data_count()) /
               cfg.grid_size();
    }

    void validate(const GridConfig& cfg) const {
        auto check_list = [&](const CellList& cells, const char* name) {
            std::unordered_set<CellIndex> seen;
            for (CellIndex c : cells) {
                if (c < 0 || c >= cfg.grid_size())
                    throw std::invalid_argument(std::string("placement: ") + name +
                                                " index out of range");
                if (!seen.insert(c).second)
                    throw std::invalid_argument(std::string("placement: duplicate ") + name +
                                                " index");
            }
        };
        check_list(pilot_cells, "pilot");
        check_list(data_cells, "data");
        check_list(rx_pilot_cells, "rx_pilot");
        check_list(rx_data_cells, "rx_data");
        std::unordered_set<CellIndex> pilots(pilot_cells.begin(), pilot_cells.end());
        for (CellIndex c : data_cells)
            if (pilots.count(c))
                throw std::invalid_argument("placement: pilot and data cells overlap");
        if (pilot_count() + data_count() > cfg.grid_size())
            throw std::invalid_argument("placement: more symbols than grid cells");
    }
};

// Rows of `a` at the given cells: equivalent to S^H * a for the selection matrix S.
inline Matrix select_rows(const Matrix& a, const CellList& cells) {
    Matrix out(static_cast<Eigen::Index>(cells.size()), a.cols());
    for (std::size_t i = 0; i < cells.size(); ++i) out.row(i) = a.row(cells[i]);
    return out;
}

inline Matrix select_cols(const Matrix& a, const CellList& cells) {
    Matrix out(a.rows(), static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) out.col(i) = a.col(cells[i]);
    return out;
}

inline Matrix select_block(const Matrix& a, const CellList& rows, const CellList& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
    return out;
}

// Scatter a short vector into a length-n vector at the given cells (S * v).
inline Vector scatter(const Vector& v, const CellList& cells, Eigen::Index n) {
    Vector out = Vector::Zero(n);
    for (std::size_t i = 0; i < cells.size(); ++i) out(cells[i]) = v(i);
    return out;
}

inline Vector gather(const Vector& v, const CellList& cells) {
    Vector out(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) out(i) = v(cells[i]);
    return out;
}

}  // namespace dfrc
