#pragma once

// Pilot arrangement archetypes. A single channel shift moves DD cell (m, n)
// to ((m+i) mod M, (n+j) mod N), so a placement is guard-valid exactly when
// no data cell lies in the pilot cells dilated by the full
// (2L+1) x (2Q+1) ring. Patterns are deterministic functions of their
// arguments. Receive sets default to the one-sided (L, Q) spread of the
// corresponding transmit cells.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfrc/grid.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

enum class PatternKind { spike, flat, cluster };

namespace detail {

inline std::vector<bool> dilate_cells(const GridConfig& cfg, const CellList& cells,
                                      int delay_lo, int delay_hi, int dop_lo, int dop_hi) {
    const int m = cfg.subcarriers, n = cfg.time_slots;
    std::vector<bool> mask(cfg.grid_size(), false);
    const int di_span = std::min(delay_hi - delay_lo, m - 1);
    const int dj_span = std::min(dop_hi - dop_lo, n - 1);
    for (CellIndex c : cells) {
        const int cm = cfg.delay_of(c), cn = cfg.doppler_of(c);
        for (int di = 0; di <= di_span; ++di) {
            const int mm = ((cm + delay_lo + di) % m + m) % m;
            for (int dj = 0; dj <= dj_span; ++dj) {
                const int nn = ((cn + dop_lo + dj) % n + n) % n;
                mask[cfg.cell(mm, nn)] = true;
            }
        }
    }
    return mask;
}

inline CellList mask_to_cells(const std::vector<bool>& mask) {
    CellList out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.push_back(static_cast<CellIndex>(i));
    return out;
}

// Pilot cells inside a w_m x w_n rectangle anchored at (0, 0).
inline CellList rect_cells(const GridConfig& cfg, int w_m, int w_n, int count,
                           bool spread_evenly) {
    CellList cells;
    const int area = w_m * w_n;
    if (spread_evenly) {
        for (int i = 0; i < count; ++i) {
            const int pos = static_cast<int>((static_cast<long long>(i) * area) / count);
            cells.push_back(cfg.cell(pos % w_m, pos / w_m));
        }
    } else {
        for (int i = 0; i < count; ++i) cells.push_back(cfg.cell(i % w_m, i / w_m));
    }
    return cells;
}

inline CellList data_outside_ring(const GridConfig& cfg, const CellList& pilots, int count,
                                  int max_delay, int max_doppler, int* available = nullptr) {
    const std::vector<bool> forbidden =
        dilate_cells(cfg, pilots, -max_delay, max_delay, -max_doppler, max_doppler);
    CellList data;
    int free_cells = 0;
    for (CellIndex c = 0; c < cfg.grid_size(); ++c) {
        if (forbidden[c]) continue;
        ++free_cells;
        if (static_cast<int>(data.size()) < count) data.push_back(c);
    }
    if (available) *available = free_cells;
    return data;
}

}  // namespace detail

inline PatternKind pattern_kind_from_string(const std::string& name) {
    if (name == "spike") return PatternKind::spike;
    if (name == "flat") return PatternKind::flat;
    if (name == "cluster") return PatternKind::cluster;
    throw std::invalid_argument("unknown pattern kind: " + name);
}

inline std::string to_string(PatternKind kind) {
    switch (kind) {
        case PatternKind::spike: return "spike";
        case PatternKind::flat: return "flat";
        default: return "cluster";
    }
}

/**
 * Builds a guard-valid placement of the requested archetype, or throws with
 * the binding dimension when the guard cannot fit. Spike and cluster use the
 * most compact pilot rectangle; flat spreads the pilots over the widest
 * rectangle that still leaves room for the data.
 */
inline Placement generate_pattern(PatternKind kind, const GridConfig& cfg, int pilot_count,
                                  int data_count, int max_delay, int max_doppler) {
    cfg.validate();
    if (pilot_count < 1 || data_count < 0)
        throw std::invalid_argument("pattern: need pilot_count >= 1, data_count >= 0");
    if (pilot_count + data_count > cfg.grid_size())
        throw std::invalid_argument("pattern: pilot + data symbols exceed the grid");
    const int m = cfg.subcarriers, n = cfg.time_slots;

    Placement placement;
    auto try_rect = [&](int w_m, int w_n, bool spread) -> bool {
        if (w_m * w_n < pilot_count) return false;
        CellList pilots = detail::rect_cells(cfg, w_m, w_n, pilot_count, spread);
        int available = 0;
        CellList data = detail::data_outside_ring(cfg, pilots, data_count, max_delay,
                                                  max_doppler, &available);
        if (available < data_count) return false;
        placement.pilot_cells = std::move(pilots);
        placement.data_cells = std::move(data);
        return true;
    };

    bool placed = false;
    if (kind == PatternKind::flat) {
        // widest-first: prefer full delay extent, then shrink
        for (int w_m = std::min(m, pilot_count); w_m >= 1 && !placed; --w_m) {
            for (int w_n = n; w_n >= (pilot_count + w_m - 1) / w_m && !placed; --w_n)
                placed = try_rect(w_m, w_n, true);
        }
    } else {
        // most compact block, growing only as needed
        const int w_m = std::min(m, pilot_count);
        for (int w_n = (pilot_count + w_m - 1) / w_m; w_n <= n && !placed; ++w_n)
            placed = try_rect(w_m, w_n, false);
    }
    if (!placed) {
        const int ring_m = std::min(2 * max_delay + 1, m);
        const int ring_n = std::min(2 * max_doppler + 1, n);
        std::string binding = ring_m >= m ? "delay (guard ring spans every delay bin)"
                                          : "Doppler (guard ring leaves too few columns)";
        throw std::invalid_argument(
            "pattern: cannot fit " + std::to_string(data_count) + " data cells outside a " +
            std::to_string(ring_m) + "x" + std::to_string(ring_n) +
            " guard ring around " + std::to_string(pilot_count) +
            " pilots; binding dimension: " + binding);
    }

    const auto rx_pilot = detail::dilate_cells(cfg, placement.pilot_cells, 0, max_delay, 0,
                                               max_doppler);
    const auto rx_data = detail::dilate_cells(cfg, placement.data_cells, 0, max_delay, 0,
                                              max_doppler);
    placement.rx_pilot_cells = detail::mask_to_cells(rx_pilot);
    placement.rx_data_cells = detail::mask_to_cells(rx_data);
    placement.validate(cfg);
    return placement;
}

// Unit-norm pilot symbol shape for each archetype: an impulse at the middle
// pilot cell for spike, equal magnitudes otherwise.
inline Vector initial_pilot_values(PatternKind kind, int pilot_count) {
    if (pilot_count < 1) throw std::invalid_argument("pattern values: pilot_count >= 1");
    Vector shape = Vector::Zero(pilot_count);
    if (kind == PatternKind::spike) {
        shape(pilot_count / 2) = 1.0;
    } else {
        shape.setConstant(1.0 / std::sqrt(static_cast<double>(pilot_count)));
    }
    return shape;
}

}  // namespace dfrc
