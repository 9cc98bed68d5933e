#pragma once

// CSV and JSON artifacts: metric/trace/AF/BER tables, placement and design
// documents, and the experiment manifest that makes every run reproducible
// from (config, seed).

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfrc/types.hpp"

namespace dfrc {

using Json = nlohmann::json;

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ",";
            out_ << format(values[i]);
        }
        out_ << "\n";
    }

    void mixed_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

    static std::string format(double v) {
        std::ostringstream os;
        os << std::setprecision(17) << v;
        return os.str();
    }

private:
    std::ofstream out_;
};

inline Json grid_to_json(const GridConfig& cfg) {
    return Json{{"subcarriers", cfg.subcarriers},
                {"time_slots", cfg.time_slots},
                {"cp_len", cfg.cp_len}};
}

inline GridConfig grid_from_json(const Json& j) {
    GridConfig cfg;
    cfg.subcarriers = j.at("subcarriers").get<int>();
    cfg.time_slots = j.at("time_slots").get<int>();
    cfg.cp_len = j.at("cp_len").get<int>();
    cfg.validate();
    return cfg;
}

inline Json placement_to_json(const GridConfig& cfg, const Placement& p) {
    Json j = grid_to_json(cfg);
    j["pilot_cells"] = p.pilot_cells;
    j["data_cells"] = p.data_cells;
    j["rx_pilot_cells"] = p.rx_pilot_cells;
    j["rx_data_cells"] = p.rx_data_cells;
    return j;
}

inline std::pair<GridConfig, Placement> placement_from_json(const Json& j) {
    const GridConfig cfg = grid_from_json(j);
    Placement p;
    p.pilot_cells = j.at("pilot_cells").get<CellList>();
    p.data_cells = j.at("data_cells").get<CellList>();
    p.rx_pilot_cells = j.at("rx_pilot_cells").get<CellList>();
    p.rx_data_cells = j.at("rx_data_cells").get<CellList>();
    p.validate(cfg);
    return {cfg, p};
}

inline Json vector_to_json(const Vector& v) {
    Json re = Json::array(), im = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(v(i).real());
        im.push_back(v(i).imag());
    }
    return Json{{"re", re}, {"im", im}};
}

inline Vector vector_from_json(const Json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != im.size()) throw std::invalid_argument("vector json: re/im mismatch");
    Vector v(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = Complex(re[i].get<double>(), im[i].get<double>());
    return v;
}

inline Json design_to_json(const GridConfig& cfg, const Placement& placement, double p_c,
                           const Vector& x_p) {
    return Json{{"placement", placement_to_json(cfg, placement)},
                {"data_power", p_c},
                {"pilot_symbols", vector_to_json(x_p)}};
}

// FNV-1a over the canonical serialization; stable across runs.
inline std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline void write_manifest(const std::filesystem::path& out_dir,
                           const std::string& experiment, const Json& config,
                           std::uint64_t seed, const std::vector<std::string>& outputs) {
    Json manifest;
    manifest["experiment"] = experiment;
    manifest["seed"] = seed;
    manifest["config"] = config;
    std::ostringstream hashed;
    hashed << config.dump() << "#" << seed << "#" << experiment;
    std::ostringstream hex;
    hex << std::hex << std::setfill('0') << std::setw(16) << fnv1a_hash(hashed.str());
    manifest["config_hash"] = hex.str();
    manifest["outputs"] = outputs;
    manifest["version"] = "0.1.0";
    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot open manifest.json in " + out_dir.string());
    out << manifest.dump(2) << "\n";
}

}  // namespace dfrc
