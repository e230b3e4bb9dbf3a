#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "cfr/binio.hpp"
#include "cfr/channel.hpp"
#include "cfr/dtmc.hpp"

namespace cfr {

// Realization dump: text header (config + seed provenance), a "data" line,
// then CIR and CFR as little-endian float64 interleaved (re, im) row-major.
// Mask files hold the same header style with row-major packed bits.

inline void save_realization(const std::string& path, const ChannelRealization& r) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "save_realization: cannot open " + path);
    const ChannelConfig& c = r.config;
    os << "CFRSIM v1\n"
       << "snapshots=" << c.snapshots << "\n"
       << "nb_subbands=" << c.nb_subbands << "\n"
       << "bins_per_subband=" << c.bins_per_subband << "\n"
       << "fc=" << std::hexfloat << c.fc << "\n"
       << "bandwidth=" << c.bandwidth << "\n"
       << "snapshot_duration=" << c.snapshot_duration << "\n"
       << "velocity=" << c.velocity << "\n"
       << "noise_scale=" << c.noise_scale << std::defaultfloat << "\n"
       << "paths=" << c.paths << "\n"
       << "d_max=" << c.d_max << "\n"
       << "jitter=" << (c.jitter ? 1 : 0) << "\n"
       << "seed=" << r.seed << "\n"
       << "stream_id=" << r.stream_id << "\n"
       << "data\n";
    for (const ComplexGrid* g : {&r.cir, &r.cfr}) {
        for (const auto& v : g->data) {
            binio::put_f64(os, v.real());
            binio::put_f64(os, v.imag());
        }
    }
    require(static_cast<bool>(os), "save_realization: write failed for " + path);
}

inline ChannelRealization load_realization(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "load_realization: cannot open " + path);
    std::string line;
    std::getline(is, line);
    require(line == "CFRSIM v1", "load_realization: " + path + " is not a realization dump");
    ChannelRealization r;
    ChannelConfig& c = r.config;
    while (std::getline(is, line) && line != "data") {
        const auto eq = line.find('=');
        require(eq != std::string::npos, "load_realization: malformed header line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "snapshots") c.snapshots = std::stoi(val);
        else if (key == "nb_subbands") c.nb_subbands = std::stoi(val);
        else if (key == "bins_per_subband") c.bins_per_subband = std::stoi(val);
        else if (key == "fc") c.fc = std::stod(val);
        else if (key == "bandwidth") c.bandwidth = std::stod(val);
        else if (key == "snapshot_duration") c.snapshot_duration = std::stod(val);
        else if (key == "velocity") c.velocity = std::stod(val);
        else if (key == "noise_scale") c.noise_scale = std::stod(val);
        else if (key == "paths") c.paths = std::stoi(val);
        else if (key == "d_max") c.d_max = std::stoi(val);
        else if (key == "jitter") c.jitter = std::stoi(val) != 0;
        else if (key == "seed") r.seed = std::stoull(val);
        else if (key == "stream_id") r.stream_id = std::stoull(val);
        else throw Error("load_realization: unknown header key: " + key);
    }
    require(line == "data", "load_realization: missing data section in " + path);
    const int T = c.snapshots, F = c.bins();
    r.cir = ComplexGrid(T, F);
    r.cfr = ComplexGrid(T, F);
    for (ComplexGrid* g : {&r.cir, &r.cfr}) {
        for (auto& v : g->data) {
            const double re = binio::get_f64(is);
            const double im = binio::get_f64(is);
            v = cplx(re, im);
        }
    }
    return r;
}

inline void save_mask(const std::string& path, const InterferenceMask& m) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "save_mask: cannot open " + path);
    os << "CFRMASK v1\n"
       << "snapshots=" << m.rows << "\n"
       << "bins=" << m.cols << "\n"
       << "nb_subbands=" << m.nb << "\n"
       << "bins_per_subband=" << m.fb << "\n"
       << "data\n";
    unsigned char byte = 0;
    int bit = 0;
    for (std::uint8_t v : m.grid) {
        if (v) byte |= static_cast<unsigned char>(1u << bit);
        if (++bit == 8) {
            os.put(static_cast<char>(byte));
            byte = 0;
            bit = 0;
        }
    }
    if (bit > 0) os.put(static_cast<char>(byte));
    require(static_cast<bool>(os), "save_mask: write failed for " + path);
}

inline InterferenceMask load_mask(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "load_mask: cannot open " + path);
    std::string line;
    std::getline(is, line);
    require(line == "CFRMASK v1", "load_mask: " + path + " is not a mask dump");
    InterferenceMask m;
    while (std::getline(is, line) && line != "data") {
        const auto eq = line.find('=');
        require(eq != std::string::npos, "load_mask: malformed header line: " + line);
        const std::string key = line.substr(0, eq);
        const int val = std::stoi(line.substr(eq + 1));
        if (key == "snapshots") m.rows = val;
        else if (key == "bins") m.cols = val;
        else if (key == "nb_subbands") m.nb = val;
        else if (key == "bins_per_subband") m.fb = val;
        else throw Error("load_mask: unknown header key: " + key);
    }
    require(line == "data", "load_mask: missing data section in " + path);
    const std::size_t cells = static_cast<std::size_t>(m.rows) * m.cols;
    m.grid.assign(cells, 0);
    unsigned char byte = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        const int bit = static_cast<int>(i % 8);
        if (bit == 0) {
            int ch = is.get();
            require(ch != EOF, "load_mask: truncated data in " + path);
            byte = static_cast<unsigned char>(ch);
        }
        m.grid[i] = (byte >> bit) & 1u;
    }
    // rebuild per-sub-band trajectories from the grid
    m.trajectories.assign(m.nb, std::vector<std::uint8_t>(m.rows, 0));
    for (int b = 0; b < m.nb; ++b)
        for (int t = 0; t < m.rows; ++t)
            m.trajectories[b][t] = m.grid[static_cast<std::size_t>(t) * m.cols + b * m.fb];
    return m;
}

}  // namespace cfr
