#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "catsim/catsim.hpp"

namespace catsim::test {

/// Flat channel: every sample carries the same indicators and capacity.
inline ChannelTrace constant_trace(double duration, double capacity, double snr = 15.0, double period = 1.0) {
    std::vector<ChannelSample> s;
    for (double t = 0.0; t <= duration + 1e-9; t += period) {
        ChannelSample c;
        c.t = t;
        c.snr = snr;
        c.rsrp = -120.0 + 40.0 * snr / 30.0;
        c.rsrq = -14.0 + 11.0 * snr / 30.0;
        c.cqi = cqi_from_snr(snr);
        c.capacity = capacity;
        s.push_back(c);
    }
    return ChannelTrace(std::move(s));
}

inline PolicyConfig make_policy(PolicyKind kind, std::vector<MetricDefinition> metrics = {}, double t_min = 30.0,
                                std::vector<double> weights = {}) {
    PolicyConfig p;
    p.kind = kind;
    p.name = std::string(to_string(kind));
    p.metrics = std::move(metrics);
    p.weights = std::move(weights);
    p.timing = {t_min, 120.0, 1.0};
    return p;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

/// Fresh scratch directory under the build tree, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / ("catsim_" + name)) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace catsim::test
