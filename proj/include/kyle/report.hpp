#ifndef KYLE_REPORT_HPP
#define KYLE_REPORT_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace kyle {

/**
 * One verification check. `estimate` is the measured quantity (residual,
 * z-score, p-value, ratio...), `uncertainty` its standard error when the
 * check is statistical (0 for analytic residuals), `tolerance` the
 * threshold it was compared against. `pass` records the raw outcome of the
 * comparison; checks marked expect_fail are negative controls whose raw
 * outcome must be a failure for the battery to be considered healthy.
 */
struct CheckEntry {
    std::string name;
    double estimate = 0.0;
    double uncertainty = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool expect_fail = false;
    long n = 0;
    std::string detail;

    bool satisfied() const { return expect_fail ? !pass : pass; }
};

struct VerificationReport {
    std::vector<CheckEntry> entries;
    std::uint64_t master_seed = 0;
    std::string config_hash;

    bool overall_pass() const {
        for (const auto& e : entries)
            if (!e.satisfied()) return false;
        return true;
    }
    void add(CheckEntry e) { entries.push_back(std::move(e)); }
    void append(const VerificationReport& other) {
        entries.insert(entries.end(), other.entries.begin(), other.entries.end());
    }
    const CheckEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

}  // namespace kyle

#endif
