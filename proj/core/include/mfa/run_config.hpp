#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfa/branch_system.hpp"
#include "mfa/potential.hpp"
#include "mfa/spectrum.hpp"

namespace mfa {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One JSON document drives every command.  The raw document is kept verbatim
// so that parse(serialize(c)) == c; typed accessors validate on use.
class RunConfig {
public:
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
    std::string serialize() const;  // stable two-space dump

    // Throws ConfigError on any invalid or out-of-range field.
    void validate() const;

    BranchSystem make_map() const;
    PotentialTable make_potential(const BranchSystem& map) const;
    SolverOptions make_solver() const;

    // Command-specific sections (missing sections throw).
    std::vector<Vec> spectrum_grid_points(int dim) const;
    const nlohmann::json& section(const std::string& name) const;
    bool has_section(const std::string& name) const { return doc_.contains(name); }

    std::uint64_t base_seed() const;
    int threads() const;
    std::string out_dir() const;

    nlohmann::json& doc() { return doc_; }
    const nlohmann::json& doc() const { return doc_; }

private:
    nlohmann::json doc_;
};

// Command drivers shared by the CLI binary and the tests.  Exit codes:
// 0 success, 1 config/usage error, 2 nothing feasible.
int cmd_spectrum(const RunConfig& cfg, const std::string& out_dir);
int cmd_hull(const RunConfig& cfg, const std::string& out_dir);
int cmd_moran(const RunConfig& cfg, const std::string& out_dir);
int cmd_check(const RunConfig& cfg, const std::string& out_dir);

}  // namespace mfa
