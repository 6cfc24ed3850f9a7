#pragma once

#include "mmpt/io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mmpt::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int {
    kOk = 0,
    kInvalid = 2,       ///< I/O, schema or validation error in the input
    kMaxIter = 3,       ///< solver stopped at max_iter without converging
    kCapExhausted = 4,  ///< index search ran past --index-cap
    kCheckFailed = 5,   ///< a verification assertion or extension property failed
};

struct RunConfig {
    std::string command;
    std::vector<std::string> inputs;
    std::string method = "modulus";  ///< cap
    std::string suite = "brute";     ///< verify
    double p = 2.0;
    std::optional<double> delta;
    double tol = 1e-6;
    int max_iter = 10000;
    int i_max = 0;  ///< 0 picks the level at which the seed is reproduced
    double eps = 0.1;
    std::string out;
    std::uint64_t seed = 0;
    int workers = 1;
    int index_cap = 512;
    bool quiet = false;
    std::string source = "E";
    std::string target = "F";
    std::vector<int> resolutions;  ///< verify annulus / sweep; empty selects the suite default
    std::vector<std::string> solvers;
    int connectivity = 8;
    int instances = 20;
    double band = 0.25;  ///< verify annulus: relative oracle band

    /// Throws InvalidArgument unless p >= 1, workers >= 1, max_iter >= 1 and
    /// tol > 0 (verify accepts any tol >= 0; tol is its assertion tolerance).
    void validate() const;
    Json to_json() const;
};

/// Parses argv-style arguments (without the program name), runs the command,
/// prints the report envelope {version, command, config, report} to `out`
/// and logs to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mmpt::cli
