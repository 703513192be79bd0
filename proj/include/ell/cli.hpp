// Plumbing behind the `ell` executable: run configuration, term tables and
// the named verification suites.  Kept in a library so the tests can drive
// it without spawning processes.
#ifndef ELL_CLI_HPP
#define ELL_CLI_HPP

#include "ell/genus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ell::cli {

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "ELL_CONFIG";
// Environment variable overriding the fixture directory.
inline constexpr const char* kDataEnv = "ELL_DATA";

struct RunConfig {
    int qmax = 5;
    int ywin = 6;
    int pmax = 3;
    int denominator = 0;  // 0: automatic
    int conductor = 0;    // 0: automatic
    std::uint64_t seed = 7;
    bool strict = false;
    int trials = 20;
    int threads = 0;  // 0: hardware concurrency
    std::string out;  // empty: standard output
    std::string data_dir;
};

// Built-in defaults, then the file named by $ELL_CONFIG when set, then $ELL_DATA.
RunConfig default_run_config();
// [run] section of key = value lines; unknown keys and bad values are
// ParseError with line numbers.  Values not mentioned keep those of base.
RunConfig read_run_config(const std::string& path, RunConfig base);
// All counts positive, threads and denominators non-negative; ParameterError otherwise.
void validate(const RunConfig& c);
GenusConfig genus_config(const RunConfig& c);

// lcm of the denominators of every character, divisor coefficient and
// discrepancy in the datum.
int model_conductor(const OrbifoldDatum& d);
int model_conductor(const ManifoldModel& m);
// ParameterError when an explicit conductor is not a multiple of the datum's.
void check_conductor(const RunConfig& c, const OrbifoldDatum& d);

enum class TableFormat { text, csv };
TableFormat parse_format(const std::string& s);
// Canonical sorted term table.  text is the series text form (one term per
// line, "1" for the unit); csv has a header and one row per term with
// rational exponents.
std::string emit_table(const QSeries& s, TableFormat f);
std::string emit_table(const GenusResult& g, TableFormat f);

struct CheckResult {
    std::string suite;
    std::string name;
    bool pass = false;
    double residual = 0;  // exact checks: number of surviving terms
    std::string detail;
    std::vector<std::string> inputs;  // fixture files read, relative to the data directory
    double seconds = 0;
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;
    bool ok() const;
    int failures() const;
};

const std::vector<std::string>& suite_names();
// Runs the checks of a suite (or of every suite for "all") on a worker pool;
// results come back in a fixed order whatever the thread count.
// ParameterError for an unknown name.
SuiteReport run_suite(const std::string& name, const RunConfig& c);
// Runtimes are left out unless asked for, so reports are byte-stable.
std::string report_text(const SuiteReport& r, bool times = false);
std::string report_json(const SuiteReport& r, bool times = false);

}  // namespace ell::cli

#endif
