#pragma once

// CSV ingestion and report serialization shared by the command line tool and
// its tests.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "spectral_clt/hypothesis_tests.hpp"
#include "spectral_clt/montecarlo.hpp"

namespace spectral_clt::cli {

/// Comma separated, '.' decimal point, one observation per row. A first row
/// with any non-numeric field is taken as a header. Ragged rows raise a Parse
/// error naming the row.
Eigen::MatrixXd parse_csv(std::istream& in, const std::string& source = "<stream>");
Eigen::MatrixXd read_csv(const std::string& path);

nlohmann::json to_json(const TestReport& r);
nlohmann::json to_json(const SimulationSummary& s);
nlohmann::json to_json(const OscillationPoint& p);
nlohmann::json to_json(const CounterexampleResult& r, const CounterexampleConfig& c);

/// Writes rows of flat JSON objects as CSV (header from the first row) or as
/// an aligned text table.
void write_rows(std::ostream& out, const std::vector<nlohmann::json>& rows, bool table);

}  // namespace spectral_clt::cli
