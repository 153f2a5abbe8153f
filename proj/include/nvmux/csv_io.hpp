#pragma once

#include <iosfwd>
#include <string>

#include "nvmux/calibration.hpp"
#include "nvmux/odmr.hpp"
#include "nvmux/readout.hpp"

namespace nvmux {

/// Formats a double with 9 significant digits.
std::string fmt9(double v);

/// combo,total,E,V with one row per present cell. E and V are per-shot
/// mean and variance; V is left empty when only totals are known.
void write_counts_csv(std::ostream& os, const CountMatrix& counts, const MomentMatrix* moments = nullptr);

/// Reads the totals back. The shot count of each cell is total / E.
CountMatrix read_counts_csv(std::istream& is, const std::string& source);

/// position_nm,f1_minus_mhz,f1_plus_mhz,f2_minus_mhz,f2_plus_mhz
void write_edge_scan_csv(std::ostream& os, const EdgeScan& scan);

/// Malformed rows raise ConfigError carrying the row's line number.
EdgeScan read_edge_scan_csv(std::istream& is, const std::string& source, ScanAxis axis);

/// freq_mhz,pl
void write_spectrum_csv(std::ostream& os, const OdmrSpectrum& spectrum);
/// sensor,branch,center_mhz for the four transitions.
void write_transitions_csv(std::ostream& os, const OdmrSpectrum& spectrum);

}  // namespace nvmux
