#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "osckit/series.hpp"

namespace osckit {

struct Spectrogram;

/// Reads a channel CSV (`time_s,<name1>,<name2>,...`) into a ChannelSet.
/// The time column must be uniform within 1 ppm; dt is inferred from it.
/// Channels named `*_rad` come back unwrapped.
ChannelSet ingest_csv(const std::filesystem::path& path);

/// Writes a ChannelSet in the same format ingest_csv reads. Values survive
/// the decimal-text round trip to better than 1e-12 relative.
void export_csv(const ChannelSet& cs, const std::filesystem::path& path);

/// Long-format spectrogram export: `time_s,freq_hz,mag_db`.
void export_spectrogram_csv(const Spectrogram& spec,
                            const std::filesystem::path& path);

/// Generic table writer used by the report CSVs (decimal text, LF endings).
void write_table_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

/// Formats a double with enough digits for the 1e-12 round-trip contract.
std::string format_number(Real v);

}  // namespace osckit
