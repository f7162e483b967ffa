#pragma once

// On-disk formats. Databases and archive logs are newline-delimited JSON with
// a header record naming the producing manifest; everything plot-shaped is CSV.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "charc/learning.hpp"
#include "charc/quality.hpp"
#include "charc/search.hpp"

namespace charc {

inline constexpr const char* kDatabaseFormat = "charc-db/1";
inline constexpr const char* kArchiveFormat = "charc-archive/1";

struct DatabaseHeader {
    std::string manifest;
    std::string substrate; ///< kind name
    std::size_t nodes = 0;
    std::size_t gene_count = 0;
    std::size_t run_id = 0;
    std::uint64_t seed = 0;
    std::string algo;
};

void write_database_header(std::ostream& os, const DatabaseHeader& header);
/// KR and GR are written as integers; MC with round-trip precision.
void write_database_record(std::ostream& os, const SearchIndividual& ind);

struct Database {
    DatabaseHeader header;
    std::vector<SearchIndividual> records;

    std::vector<BehaviourPoint> behaviours() const;
    std::vector<StampedBehaviour> stamped() const;
};

/// Throws DataError on malformed input, naming the file and line.
Database read_database(const std::filesystem::path& path);

void write_archive_header(std::ostream& os, const std::string& manifest, std::size_t run_id);
void write_archive_entry(std::ostream& os, const ArchiveEntry& entry);

/// One evaluated configuration: behaviour plus task error.
struct PairRow {
    std::size_t run_id = 0;
    std::size_t generation = 0;
    BehaviourPoint behaviour;
    double nmse = 0.0;
};

/// CSV: a "# manifest: <path>" comment, then run_id,generation,KR,GR,MC,nmse.
void write_pairs(std::ostream& os, const std::string& manifest, const std::vector<PairRow>& rows);
std::vector<PairRow> read_pairs(const std::filesystem::path& path);
std::vector<BehaviourSample> to_samples(const std::vector<PairRow>& rows);

struct CurveRow {
    std::size_t generation = 0;
    std::size_t coverage = 0;
    std::string run_id;
};
void write_coverage_csv(std::ostream& os, const std::string& manifest, const std::vector<CurveRow>& rows);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Writes `text` to `path` atomically (temporary file plus rename).
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace charc
