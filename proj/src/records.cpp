#include "charc/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "charc/error.hpp"

namespace charc {

using nlohmann::json;

namespace {

json integral_or_real(double v)
{
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) return static_cast<std::int64_t>(v);
    return v;
}

[[noreturn]] void bad(const std::filesystem::path& path, std::size_t line, const std::string& what)
{
    throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) bad(path, line, "not a number: '" + s + "'");
    return v;
}

std::size_t parse_size(const std::string& s, const std::filesystem::path& path, std::size_t line)
{
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) bad(path, line, "not an integer: '" + s + "'");
    return v;
}

}  // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc{} ? ptr : buf);
}

void write_database_header(std::ostream& os, const DatabaseHeader& h)
{
    json j;
    j["format"] = kDatabaseFormat;
    j["manifest"] = h.manifest;
    j["substrate"] = h.substrate;
    j["nodes"] = h.nodes;
    j["gene_count"] = h.gene_count;
    j["run_id"] = h.run_id;
    j["seed"] = h.seed;
    j["algo"] = h.algo;
    os << j.dump() << '\n';
}

void write_database_record(std::ostream& os, const SearchIndividual& ind)
{
    json j;
    j["run_id"] = ind.run_id;
    j["generation"] = ind.generation;
    j["slot"] = ind.slot;
    j["KR"] = integral_or_real(ind.behaviour.kr);
    j["GR"] = integral_or_real(ind.behaviour.gr);
    j["MC"] = ind.behaviour.mc;
    if (ind.behaviour.degenerate) j["degenerate"] = true;
    j["genes"] = ind.genotype.genes;
    os << j.dump() << '\n';
}

std::vector<BehaviourPoint> Database::behaviours() const
{
    std::vector<BehaviourPoint> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.behaviour);
    return out;
}

std::vector<StampedBehaviour> Database::stamped() const
{
    std::vector<StampedBehaviour> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.behaviour, r.generation});
    return out;
}

Database read_database(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open database '" + path.string() + "'");
    Database db;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            bad(path, lineno, std::string("malformed record: ") + e.what());
        }
        try {
            if (!header_seen) {
                if (!j.contains("format") || j["format"] != kDatabaseFormat) bad(path, lineno, "missing database header");
                db.header.manifest = j.value("manifest", "");
                db.header.substrate = j.value("substrate", "");
                db.header.nodes = j.value("nodes", std::size_t{0});
                db.header.gene_count = j.value("gene_count", std::size_t{0});
                db.header.run_id = j.value("run_id", std::size_t{0});
                db.header.seed = j.value("seed", std::uint64_t{0});
                db.header.algo = j.value("algo", "");
                header_seen = true;
                continue;
            }
            SearchIndividual ind;
            ind.run_id = j.at("run_id").get<std::size_t>();
            ind.generation = j.at("generation").get<std::size_t>();
            ind.slot = j.value("slot", std::size_t{0});
            ind.behaviour.kr = j.at("KR").get<double>();
            ind.behaviour.gr = j.at("GR").get<double>();
            ind.behaviour.mc = j.at("MC").get<double>();
            ind.behaviour.degenerate = j.value("degenerate", false);
            if (j.contains("genes")) ind.genotype.genes = j["genes"].get<std::vector<double>>();
            db.records.push_back(std::move(ind));
        } catch (const json::exception& e) {
            bad(path, lineno, std::string("bad field: ") + e.what());
        }
    }
    if (!header_seen) throw DataError("database '" + path.string() + "' is empty");
    return db;
}

void write_archive_header(std::ostream& os, const std::string& manifest, std::size_t run_id)
{
    json j;
    j["format"] = kArchiveFormat;
    j["manifest"] = manifest;
    j["run_id"] = run_id;
    os << j.dump() << '\n';
}

void write_archive_entry(std::ostream& os, const ArchiveEntry& e)
{
    json j;
    j["generation"] = e.generation;
    j["KR"] = integral_or_real(e.behaviour.kr);
    j["GR"] = integral_or_real(e.behaviour.gr);
    j["MC"] = e.behaviour.mc;
    j["rho_min"] = e.rho_min;
    if (e.initial)
        j["initial"] = true;
    else
        j["sparseness"] = e.sparseness;
    os << j.dump() << '\n';
}

void write_pairs(std::ostream& os, const std::string& manifest, const std::vector<PairRow>& rows)
{
    os << "# manifest: " << manifest << '\n';
    os << "run_id,generation,KR,GR,MC,nmse\n";
    for (const auto& r : rows)
        os << r.run_id << ',' << r.generation << ',' << format_double(r.behaviour.kr) << ','
           << format_double(r.behaviour.gr) << ',' << format_double(r.behaviour.mc) << ',' << format_double(r.nmse)
           << '\n';
}

std::vector<PairRow> read_pairs(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pair file '" + path.string() + "'");
    std::vector<PairRow> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "run_id,generation,KR,GR,MC,nmse") bad(path, lineno, "unexpected pair header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) bad(path, lineno, "expected 6 columns");
        PairRow r;
        r.run_id = parse_size(f[0], path, lineno);
        r.generation = parse_size(f[1], path, lineno);
        r.behaviour.kr = parse_double(f[2], path, lineno);
        r.behaviour.gr = parse_double(f[3], path, lineno);
        r.behaviour.mc = parse_double(f[4], path, lineno);
        r.nmse = parse_double(f[5], path, lineno);
        rows.push_back(r);
    }
    if (!header_seen) throw DataError("pair file '" + path.string() + "' has no header");
    return rows;
}

std::vector<BehaviourSample> to_samples(const std::vector<PairRow>& rows)
{
    std::vector<BehaviourSample> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.behaviour, r.nmse});
    return out;
}

void write_coverage_csv(std::ostream& os, const std::string& manifest, const std::vector<CurveRow>& rows)
{
    os << "# manifest: " << manifest << '\n';
    os << "generation,coverage,run_id\n";
    for (const auto& r : rows) os << r.generation << ',' << r.coverage << ',' << r.run_id << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + path.string() + "'");
        out << text;
        if (!out) throw DataError("write failed for '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace charc
