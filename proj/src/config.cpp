#include "charc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "charc/error.hpp"

namespace charc {

namespace {

using Entries = std::map<std::string, std::string>;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const std::string t = trim(v);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size()) throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const std::string t = trim(v);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigError("config key '" + key + "': not a non-negative integer: '" + v + "'");
    return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::istringstream is(v);
    std::string tok;
    while (is >> tok) out.push_back(to_double(key, tok));
    if (out.empty()) throw ConfigError("config key '" + key + "' needs at least one value");
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Setter = std::function<void(FrameworkConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter size_setter(T FrameworkConfig::*section, std::size_t T::*field)
{
    return [=](FrameworkConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = to_uint(k, v); };
}

template <typename T>
Setter double_setter(T FrameworkConfig::*section, double T::*field)
{
    return [=](FrameworkConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = to_double(k, v); };
}

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["framework.seed"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) { c.seed = to_uint(k, v); };
        t["framework.runs"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) { c.runs = to_uint(k, v); };

        t["substrate.washout"] = size_setter(&FrameworkConfig::substrate, &SubstrateSpec::washout);
        t["substrate.theta"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) {
            c.substrate.delay.theta = to_double(k, v);
        };
        t["substrate.time_scale"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) {
            c.substrate.delay.time_scale = to_double(k, v);
        };
        t["substrate.steps_per_node"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) {
            c.substrate.delay.steps_per_node = to_uint(k, v);
        };

        t["measures.streams"] = size_setter(&FrameworkConfig::measures, &MeasureConfig::streams);
        t["measures.stream_length"] = size_setter(&FrameworkConfig::measures, &MeasureConfig::stream_length);
        t["measures.washout"] = size_setter(&FrameworkConfig::measures, &MeasureConfig::washout);
        t["measures.gr_noise"] = double_setter(&FrameworkConfig::measures, &MeasureConfig::gr_noise);
        t["measures.svd_threshold"] = double_setter(&FrameworkConfig::measures, &MeasureConfig::svd_threshold);
        t["measures.mc_washout"] = size_setter(&FrameworkConfig::measures, &MeasureConfig::mc_washout);
        t["measures.mc_train"] = size_setter(&FrameworkConfig::measures, &MeasureConfig::mc_train);
        t["measures.mc_test"] = size_setter(&FrameworkConfig::measures, &MeasureConfig::mc_test);
        t["measures.readout_lambda"] = double_setter(&FrameworkConfig::measures, &MeasureConfig::readout_lambda);
        t["measures.seed"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) { c.measures.seed = to_uint(k, v); };

        t["search.generations"] = size_setter(&FrameworkConfig::search, &NsParams::generations);
        t["search.population"] = size_setter(&FrameworkConfig::search, &NsParams::population);
        t["search.deme"] = size_setter(&FrameworkConfig::search, &NsParams::deme);
        t["search.recombination_rate"] = double_setter(&FrameworkConfig::search, &NsParams::recombination_rate);
        t["search.mutation_rate"] = double_setter(&FrameworkConfig::search, &NsParams::mutation_rate);
        t["search.rho_min"] = double_setter(&FrameworkConfig::search, &NsParams::rho_min);
        t["search.rho_update_interval"] = size_setter(&FrameworkConfig::search, &NsParams::rho_update_interval);
        t["search.k"] = size_setter(&FrameworkConfig::search, &NsParams::k);
        t["search.random_admission"] = double_setter(&FrameworkConfig::search, &NsParams::random_admission);
        t["search.archive_limit"] = size_setter(&FrameworkConfig::search, &NsParams::archive_limit);

        t["tasks.length"] = size_setter(&FrameworkConfig::tasks, &TaskConfig::length);
        t["tasks.seed"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) { c.tasks.seed = to_uint(k, v); };
        t["tasks.lambda_grid"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) {
            c.tasks.lambda_grid = to_doubles(k, v);
        };
        t["tasks.train_fraction"] = double_setter(&FrameworkConfig::tasks, &TaskConfig::train_fraction);
        t["tasks.validation_fraction"] = double_setter(&FrameworkConfig::tasks, &TaskConfig::validation_fraction);
        t["tasks.laser_path"] = [](FrameworkConfig& c, const std::string&, const std::string& v) { c.tasks.laser_path = trim(v); };

        t["learning.train_fraction"] = double_setter(&FrameworkConfig::learning, &TrainSpec::train_fraction);
        t["learning.epochs"] = size_setter(&FrameworkConfig::learning, &TrainSpec::epochs);
        t["learning.ensemble"] = size_setter(&FrameworkConfig::learning, &TrainSpec::ensemble);
        t["learning.hidden"] = size_setter(&FrameworkConfig::learning, &TrainSpec::hidden);
        t["learning.stagnation_epochs"] = size_setter(&FrameworkConfig::learning, &TrainSpec::stagnation_epochs);
        t["learning.validation_fraction"] = double_setter(&FrameworkConfig::learning, &TrainSpec::validation_fraction);
        t["learning.max_fail"] = size_setter(&FrameworkConfig::learning, &TrainSpec::max_fail);
        t["learning.threshold"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) {
            if (trim(v) == "none" || trim(v).empty())
                c.learning.threshold.reset();
            else
                c.learning.threshold = to_double(k, v);
        };
        t["learning.seed"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) { c.learning.seed = to_uint(k, v); };

        t["quality.voxel"] = [](FrameworkConfig& c, const std::string& k, const std::string& v) {
            const auto e = to_doubles(k, v);
            if (e.size() == 1)
                c.quality.voxel = VoxelSize::cube(e[0]);
            else if (e.size() == 3)
                c.quality.voxel = {e[0], e[1], e[2]};
            else
                throw ConfigError("quality.voxel takes one edge or three");
        };
        t["quality.interval"] = size_setter(&FrameworkConfig::quality, &QualityConfig::interval);
        return t;
    }();
    return table;
}

void apply_entries(FrameworkConfig& c, const Entries& entries)
{
    // Substrate shape first: ranges are rebuilt from kind and node count.
    auto kind = c.substrate.kind;
    auto nodes = c.substrate.n_observables;
    bool reshaped = false;
    if (auto it = entries.find("substrate.kind"); it != entries.end()) {
        kind = substrate_kind_from_string(trim(it->second));
        reshaped = true;
    }
    if (auto it = entries.find("substrate.nodes"); it != entries.end()) {
        nodes = to_uint(it->first, it->second);
        reshaped = true;
    }
    if (reshaped) {
        const SubstrateSpec old = c.substrate;
        c.substrate = kind == SubstrateKind::Esn ? SubstrateSpec::esn(nodes) : SubstrateSpec::delay_reservoir(nodes);
        c.substrate.washout = old.washout;
        c.substrate.delay = old.delay;
    }
    for (const auto& [key, value] : entries) {
        if (key == "substrate.kind" || key == "substrate.nodes") continue;
        if (key.rfind("substrate.range.", 0) == 0) {
            const std::string block = key.substr(std::string("substrate.range.").size());
            const auto lohi = to_doubles(key, value);
            if (lohi.size() != 2) throw ConfigError("config key '" + key + "' needs 'lower upper'");
            GeneRange& r = c.substrate.range(block);
            r.lower = lohi[0];
            r.upper = lohi[1];
            continue;
        }
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(c, key, value);
    }
}

}  // namespace

void FrameworkConfig::validate() const
{
    if (runs < 1) throw ConfigError("framework.runs must be at least 1");
    substrate.validate();
    measures.validate();
    search.validate();
    learning.validate();
    quality.voxel.validate();
    if (quality.interval < 1) throw ConfigError("quality.interval must be positive");
    if (tasks.length < 40) throw ConfigError("tasks.length is too short");
    if (tasks.lambda_grid.empty()) throw ConfigError("tasks.lambda_grid is empty");
    for (double l : tasks.lambda_grid)
        if (!(l >= 0)) throw ConfigError("tasks.lambda_grid entries must be non-negative");
    if (!(tasks.train_fraction > 0 && tasks.validation_fraction > 0 && tasks.train_fraction + tasks.validation_fraction < 1))
        throw ConfigError("task split fractions must be positive and sum below 1");
}

std::string FrameworkConfig::to_ini() const
{
    std::ostringstream os;
    os << "[framework]\nseed = " << seed << "\nruns = " << runs << "\n\n";
    os << "[substrate]\nkind = " << to_string(substrate.kind) << "\nnodes = " << substrate.n_observables
       << "\nwashout = " << substrate.washout << "\ntheta = " << fmt(substrate.delay.theta)
       << "\ntime_scale = " << fmt(substrate.delay.time_scale) << "\nsteps_per_node = " << substrate.delay.steps_per_node
       << "\n";
    for (const auto& r : substrate.ranges) os << "range." << r.name << " = " << fmt(r.lower) << " " << fmt(r.upper) << "\n";
    os << "\n[measures]\nstreams = " << measures.streams << "\nstream_length = " << measures.stream_length
       << "\nwashout = " << measures.washout << "\ngr_noise = " << fmt(measures.gr_noise)
       << "\nsvd_threshold = " << fmt(measures.svd_threshold) << "\nmc_washout = " << measures.mc_washout
       << "\nmc_train = " << measures.mc_train << "\nmc_test = " << measures.mc_test
       << "\nreadout_lambda = " << fmt(measures.readout_lambda) << "\nseed = " << measures.seed << "\n\n";
    os << "[search]\ngenerations = " << search.generations << "\npopulation = " << search.population
       << "\ndeme = " << search.deme << "\nrecombination_rate = " << fmt(search.recombination_rate)
       << "\nmutation_rate = " << fmt(search.mutation_rate) << "\nrho_min = " << fmt(search.rho_min)
       << "\nrho_update_interval = " << search.rho_update_interval << "\nk = " << search.k
       << "\nrandom_admission = " << fmt(search.random_admission) << "\narchive_limit = " << search.archive_limit << "\n\n";
    os << "[tasks]\nlength = " << tasks.length << "\nseed = " << tasks.seed << "\nlambda_grid =";
    for (double l : tasks.lambda_grid) os << " " << fmt(l);
    os << "\ntrain_fraction = " << fmt(tasks.train_fraction) << "\nvalidation_fraction = " << fmt(tasks.validation_fraction)
       << "\nlaser_path = " << tasks.laser_path << "\n\n";
    os << "[learning]\ntrain_fraction = " << fmt(learning.train_fraction) << "\nepochs = " << learning.epochs
       << "\nensemble = " << learning.ensemble << "\nhidden = " << learning.hidden
       << "\nstagnation_epochs = " << learning.stagnation_epochs
       << "\nvalidation_fraction = " << fmt(learning.validation_fraction) << "\nmax_fail = " << learning.max_fail
       << "\nthreshold = " << (learning.threshold ? fmt(*learning.threshold) : std::string("none"))
       << "\nseed = " << learning.seed << "\n\n";
    os << "[quality]\nvoxel = " << fmt(quality.voxel.kr) << " " << fmt(quality.voxel.gr) << " " << fmt(quality.voxel.mc)
       << "\ninterval = " << quality.interval << "\n";
    return os.str();
}

FrameworkConfig parse_config(const std::string& ini_text, const std::map<std::string, std::string>& overrides)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(ini_text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }
    Entries entries;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config key '" + section + "' must appear inside a section");
        for (const auto& [key, value] : body) entries[section + "." + key] = value.get_value<std::string>();
    }
    for (const auto& [key, value] : overrides) entries[key] = value;

    FrameworkConfig c;
    apply_entries(c, entries);
    c.validate();
    return c;
}

FrameworkConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

}  // namespace charc
