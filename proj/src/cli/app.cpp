#include "charc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "charc/config.hpp"
#include "charc/error.hpp"
#include "charc/kernels.hpp"
#include "charc/learning.hpp"
#include "charc/measures.hpp"
#include "charc/quality.hpp"
#include "charc/records.hpp"
#include "charc/search.hpp"
#include "charc/tasks.hpp"

namespace charc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Options shared by every subcommand that reads the framework config.
struct ConfigOptions {
    std::string file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags; ///< filled from typed flags after parsing

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", file, "INI config file with per-module sections");
        cmd->add_option("--set", sets, "Override a config key, e.g. --set search.k=15")->allow_extra_args(false);
    }

    FrameworkConfig load(const std::map<std::string, std::string>& forced = {}) const
    {
        std::map<std::string, std::string> overrides;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects section.key=value, got '" + s + "'");
            overrides[s.substr(0, eq)] = s.substr(eq + 1);
        }
        for (const auto& [k, v] : flags) overrides[k] = v;
        for (const auto& [k, v] : forced) overrides[k] = v;
        return file.empty() ? parse_config("", overrides) : load_config(file, overrides);
    }
};

std::string utc_now()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

struct Manifest {
    std::string command;
    std::vector<std::string> args;
    std::string config_ini;
    std::vector<std::uint64_t> seeds;
    json substrate = json::object();
    std::string started = utc_now();
    std::vector<std::string> outputs;

    void write(const fs::path& path, bool finished) const
    {
        json j{{"format", "charc-manifest/1"},
               {"command", command},
               {"args", args},
               {"config", config_ini},
               {"seeds", seeds},
               {"substrate", substrate},
               {"kernels", kernels::active().name},
               {"started", started},
               {"finished", finished ? json(utc_now()) : json(nullptr)},
               {"outputs", outputs}};
        write_text_file(path, j.dump(2) + "\n");
    }
};

json substrate_json(const SubstrateSpec& spec)
{
    return json{{"kind", to_string(spec.kind)}, {"nodes", spec.n_observables}, {"gene_count", spec.gene_count()},
                {"washout", spec.washout}};
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

// Runs `count` jobs on up to `jobs` threads. The first failure (by job index)
// is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- explore

struct ExploreArgs {
    ConfigOptions cfg;
    std::optional<std::string> substrate;
    std::optional<std::size_t> nodes, gens, pop, runs;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string algo = "ns";
    std::size_t jobs = 1;
    bool resume = false;
};

void truncate_database(const fs::path& path, std::size_t records)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot reopen database '" + path.string() + "' for resume");
    std::string text, line;
    std::size_t kept = 0;
    bool header = true;
    while (kept < records && std::getline(in, line)) {
        text += line + "\n";
        if (header)
            header = false;
        else
            ++kept;
    }
    if (header && std::getline(in, line)) text += line + "\n";
    if (kept < records) throw DataError("database '" + path.string() + "' is shorter than its checkpoint");
    in.close();
    write_text_file(path, text);
}

void explore_run(const FrameworkConfig& cfg, const ExploreArgs& args, std::size_t run, std::uint64_t seed,
                 const fs::path& dir)
{
    const auto substrate = make_substrate(cfg.substrate);
    const MeasureConfig measures = cfg.measures;
    const BehaviourFn evaluate = [&](const Genotype& g) { return behaviour(*substrate, g, measures); };

    const fs::path db_path = dir / ("db_run" + std::to_string(run) + ".ndjson");
    const fs::path ckpt_path = dir / ("checkpoint_run" + std::to_string(run) + ".json");
    const fs::path archive_path = dir / ("archive_run" + std::to_string(run) + ".ndjson");
    DatabaseHeader header{"manifest_explore.json", std::string(to_string(cfg.substrate.kind)),
                          cfg.substrate.n_observables, cfg.substrate.gene_count(), run, seed, args.algo};

    if (args.algo == "random") {
        std::ofstream db(db_path, std::ios::binary | std::ios::trunc);
        if (!db) throw DataError("cannot write '" + db_path.string() + "'");
        write_database_header(db, header);
        random_search(cfg.search.population + cfg.search.generations, cfg.substrate.gene_count(), evaluate, seed, run,
                      cfg.search.population, [&](const SearchIndividual& ind) { write_database_record(db, ind); });
        return;
    }

    std::ofstream db;
    const RecordSink sink = [&](const SearchIndividual& ind) { write_database_record(db, ind); };
    std::optional<NoveltySearch> ns;
    if (args.resume && fs::exists(ckpt_path)) {
        std::ifstream in(ckpt_path);
        std::stringstream ss;
        ss << in.rdbuf();
        ns.emplace(NoveltySearch::resume(ss.str(), evaluate, sink));
        if (ns->population().empty() || ns->population().front().genotype.genes.size() != cfg.substrate.gene_count())
            throw DataError("checkpoint '" + ckpt_path.string() + "' does not match the configured substrate");
        ns->set_generations(cfg.search.generations);
        truncate_database(db_path, ns->database_size());
        db.open(db_path, std::ios::binary | std::ios::app);
    } else {
        db.open(db_path, std::ios::binary | std::ios::trunc);
        if (!db) throw DataError("cannot write '" + db_path.string() + "'");
        write_database_header(db, header);
        ns.emplace(cfg.search, cfg.substrate.gene_count(), evaluate, seed, run, sink);
        ns->initialise();
    }

    const std::size_t every = std::max<std::size_t>(1, cfg.search.rho_update_interval);
    auto save = [&] {
        db.flush();
        write_text_file(ckpt_path, ns->checkpoint() + "\n");
    };
    save();
    while (ns->generation() < cfg.search.generations) {
        ns->step();
        if (ns->generation() % every == 0) save();
    }
    save();

    std::ostringstream arch;
    write_archive_header(arch, "manifest_explore.json", run);
    for (const auto& e : ns->archive()) write_archive_entry(arch, e);
    write_text_file(archive_path, arch.str());
}

int cmd_explore(ExploreArgs& a, const std::vector<std::string>& argv, std::ostream& out)
{
    if (a.substrate) a.cfg.flags["substrate.kind"] = *a.substrate;
    if (a.nodes) a.cfg.flags["substrate.nodes"] = std::to_string(*a.nodes);
    if (a.gens) a.cfg.flags["search.generations"] = std::to_string(*a.gens);
    if (a.pop) a.cfg.flags["search.population"] = std::to_string(*a.pop);
    if (a.runs) a.cfg.flags["framework.runs"] = std::to_string(*a.runs);
    if (a.seed) a.cfg.flags["framework.seed"] = std::to_string(*a.seed);
    const FrameworkConfig cfg = a.cfg.load();

    const fs::path dir(a.out);
    ensure_dir(dir);
    Manifest m;
    m.command = "explore";
    m.args = argv;
    m.config_ini = cfg.to_ini();
    m.substrate = substrate_json(cfg.substrate);
    m.substrate["algo"] = a.algo;
    for (std::size_t r = 0; r < cfg.runs; ++r) {
        m.seeds.push_back(derive_seed(cfg.seed, r));
        m.outputs.push_back("db_run" + std::to_string(r) + ".ndjson");
        if (a.algo == "ns") {
            m.outputs.push_back("archive_run" + std::to_string(r) + ".ndjson");
            m.outputs.push_back("checkpoint_run" + std::to_string(r) + ".json");
        }
    }
    m.write(dir / "manifest_explore.json", false);

    parallel_for(cfg.runs, a.jobs, [&](std::size_t r) { explore_run(cfg, a, r, m.seeds[r], dir); });

    m.write(dir / "manifest_explore.json", true);
    out << "explore: " << cfg.runs << " run(s), " << cfg.search.population + cfg.search.generations
        << " evaluations each, written to " << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- quality

struct QualityArgs {
    ConfigOptions cfg;
    std::vector<std::string> db, ref;
    std::vector<double> voxel;
    std::optional<std::size_t> interval;
    std::string out;
};

std::string bounds_text(const Bounds& b)
{
    if (b.empty) return "empty";
    static const char* axis[] = {"KR", "GR", "MC"};
    std::string s;
    for (int i = 0; i < 3; ++i) {
        if (i) s += "  ";
        s += std::string(axis[i]) + " [" + fixed(b.lo[i], 4) + ", " + fixed(b.hi[i], 4) + "]";
    }
    return s;
}

void summary_text(std::ostream& os, const std::string& title, const std::vector<std::string>& files,
                  const CoverageSummary& s)
{
    os << title << " (" << files.size() << " database(s))\n";
    for (std::size_t i = 0; i < files.size(); ++i) os << "  " << files[i] << "  coverage " << s.per_run[i] << "\n";
    os << "  mean " << fixed(s.mean, 2) << "  min " << s.min << "  max " << s.max << "  pooled " << s.pooled << "\n";
}

int cmd_quality(QualityArgs& a, const std::vector<std::string>& argv, std::ostream& out)
{
    if (!a.voxel.empty()) {
        if (a.voxel.size() != 1 && a.voxel.size() != 3) throw ConfigError("--voxel takes one edge or three");
        std::string v;
        for (double e : a.voxel) v += format_double(e) + " ";
        a.cfg.flags["quality.voxel"] = v;
    }
    if (a.interval) a.cfg.flags["quality.interval"] = std::to_string(*a.interval);
    const FrameworkConfig cfg = a.cfg.load();

    auto load = [](const std::vector<std::string>& files) {
        std::vector<Database> dbs;
        for (const auto& f : files) dbs.push_back(read_database(f));
        return dbs;
    };
    const auto test = load(a.db);
    const auto ref = load(a.ref);
    std::vector<std::vector<BehaviourPoint>> test_pts, ref_pts;
    for (const auto& d : test) test_pts.push_back(d.behaviours());
    for (const auto& d : ref) ref_pts.push_back(d.behaviours());

    const bool has_ref = !ref.empty();
    const ComparisonReport rep = compare(test_pts, has_ref ? ref_pts : test_pts, cfg.quality.voxel);

    std::ostringstream report;
    report << "quality report\n";
    report << "voxel " << format_double(rep.voxel.kr) << " x " << format_double(rep.voxel.gr) << " x "
           << format_double(rep.voxel.mc) << "\n";
    report << "bounds " << bounds_text(rep.bounds) << "\n";
    summary_text(report, "test", a.db, rep.test);
    if (has_ref) {
        summary_text(report, "reference", a.ref, rep.reference);
        report << "ratio (mean test / mean reference) " << fixed(rep.ratio, 6) << "\n";
    }

    std::vector<CurveRow> curves;
    auto add_curves = [&](const std::vector<Database>& dbs, const std::string& group) {
        for (std::size_t i = 0; i < dbs.size(); ++i) {
            const auto stamped = dbs[i].stamped();
            if (stamped.empty()) continue;
            for (const auto& p : coverage_curve(stamped, rep.voxel, rep.bounds, cfg.quality.interval))
                curves.push_back({p.generation, p.coverage, group + ":" + std::to_string(i)});
        }
    };
    add_curves(test, "test");
    add_curves(ref, "reference");

    out << report.str();
    if (!a.out.empty()) {
        const fs::path dir(a.out);
        ensure_dir(dir);
        Manifest m;
        m.command = "quality";
        m.args = argv;
        m.config_ini = cfg.to_ini();
        m.outputs = {"quality_report.txt", "coverage_curves.csv"};
        write_text_file(dir / "quality_report.txt", "# manifest: manifest_quality.json\n" + report.str());
        std::ostringstream csv;
        write_coverage_csv(csv, "manifest_quality.json", curves);
        write_text_file(dir / "coverage_curves.csv", csv.str());
        m.write(dir / "manifest_quality.json", true);
    }
    return 0;
}

// ---------------------------------------------------------------- eval-tasks

struct EvalArgs {
    ConfigOptions cfg;
    std::vector<std::string> db;
    std::vector<std::string> tasks;
    std::optional<std::size_t> sample;
    std::optional<std::uint64_t> seed;
    std::string laser;
    std::string out;
    std::size_t jobs = 1;
};

TaskDataset make_task(TaskId id, const FrameworkConfig& cfg)
{
    TaskDataset d;
    switch (id) {
    case TaskId::Narma10: d = gen_narma(10, cfg.tasks.length, cfg.tasks.seed); break;
    case TaskId::Narma30: d = gen_narma(30, cfg.tasks.length, cfg.tasks.seed); break;
    case TaskId::Nce: d = gen_nce(cfg.tasks.length, cfg.tasks.seed); break;
    case TaskId::Laser:
        d = load_laser(cfg.tasks.laser_path.empty() ? default_laser_path() : fs::path(cfg.tasks.laser_path));
        break;
    }
    d.split(cfg.tasks.train_fraction, cfg.tasks.validation_fraction);
    d.validate();
    return d;
}

// Loads databases and forces the config's substrate to match their headers.
FrameworkConfig config_for_databases(const ConfigOptions& opts, const std::vector<Database>& dbs)
{
    if (dbs.empty()) throw ConfigError("at least one --db is required");
    const auto& h = dbs.front().header;
    for (const auto& d : dbs)
        if (d.header.substrate != h.substrate || d.header.nodes != h.nodes || d.header.gene_count != h.gene_count)
            throw DataError("databases describe different substrates");
    FrameworkConfig cfg = opts.load({{"substrate.kind", h.substrate}, {"substrate.nodes", std::to_string(h.nodes)}});
    if (cfg.substrate.gene_count() != h.gene_count)
        throw DataError("database gene count " + std::to_string(h.gene_count) + " does not match the substrate (" +
                        std::to_string(cfg.substrate.gene_count()) + ")");
    return cfg;
}

// Pools every record of `dbs` and draws `sample` of them without replacement,
// keeping file order.
std::vector<const SearchIndividual*> sample_records(const std::vector<Database>& dbs, std::optional<std::size_t> sample,
                                                    std::uint64_t seed)
{
    std::vector<const SearchIndividual*> all;
    for (const auto& d : dbs)
        for (const auto& r : d.records) all.push_back(&r);
    if (!sample || *sample >= all.size()) return all;
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 77));
    for (std::size_t i = 0; i < *sample; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(*sample);
    std::sort(idx.begin(), idx.end());
    std::vector<const SearchIndividual*> out;
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

std::vector<PairRow> evaluate_pairs(const FrameworkConfig& cfg, const std::vector<const SearchIndividual*>& records,
                                    const TaskDataset& dataset, std::size_t jobs)
{
    const auto substrate = make_substrate(cfg.substrate);
    std::vector<PairRow> rows(records.size());
    parallel_for(records.size(), jobs, [&](std::size_t i) {
        const auto& r = *records[i];
        if (r.genotype.genes.empty()) throw DataError("database record without genes cannot be evaluated");
        check_genotype(cfg.substrate, r.genotype);
        const TaskEvaluation e = evaluate_task(*substrate, r.genotype, dataset, cfg.substrate.washout, cfg.tasks.lambda_grid);
        rows[i] = {r.run_id, r.generation, r.behaviour, e.nmse};
    });
    return rows;
}

int cmd_eval_tasks(EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out)
{
    if (!a.laser.empty()) a.cfg.flags["tasks.laser_path"] = a.laser;
    std::vector<TaskId> ids;
    for (const auto& t : a.tasks) ids.push_back(task_from_string(t));
    std::vector<Database> dbs;
    for (const auto& f : a.db) dbs.push_back(read_database(f));
    const FrameworkConfig cfg = config_for_databases(a.cfg, dbs);
    const std::uint64_t seed = a.seed.value_or(cfg.seed);

    const fs::path dir(a.out);
    ensure_dir(dir);
    Manifest m;
    m.command = "eval-tasks";
    m.args = argv;
    m.config_ini = cfg.to_ini();
    m.seeds = {seed, cfg.tasks.seed};
    m.substrate = substrate_json(cfg.substrate);

    const auto records = sample_records(dbs, a.sample, seed);
    for (TaskId id : ids) {
        const TaskDataset dataset = make_task(id, cfg);
        const auto rows = evaluate_pairs(cfg, records, dataset, a.jobs);
        const std::string name = "pairs_" + std::string(to_string(id)) + ".csv";
        std::ostringstream csv;
        write_pairs(csv, "manifest_eval_tasks.json", rows);
        write_text_file(dir / name, csv.str());
        m.outputs.push_back(name);
        out << "eval-tasks: " << to_string(id) << " " << rows.size() << " pair(s) -> " << (dir / name).string() << "\n";
    }
    m.write(dir / "manifest_eval_tasks.json", true);
    return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    ConfigOptions cfg;
    std::string train, test, transfer_db, transfer_task;
    std::optional<std::size_t> transfer_sample;
    std::vector<std::string> thresholds;
    std::optional<std::uint64_t> seed;
    std::string out;
};

std::optional<double> parse_threshold(const std::string& s)
{
    if (s == "none") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("--threshold expects a number or 'none', got '" + s + "'");
    }
}

std::string threshold_text(const std::optional<double>& t) { return t ? format_double(*t) : "none"; }

int cmd_predict(PredictArgs& a, const std::vector<std::string>& argv, std::ostream& out)
{
    if (a.seed) a.cfg.flags["learning.seed"] = std::to_string(*a.seed);
    if (!a.test.empty() && !a.transfer_db.empty()) throw ConfigError("--test-pairs and --transfer-db are exclusive");
    if (!a.transfer_db.empty() && a.transfer_task.empty()) throw ConfigError("--transfer-db needs --task");

    std::vector<std::optional<double>> thresholds;
    for (const auto& t : a.thresholds) thresholds.push_back(parse_threshold(t));

    const auto train_rows = read_pairs(a.train);
    const auto train = to_samples(train_rows);

    std::vector<BehaviourSample> other;
    std::string other_name;
    FrameworkConfig cfg;
    if (!a.transfer_db.empty()) {
        std::vector<Database> dbs{read_database(a.transfer_db)};
        cfg = config_for_databases(a.cfg, dbs);
        const TaskDataset dataset = make_task(task_from_string(a.transfer_task), cfg);
        const auto rows = evaluate_pairs(cfg, sample_records(dbs, a.transfer_sample, cfg.seed), dataset, 1);
        other = to_samples(rows);
        other_name = a.transfer_db + " (" + a.transfer_task + ")";
    } else {
        cfg = a.cfg.load();
        if (!a.test.empty()) {
            other = to_samples(read_pairs(a.test));
            other_name = a.test;
        }
    }
    if (thresholds.empty()) thresholds.push_back(cfg.learning.threshold);

    std::ostringstream report, preds;
    json models = json::array();
    report << "predictor report\n";
    report << "train " << a.train << " (" << train.size() << " pairs)\n";
    report << "ensemble " << cfg.learning.ensemble << " x " << cfg.learning.hidden << " hidden, train fraction "
           << format_double(cfg.learning.train_fraction) << ", seed " << cfg.learning.seed << "\n";
    report << "threshold,count,train,test,mean_rmse,best_rmse,spearman_r,spearman_p\n";
    preds << "# manifest: manifest_predict.json\n";
    preds << "threshold,set,KR,GR,MC,actual,predicted\n";

    std::ostringstream transfer;
    if (!other_name.empty()) {
        transfer << "transfer " << other_name << " (" << other.size() << " pairs)\n";
        transfer << "threshold,count,transfer_rmse,best_self_rmse,delta,extrapolated\n";
    }

    for (const auto& t : thresholds) {
        TrainSpec spec = cfg.learning;
        spec.threshold = t;
        const EnsembleResult res = fit_ensemble(train, spec);
        const PredictorModel& best = res.models[res.best];
        const auto& test = res.split.test;
        const auto predicted = best.predict(test);

        std::string r_text = "n/a", p_text = "n/a";
        if (test.size() >= 3) {
            std::vector<double> actual;
            for (const auto& s : test) actual.push_back(s.nmse);
            try {
                const SpearmanResult sr = spearman(predicted, actual);
                r_text = fixed(sr.rho, 6);
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6g", sr.p_value);
                p_text = buf;
            } catch (const NumericalError&) {
            }
        }
        report << threshold_text(t) << "," << res.split.train.size() + test.size() << "," << res.split.train.size()
               << "," << test.size() << "," << fixed(res.mean_test_error) << "," << fixed(res.test_error[res.best])
               << "," << r_text << "," << p_text << "\n";
        for (std::size_t i = 0; i < test.size(); ++i)
            preds << threshold_text(t) << ",self," << format_double(test[i].behaviour.kr) << ","
                  << format_double(test[i].behaviour.gr) << "," << format_double(test[i].behaviour.mc) << ","
                  << format_double(test[i].nmse) << "," << format_double(predicted[i]) << "\n";

        json entry{{"threshold", t ? json(*t) : json(nullptr)}, {"best", res.best}, {"models", json::array()}};
        for (const auto& model : res.models) entry["models"].push_back(json::parse(model.to_json()));
        models.push_back(entry);

        if (!other_name.empty()) {
            const DataSplit other_split = split_samples(other, spec);
            if (other_split.test.empty()) {
                transfer << threshold_text(t) << ",0,n/a,n/a,n/a,n/a\n";
                continue;
            }
            const TransferResult tr = transfer_predict(res, other_split.test);
            transfer << threshold_text(t) << "," << other_split.test.size() << "," << fixed(tr.error) << ","
                     << fixed(tr.best_self) << "," << fixed(tr.delta) << "," << (tr.extrapolated ? "yes" : "no")
                     << "\n";
            const auto tp = best.predict(other_split.test);
            for (std::size_t i = 0; i < other_split.test.size(); ++i) {
                const auto& s = other_split.test[i];
                preds << threshold_text(t) << ",transfer," << format_double(s.behaviour.kr) << ","
                      << format_double(s.behaviour.gr) << "," << format_double(s.behaviour.mc) << ","
                      << format_double(s.nmse) << "," << format_double(tp[i]) << "\n";
            }
        }
    }
    report << transfer.str();
    out << report.str();

    if (!a.out.empty()) {
        const fs::path dir(a.out);
        ensure_dir(dir);
        Manifest m;
        m.command = "predict";
        m.args = argv;
        m.config_ini = cfg.to_ini();
        m.seeds = {cfg.learning.seed};
        m.outputs = {"predict_report.txt", "predictions.csv", "models.json"};
        write_text_file(dir / "predict_report.txt", "# manifest: manifest_predict.json\n" + report.str());
        write_text_file(dir / "predictions.csv", preds.str());
        json mj{{"manifest", "manifest_predict.json"}, {"ensembles", models}};
        write_text_file(dir / "models.json", mj.dump() + "\n");
        m.write(dir / "manifest_predict.json", true);
    }
    return 0;
}

// ---------------------------------------------------------------- gen-task

struct GenTaskArgs {
    ConfigOptions cfg;
    std::string task;
    std::optional<std::size_t> length;
    std::optional<std::uint64_t> seed;
    std::string laser;
    std::string out = "-";
};

int cmd_gen_task(GenTaskArgs& a, std::ostream& out)
{
    if (a.length) a.cfg.flags["tasks.length"] = std::to_string(*a.length);
    if (a.seed) a.cfg.flags["tasks.seed"] = std::to_string(*a.seed);
    if (!a.laser.empty()) a.cfg.flags["tasks.laser_path"] = a.laser;
    const FrameworkConfig cfg = a.cfg.load();
    const TaskDataset d = make_task(task_from_string(a.task), cfg);
    std::ostringstream csv;
    write_dataset_csv(csv, d);
    if (a.out == "-")
        out << csv.str();
    else
        write_text_file(a.out, csv.str());
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Characterise reservoir substrates: explore behaviour space, measure quality, evaluate tasks, "
                 "and learn behaviour-to-performance predictors.\n"
                 "Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.\n"
                 "CHARC_DATA_DIR names the directory holding santafe_laser.txt.",
                 "charc"};
    app.require_subcommand(1);

    ExploreArgs ex;
    auto* explore = app.add_subcommand("explore", "Search a substrate's behaviour space, one database per run");
    ex.cfg.attach(explore);
    explore->add_option("--substrate", ex.substrate, "Substrate kind")->check(CLI::IsMember({"esn", "dr"}));
    explore->add_option("--nodes", ex.nodes, "Reservoir nodes (ESN) or virtual nodes (delay reservoir)");
    explore->add_option("--gens", ex.gens, "Generations after the initial population (default 2000)");
    explore->add_option("--pop", ex.pop, "Population size (default 200)");
    explore->add_option("--runs", ex.runs, "Independent runs");
    explore->add_option("--seed", ex.seed, "Master seed; run r uses a seed derived from it");
    explore->add_option("--out", ex.out, "Output directory")->required();
    explore->add_option("--algo", ex.algo, "Search algorithm")->check(CLI::IsMember({"ns", "random"}));
    explore->add_option("--jobs", ex.jobs, "Runs executed concurrently")->check(CLI::PositiveNumber);
    explore->add_flag("--resume", ex.resume, "Continue runs from checkpoints in the output directory");

    QualityArgs qa;
    auto* quality = app.add_subcommand("quality", "Voxel coverage of databases, optionally against a reference");
    qa.cfg.attach(quality);
    quality->add_option("--db", qa.db, "Test substrate databases")->required();
    quality->add_option("--ref", qa.ref, "Reference substrate databases");
    quality->add_option("--voxel", qa.voxel, "Voxel edge, or three edges for KR GR MC (default 10)");
    quality->add_option("--interval", qa.interval, "Generations between coverage curve points (default 200)");
    quality->add_option("--out", qa.out, "Directory for the report and coverage CSV");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval-tasks", "Evaluate database configurations on benchmark tasks");
    ea.cfg.attach(eval);
    eval->add_option("--db", ea.db, "Databases produced by explore")->required();
    eval->add_option("--task", ea.tasks, "narma10, narma30, laser or nce")->required();
    eval->add_option("--sample", ea.sample, "Configurations drawn at random (default all)");
    eval->add_option("--seed", ea.seed, "Sampling seed (default framework.seed)");
    eval->add_option("--laser", ea.laser, "Santa Fe laser file");
    eval->add_option("--out", ea.out, "Output directory")->required();
    eval->add_option("--jobs", ea.jobs, "Evaluations executed concurrently")->check(CLI::PositiveNumber);

    PredictArgs pa;
    auto* predict = app.add_subcommand("predict", "Fit behaviour-to-NMSE predictors and test transfer");
    pa.cfg.attach(predict);
    predict->add_option("--train-pairs", pa.train, "Pair CSV used for training")->required();
    auto* test_opt = predict->add_option("--test-pairs", pa.test, "Pair CSV of another substrate");
    auto* tdb = predict->add_option("--transfer-db", pa.transfer_db, "Database of another substrate");
    test_opt->excludes(tdb);
    predict->add_option("--task", pa.transfer_task, "Task evaluated on --transfer-db");
    predict->add_option("--sample", pa.transfer_sample, "Configurations drawn from --transfer-db");
    predict->add_option("--threshold", pa.thresholds, "NMSE filter; repeat for a sweep, 'none' disables");
    predict->add_option("--seed", pa.seed, "Split and initialisation seed");
    predict->add_option("--out", pa.out, "Directory for report, predictions and models");

    GenTaskArgs ga;
    auto* gen = app.add_subcommand("gen-task", "Export a task dataset as CSV (t,u,y,split)");
    ga.cfg.attach(gen);
    gen->add_option("--task", ga.task, "narma10, narma30, laser or nce")->required();
    gen->add_option("--length", ga.length, "Samples to generate");
    gen->add_option("--seed", ga.seed, "Generator seed");
    gen->add_option("--laser", ga.laser, "Santa Fe laser file");
    gen->add_option("--out", ga.out, "Output CSV, '-' for stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (explore->parsed()) return cmd_explore(ex, args, out);
        if (quality->parsed()) return cmd_quality(qa, args, out);
        if (eval->parsed()) return cmd_eval_tasks(ea, args, out);
        if (predict->parsed()) return cmd_predict(pa, args, out);
        if (gen->parsed()) return cmd_gen_task(ga, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace charc
