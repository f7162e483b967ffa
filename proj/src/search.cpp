#include "charc/search.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "charc/error.hpp"
#include "charc/kernels.hpp"

namespace charc {

using nlohmann::json;

void NsParams::validate() const
{
    if (population < 2) throw ConfigError("novelty search needs a population of at least 2");
    if (deme < 1 || deme >= population) throw ConfigError("deme must satisfy 1 <= deme < population");
    if (!(recombination_rate >= 0 && recombination_rate <= 1)) throw ConfigError("recombination rate must lie in [0, 1]");
    if (!(mutation_rate >= 0 && mutation_rate <= 1)) throw ConfigError("mutation rate must lie in [0, 1]");
    if (!(random_admission >= 0 && random_admission <= 1)) throw ConfigError("random admission must lie in [0, 1]");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (rho_update_interval < 1) throw ConfigError("rho_min update interval must be at least 1");
    if (!(rho_min >= 0)) throw ConfigError("rho_min must be non-negative");
}

void BehaviourSet::push_back(const BehaviourPoint& p)
{
    kr_.push_back(p.kr);
    gr_.push_back(p.gr);
    mc_.push_back(p.mc);
}

void BehaviourSet::set(std::size_t i, const BehaviourPoint& p)
{
    kr_.at(i) = p.kr;
    gr_.at(i) = p.gr;
    mc_.at(i) = p.mc;
}

void BehaviourSet::erase_front(std::size_t count)
{
    count = std::min(count, size());
    const auto n = static_cast<std::ptrdiff_t>(count);
    kr_.erase(kr_.begin(), kr_.begin() + n);
    gr_.erase(gr_.begin(), gr_.begin() + n);
    mc_.erase(mc_.begin(), mc_.begin() + n);
}

void BehaviourSet::distances_to(const BehaviourPoint& q, std::vector<double>& out) const
{
    const std::size_t base = out.size();
    out.resize(base + size());
    kernels::active().distance3(kr_.data(), gr_.data(), mc_.data(), size(), q.kr, q.gr, q.mc, out.data() + base);
}

namespace {

double mean_of_k_smallest(std::vector<double>& d, std::size_t k)
{
    if (d.empty()) return std::numeric_limits<double>::infinity();
    k = std::min(k, d.size());
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    // nth_element leaves the k smallest in [0, k); sort them so the sum is order-independent.
    std::sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += d[i];
    return s / static_cast<double>(k);
}

}  // namespace

double sparseness(const BehaviourPoint& x, std::span<const BehaviourPoint> others, std::size_t k)
{
    if (k < 1) throw ConfigError("k must be at least 1");
    std::vector<double> d;
    d.reserve(others.size());
    for (const auto& o : others) {
        const double dx = o.kr - x.kr, dy = o.gr - x.gr, dz = o.mc - x.mc;
        d.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    return mean_of_k_smallest(d, k);
}

double sparseness(const BehaviourPoint& x, const BehaviourSet& population, std::size_t exclude,
                  const BehaviourSet& archive, std::size_t k)
{
    if (k < 1) throw ConfigError("k must be at least 1");
    std::vector<double> d;
    d.reserve(population.size() + archive.size());
    population.distances_to(x, d);
    if (exclude < population.size()) d.erase(d.begin() + static_cast<std::ptrdiff_t>(exclude));
    archive.distances_to(x, d);
    return mean_of_k_smallest(d, k);
}

double update_rho_min(double rho_min, std::size_t added)
{
    if (added > 10) return rho_min * 1.2;
    if (added == 0) return rho_min * 0.95;
    return rho_min;
}

NoveltySearch::NoveltySearch(NsParams params, std::size_t gene_count, BehaviourFn evaluate, std::uint64_t seed,
                             std::size_t run_id, RecordSink sink)
    : params_(params)
    , gene_count_(gene_count)
    , evaluate_(std::move(evaluate))
    , sink_(std::move(sink))
    , rng_(seed)
    , run_id_(run_id)
    , rho_min_(params.rho_min)
{
    params_.validate();
    if (!evaluate_) throw ConfigError("novelty search needs a behaviour evaluator");
}

BehaviourPoint NoveltySearch::evaluate_safely(const Genotype& g)
{
    ++evaluations_;
    try {
        BehaviourPoint b = evaluate_(g);
        if (!std::isfinite(b.kr) || !std::isfinite(b.gr) || !std::isfinite(b.mc)) return {0, 0, 0, true};
        return b;
    } catch (const NumericalError&) {
        return {0, 0, 0, true};
    }
}

void NoveltySearch::emit(const SearchIndividual& ind)
{
    ++database_size_;
    if (sink_) sink_(ind);
}

void NoveltySearch::admit(const BehaviourPoint& b, std::size_t generation, double sparseness, bool initial)
{
    archive_.push_back(b);
    archive_log_.push_back({b, generation, rho_min_, sparseness, initial});
    if (params_.archive_limit > 0 && archive_.size() > params_.archive_limit)
        archive_.erase_front(archive_.size() - params_.archive_limit);
}

double NoveltySearch::population_sparseness(const BehaviourPoint& x, std::size_t exclude)
{
    ++sparseness_evaluations_;
    return sparseness(x, population_points_, exclude, archive_, params_.k);
}

void NoveltySearch::initialise()
{
    if (initialised_) return;
    population_.clear();
    population_.reserve(params_.population);
    for (std::size_t s = 0; s < params_.population; ++s) {
        Genotype g;
        g.genes.resize(gene_count_);
        for (auto& v : g.genes) v = rng_.uniform();
        population_.push_back({std::move(g), {}, 0, run_id_, s});
    }
    for (auto& ind : population_) {
        ind.behaviour = evaluate_safely(ind.genotype);
        population_points_.push_back(ind.behaviour);
        admit(ind.behaviour, 0, std::numeric_limits<double>::quiet_NaN(), true);
        emit(ind);
    }
    initialised_ = true;
}

void NoveltySearch::step()
{
    if (!initialised_) throw ConfigError("novelty search stepped before initialisation");
    const std::size_t pop = params_.population;
    const std::size_t deme = std::min(params_.deme, pop - 1);

    // Parent one uniformly, parent two on the ring within `deme` of it.
    const auto i = static_cast<std::size_t>(rng_.below(pop));
    const auto draw = static_cast<std::size_t>(rng_.below(2 * deme));
    const std::size_t offset = draw < deme ? pop - (draw + 1) : draw - deme + 1;
    const std::size_t j = (i + offset) % pop;

    const double rho_i = population_sparseness(population_[i].behaviour, i);
    const double rho_j = population_sparseness(population_[j].behaviour, j);
    const std::size_t winner = rho_i >= rho_j ? i : j;
    const std::size_t loser = winner == i ? j : i;

    Genotype child = infect(population_[winner].genotype, population_[loser].genotype, params_.recombination_rate, rng_);
    child = mutate(child, params_.mutation_rate, rng_);
    const BehaviourPoint b = evaluate_safely(child);

    ++generation_;
    SearchIndividual ind{std::move(child), b, generation_, run_id_, loser};
    population_[loser] = ind;
    population_points_.set(loser, b);
    emit(ind);

    const double rho_child = population_sparseness(b, loser);
    bool admitted = rho_child > rho_min_;
    if (!admitted && params_.random_admission > 0.0) admitted = rng_.bernoulli(params_.random_admission);
    if (admitted) {
        admit(b, generation_, rho_child, false);
        ++added_in_interval_;
    }

    if (trace_enabled_) {
        trace_.push_back({generation_, i, j, winner, rho_i, rho_j, rho_child, admitted, rho_min_,
                          population_[loser].genotype, b});
    }

    if (generation_ % params_.rho_update_interval == 0) {
        rho_min_ = update_rho_min(rho_min_, added_in_interval_);
        added_in_interval_ = 0;
    }
}

void NoveltySearch::run()
{
    initialise();
    while (generation_ < params_.generations) step();
}

namespace {

json behaviour_json(const BehaviourPoint& b)
{
    return json{{"KR", b.kr}, {"GR", b.gr}, {"MC", b.mc}, {"degenerate", b.degenerate}};
}

BehaviourPoint behaviour_from(const json& j)
{
    return {j.at("KR").get<double>(), j.at("GR").get<double>(), j.at("MC").get<double>(),
            j.value("degenerate", false)};
}

json params_json(const NsParams& p)
{
    return json{{"generations", p.generations}, {"population", p.population}, {"deme", p.deme},
                {"recombination_rate", p.recombination_rate}, {"mutation_rate", p.mutation_rate},
                {"rho_min", p.rho_min}, {"rho_update_interval", p.rho_update_interval}, {"k", p.k},
                {"random_admission", p.random_admission}, {"archive_limit", p.archive_limit}};
}

NsParams params_from(const json& j)
{
    NsParams p;
    p.generations = j.at("generations");
    p.population = j.at("population");
    p.deme = j.at("deme");
    p.recombination_rate = j.at("recombination_rate");
    p.mutation_rate = j.at("mutation_rate");
    p.rho_min = j.at("rho_min");
    p.rho_update_interval = j.at("rho_update_interval");
    p.k = j.at("k");
    p.random_admission = j.at("random_admission");
    p.archive_limit = j.at("archive_limit");
    return p;
}

}  // namespace

std::string NoveltySearch::checkpoint() const
{
    if (!initialised_) throw ConfigError("cannot checkpoint an uninitialised search");
    json pop = json::array();
    for (const auto& ind : population_)
        pop.push_back({{"genes", ind.genotype.genes}, {"behaviour", behaviour_json(ind.behaviour)},
                       {"generation", ind.generation}, {"slot", ind.slot}});
    json arch = json::array();
    // Only the entries still in the bounded archive participate in novelty.
    const std::size_t live_from = archive_log_.size() - archive_.size();
    for (std::size_t a = 0; a < archive_log_.size(); ++a) {
        const auto& e = archive_log_[a];
        arch.push_back({{"behaviour", behaviour_json(e.behaviour)}, {"generation", e.generation}, {"rho_min", e.rho_min},
                        {"sparseness", std::isnan(e.sparseness) ? json(nullptr) : json(e.sparseness)},
                        {"initial", e.initial}, {"live", a >= live_from}});
    }
    json j{{"format", "charc-checkpoint/1"},
           {"params", params_json(params_)},
           {"gene_count", gene_count_},
           {"run_id", run_id_},
           {"generation", generation_},
           {"rho_min", rho_min_},
           {"added_in_interval", added_in_interval_},
           {"database_size", database_size_},
           {"sparseness_evaluations", sparseness_evaluations_},
           {"evaluations", evaluations_},
           {"rng", rng_.save()},
           {"population", pop},
           {"archive", arch}};
    return j.dump();
}

NoveltySearch NoveltySearch::resume(const std::string& checkpoint, BehaviourFn evaluate, RecordSink sink)
{
    json j;
    try {
        j = json::parse(checkpoint);
    } catch (const json::exception& e) {
        throw DataError(std::string("unreadable search checkpoint: ") + e.what());
    }
    if (j.value("format", "") != "charc-checkpoint/1") throw DataError("not a search checkpoint");
    try {
        NoveltySearch ns(params_from(j.at("params")), j.at("gene_count"), std::move(evaluate), 0, j.at("run_id"),
                         std::move(sink));
        ns.rng_.restore(j.at("rng").get<std::string>());
        ns.generation_ = j.at("generation");
        ns.rho_min_ = j.at("rho_min");
        ns.added_in_interval_ = j.at("added_in_interval");
        ns.database_size_ = j.at("database_size");
        ns.sparseness_evaluations_ = j.at("sparseness_evaluations");
        ns.evaluations_ = j.at("evaluations");
        for (const auto& p : j.at("population")) {
            SearchIndividual ind;
            ind.genotype.genes = p.at("genes").get<std::vector<double>>();
            ind.behaviour = behaviour_from(p.at("behaviour"));
            ind.generation = p.at("generation");
            ind.slot = p.at("slot");
            ind.run_id = ns.run_id_;
            ns.population_points_.push_back(ind.behaviour);
            ns.population_.push_back(std::move(ind));
        }
        if (ns.population_.size() != ns.params_.population) throw DataError("checkpoint population size mismatch");
        for (const auto& a : j.at("archive")) {
            ArchiveEntry e;
            e.behaviour = behaviour_from(a.at("behaviour"));
            e.generation = a.at("generation");
            e.rho_min = a.at("rho_min");
            e.sparseness = a.at("sparseness").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                        : a.at("sparseness").get<double>();
            e.initial = a.at("initial");
            ns.archive_log_.push_back(e);
            if (a.at("live").get<bool>()) ns.archive_.push_back(e.behaviour);
        }
        ns.initialised_ = true;
        return ns;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed search checkpoint: ") + e.what());
    }
}

std::vector<SearchIndividual> random_search(std::size_t evals, std::size_t gene_count, const BehaviourFn& evaluate,
                                            std::uint64_t seed, std::size_t run_id, std::size_t population,
                                            const RecordSink& sink)
{
    if (!evaluate) throw ConfigError("random search needs a behaviour evaluator");
    Rng rng(seed);
    std::vector<SearchIndividual> out;
    for (std::size_t e = 0; e < evals; ++e) {
        SearchIndividual ind;
        ind.genotype.genes.resize(gene_count);
        for (auto& v : ind.genotype.genes) v = rng.uniform();
        try {
            ind.behaviour = evaluate(ind.genotype);
        } catch (const NumericalError&) {
            ind.behaviour = {0, 0, 0, true};
        }
        ind.generation = e < population ? 0 : e - population + 1;
        ind.run_id = run_id;
        ind.slot = e;
        if (sink)
            sink(ind);
        else
            out.push_back(std::move(ind));
    }
    return out;
}

}  // namespace charc
