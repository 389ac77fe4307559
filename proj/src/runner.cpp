#include "cascade/runner.hpp"

#include "cascade/envelope.hpp"
#include "cascade/errors.hpp"
#include "cascade/lattice_histogram.hpp"
#include "cascade/martingales.hpp"
#include "cascade/numeric.hpp"
#include "cascade/spine.hpp"
#include "cascade/verify.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace cascade {

const char* kCodeVersion = "0.1.0";

namespace {

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

RenewalTable build_table_for(const OffspringLaw& law, const ExperimentConfig& cfg,
                             long default_reps = 400'000) {
    const WalkLaw walk = associated_walk(law);
    const std::string method = cfg.experiment.method.value_or(walk.lattice ? "exact-lattice"
                                                                           : "monte-carlo");
    const double u_max = cfg.experiment.u_max.value_or(50.0 * walk.sd());
    const double grid = cfg.experiment.grid.value_or(0.0);
    if (method == "exact-lattice")
        return build_renewal(walk, u_max, grid, RenewalMethod::ExactLattice);
    if (method != "monte-carlo") throw ConfigInvalid("unknown renewal method: " + method);
    rng::Stream stream = rng::derive_stream(cfg.run.seed, 0, rng::kPurposeRenewal);
    return build_renewal(walk, u_max, grid, RenewalMethod::MonteCarlo, default_reps, &stream);
}

} // namespace

int effective_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void run_parallel_batches(long n_items, long batch_size, int workers,
                          const std::function<void(long, long, long)>& fn) {
    if (n_items <= 0) return;
    batch_size = std::max<long>(1, batch_size);
    const long n_batches = (n_items + batch_size - 1) / batch_size;
    workers = std::max(1, std::min<long>(workers, n_batches));
    if (workers == 1) {
        for (long b = 0; b < n_batches; ++b)
            fn(b, b * batch_size, std::min(n_items, (b + 1) * batch_size));
        return;
    }
    std::atomic<long> cursor{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::string first_error;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const long b = cursor.fetch_add(1);
                if (b >= n_batches) return;
                try {
                    fn(b, b * batch_size, std::min(n_items, (b + 1) * batch_size));
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error.empty()) first_error = e.what();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (!first_error.empty()) throw WorkerFailure(first_error);
}

void write_output(RunManifest& manifest, const std::string& dir, const std::string& name,
                  const std::string& content) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + path);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.close();
    manifest.outputs.push_back({path, content.size(), hex64(num::fnv1a64(content))});
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["code_version"] = code_version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["master_seed"] = master_seed;
    j["workers"] = workers;
    j["replicas"] = replicas;
    nlohmann::json purposes_json = nlohmann::json::array();
    for (const auto& [name, id] : purposes) purposes_json.push_back({{"name", name}, {"id", id}});
    j["stream_derivation"] = {{"scheme", "philox4x32-10(master_seed; replica, purpose) -> xoshiro256++"},
                              {"purposes", purposes_json}};
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : outputs)
        outs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"fnv64", o.fnv64}});
    j["outputs"] = outs;
    j["complete"] = complete;
    if (!error.empty()) j["error"] = error;
    return j.dump(2);
}

namespace {

struct ExperimentContext {
    const ExperimentConfig& cfg;
    OffspringLaw law;
    RunManifest manifest;
    int workers;
};

void run_model_diagnose(ExperimentContext& ctx) {
    const long budget = ctx.cfg.experiment.budget.value_or(1'000'000);
    nlohmann::json j;
    j["law"] = {{"label", ctx.law.label},
                {"fingerprint", ctx.law.fingerprint()},
                {"boundary_normalized", ctx.law.boundary_normalized},
                {"lattice", ctx.law.lattice},
                {"lattice_span", ctx.law.lattice_span},
                {"mean_count", ctx.law.mean_count()},
                {"extinction_probability", ctx.law.extinction_probability()}};
    auto emit = [&](const char* name, const BoundaryDiagnostics& d) {
        j[name] = {{"m0", d.m0},
                   {"m1", d.m1},
                   {"sigma2", d.sigma2},
                   {"abs_moment3eps", d.abs_moment3eps},
                   {"l_moment", d.l_moment},
                   {"eps", d.eps},
                   {"p", d.p},
                   {"se_m0", d.se_m0},
                   {"se_m1", d.se_m1},
                   {"se_sigma2", d.se_sigma2}};
    };
    if (ctx.law.kind == OffspringKind::GaussianBinary) {
        emit("quadrature", boundary_diagnostics(ctx.law, DiagMethod::Quadrature));
    } else {
        emit("closed_form", boundary_diagnostics(ctx.law, DiagMethod::ClosedForm));
    }
    rng::Stream stream = rng::derive_stream(ctx.cfg.run.seed, 0, rng::kPurposeDiagnostics);
    emit("monte_carlo", boundary_diagnostics(ctx.law, DiagMethod::MonteCarlo, budget, &stream));
    write_output(ctx.manifest, ctx.cfg.run.out, "diagnostics.json", j.dump(2));
    ctx.manifest.purposes.emplace_back("diagnostics", rng::kPurposeDiagnostics);
}

void run_grow(ExperimentContext& ctx) {
    const long replicas = ctx.cfg.experiment.replicas.value_or(1);
    const int depth = static_cast<int>(ctx.cfg.experiment.depth.value_or(10));
    const std::uint64_t cap = ctx.cfg.experiment.cap.value_or(kDefaultGenerationCap);
    const bool retain = ctx.cfg.experiment.retain_trees.value_or(false);
    nlohmann::json summary = nlohmann::json::array();
    for (long rep = 0; rep < replicas; ++rep) {
        rng::Stream stream = rng::derive_stream(ctx.cfg.run.seed, static_cast<std::uint64_t>(rep),
                                                rng::kPurposeTree);
        const BrwTree tree = grow_tree(ctx.law, depth, cap, stream);
        nlohmann::json row;
        row["replica"] = rep;
        row["extinct"] = tree.extinct;
        row["min_position"] = min_position(tree);
        std::vector<std::uint64_t> pops;
        for (int g = 0; g <= tree.depth; ++g) pops.push_back(tree.population(g));
        row["population"] = pops;
        summary.push_back(row);
        if (retain) {
            namespace fs = std::filesystem;
            fs::create_directories(ctx.cfg.run.out);
            const std::string path =
                (fs::path(ctx.cfg.run.out) / ("tree_" + std::to_string(rep) + ".cbrw")).string();
            write_tree_binary(tree, path);
            std::ifstream is(path, std::ios::binary);
            std::ostringstream os;
            os << is.rdbuf();
            ctx.manifest.outputs.push_back(
                {path, os.str().size(), hex64(num::fnv1a64(os.str()))});
        }
    }
    write_output(ctx.manifest, ctx.cfg.run.out, "grow_summary.json", summary.dump(2));
    ctx.manifest.purposes.emplace_back("tree", rng::kPurposeTree);
}

void run_tree_martingales(ExperimentContext& ctx) {
    const long replicas = ctx.cfg.experiment.replicas.value_or(1000);
    const int depth = static_cast<int>(ctx.cfg.experiment.depth.value_or(12));
    const double alpha = ctx.cfg.experiment.alpha.value_or(5.0);
    const std::uint64_t cap = ctx.cfg.experiment.cap.value_or(kDefaultGenerationCap);
    const RenewalTable table = build_table_for(ctx.law, ctx.cfg);

    std::vector<MartingaleTrace> traces(static_cast<std::size_t>(replicas));
    run_parallel_batches(replicas, 64, ctx.workers, [&](long, long begin, long end) {
        for (long rep = begin; rep < end; ++rep) {
            rng::Stream stream = rng::derive_stream(ctx.cfg.run.seed,
                                                    static_cast<std::uint64_t>(rep),
                                                    rng::kPurposeTree);
            const BrwTree tree = grow_tree(ctx.law, depth, cap, stream);
            traces[static_cast<std::size_t>(rep)] = compute_martingale_trace(tree, alpha, &table);
        }
    });

    std::ostringstream csv;
    csv << "replica_id,n,W_n,D_n,alpha,D_n_alpha,sqrtn_W_n\n";
    for (long rep = 0; rep < replicas; ++rep) {
        const auto& tr = traces[static_cast<std::size_t>(rep)];
        for (std::size_t n = 0; n < tr.additive.size(); ++n)
            csv << rep << ',' << n << ',' << format_double(tr.additive[n]) << ','
                << format_double(tr.derivative[n]) << ',' << format_double(alpha) << ','
                << format_double(tr.truncated[n]) << ',' << format_double(tr.seneta_heyde[n])
                << '\n';
    }
    write_output(ctx.manifest, ctx.cfg.run.out, "martingales.csv", csv.str());

    nlohmann::json j;
    for (int n = 0; n <= depth; ++n) {
        num::Accumulator w, d, t;
        for (const auto& tr : traces) {
            w.add(tr.additive[static_cast<std::size_t>(n)]);
            d.add(tr.derivative[static_cast<std::size_t>(n)]);
            t.add(tr.truncated[static_cast<std::size_t>(n)]);
        }
        j["levels"].push_back({{"n", n},
                               {"W_mean", w.mean()},
                               {"W_se", w.se()},
                               {"D_mean", d.mean()},
                               {"D_se", d.se()},
                               {"D_alpha_mean", t.mean()},
                               {"D_alpha_se", t.se()}});
    }
    j["alpha"] = alpha;
    j["R_alpha"] = table(alpha);
    write_output(ctx.manifest, ctx.cfg.run.out, "martingales_summary.json", j.dump(2));
    ctx.manifest.purposes.emplace_back("tree", rng::kPurposeTree);
}

void run_renewal(ExperimentContext& ctx) {
    const WalkLaw walk = associated_walk(ctx.law);
    const long reps = ctx.cfg.experiment.replicas.value_or(400'000);
    const std::string method = ctx.cfg.experiment.method.value_or(
        walk.lattice ? "exact-lattice" : "monte-carlo");
    RenewalTable table;
    if (method == "exact-lattice") {
        table = build_renewal(walk, ctx.cfg.experiment.u_max.value_or(50.0 * walk.sd()), 0.0,
                              RenewalMethod::ExactLattice);
    } else {
        rng::Stream stream = rng::derive_stream(ctx.cfg.run.seed, 0, rng::kPurposeRenewal);
        table = build_renewal(walk, ctx.cfg.experiment.u_max.value_or(50.0 * walk.sd()),
                              ctx.cfg.experiment.grid.value_or(0.0), RenewalMethod::MonteCarlo,
                              reps, &stream);
    }
    std::ostringstream csv;
    csv << "# method=" << method << " walk=" << walk.provenance
        << " c0=" << format_double(table.c0()) << " e_abs_h1=" << format_double(table.e_abs_h1)
        << "\n";
    csv << "u,R,SE\n";
    for (std::size_t k = 0; k < table.values.size(); ++k)
        csv << format_double(static_cast<double>(k) * table.grid_step) << ','
            << format_double(table.values[k]) << ','
            << format_double(k < table.se.size() ? table.se[k] : 0.0) << '\n';
    write_output(ctx.manifest, ctx.cfg.run.out, "renewal.csv", csv.str());

    rng::Stream res_stream = rng::derive_stream(ctx.cfg.run.seed, 1, rng::kPurposeRenewal);
    nlohmann::json j;
    j["c0"] = table.c0();
    j["c0_tail_fit"] = table.c0_tail_fit;
    j["e_abs_h1"] = table.e_abs_h1;
    j["se_e_abs_h1"] = table.se_e_abs_h1;
    j["c3"] = table.c3;
    j["overflows"] = table.overflow_count;
    for (double u : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        const ResidualEstimate r = renewal_identity_residual(table, walk, u, 200'000, &res_stream);
        j["harmonicity"].push_back({{"u", u}, {"residual", r.value}, {"se", r.se}});
    }
    write_output(ctx.manifest, ctx.cfg.run.out, "renewal_summary.json", j.dump(2));
    ctx.manifest.purposes.emplace_back("renewal", rng::kPurposeRenewal);
}

void run_conditioned_walk(ExperimentContext& ctx) {
    const WalkLaw walk = associated_walk(ctx.law);
    const RenewalTable table = build_table_for(ctx.law, ctx.cfg);
    const long replicas = ctx.cfg.experiment.replicas.value_or(100);
    const long depth = ctx.cfg.experiment.depth.value_or(1000);
    const double alpha = ctx.cfg.experiment.alpha.value_or(0.0);

    std::vector<ConditionedPath> paths(static_cast<std::size_t>(replicas));
    run_parallel_batches(replicas, 16, ctx.workers, [&](long, long begin, long end) {
        for (long rep = begin; rep < end; ++rep) {
            rng::Stream stream = rng::derive_stream(ctx.cfg.run.seed,
                                                    static_cast<std::uint64_t>(rep),
                                                    rng::kPurposeWalk);
            paths[static_cast<std::size_t>(rep)] =
                conditioned_path(walk, table, alpha, depth, stream);
        }
    });

    std::ostringstream csv;
    csv << "replica,k,S_k\n";
    for (long rep = 0; rep < replicas; ++rep) {
        const auto& p = paths[static_cast<std::size_t>(rep)];
        for (std::size_t k = 0; k < p.values.size(); ++k)
            csv << rep << ',' << (k + 1) << ',' << format_double(p.values[k]) << '\n';
    }
    write_output(ctx.manifest, ctx.cfg.run.out, "conditioned_paths.csv", csv.str());

    if (ctx.cfg.experiment.ns) {
        const std::vector<long> ns = parse_long_list(*ctx.cfg.experiment.ns);
        rng::Stream stream = rng::derive_stream(ctx.cfg.run.seed, 1ull << 32, rng::kPurposeWalk);
        const auto tails = min_tail_probability(walk, table, alpha,
                                                ctx.cfg.experiment.x.value_or(1.0), ns,
                                                ctx.cfg.experiment.horizon.value_or(2 * ns.back()),
                                                ctx.cfg.experiment.budget.value_or(20'000), stream);
        nlohmann::json j;
        for (std::size_t i = 0; i < ns.size(); ++i)
            j["min_tail"].push_back(
                {{"n", ns[i]}, {"estimate", tails[i].value}, {"se", tails[i].se}});
        write_output(ctx.manifest, ctx.cfg.run.out, "min_tail.json", j.dump(2));
    }
    ctx.manifest.purposes.emplace_back("walk", rng::kPurposeWalk);
}

void run_spine(ExperimentContext& ctx, bool envelope_mode) {
    const RenewalTable table = build_table_for(ctx.law, ctx.cfg);
    const long replicas = ctx.cfg.experiment.replicas.value_or(envelope_mode ? 200 : 100);
    const long depth = ctx.cfg.experiment.depth.value_or(envelope_mode ? 10'000 : 1000);
    const int side_depth = static_cast<int>(ctx.cfg.experiment.side_depth.value_or(20));
    const double alpha = ctx.cfg.experiment.alpha.value_or(8.0);
    const std::uint64_t side_cap = ctx.cfg.experiment.side_cap.value_or(1ull << 20);

    std::vector<SpineRealization> spines(static_cast<std::size_t>(replicas));
    run_parallel_batches(replicas, 4, ctx.workers, [&](long, long begin, long end) {
        for (long rep = begin; rep < end; ++rep) {
            rng::Stream spine_stream = rng::derive_stream(
                ctx.cfg.run.seed, static_cast<std::uint64_t>(rep), rng::kPurposeSpine);
            rng::Stream side_stream = rng::derive_stream(
                ctx.cfg.run.seed, static_cast<std::uint64_t>(rep), rng::kPurposeSide);
            spines[static_cast<std::size_t>(rep)] =
                sample_spine(ctx.law, table, alpha, depth, side_depth, side_cap, spine_stream,
                             &side_stream);
        }
    });

    const long stride = ctx.cfg.experiment.plot_stride.value_or(envelope_mode ? 16 : 1);
    std::ostringstream csv;
    csv << "replica,k,V_wk,dhat_k,side_cap_hit\n";
    for (long rep = 0; rep < replicas; ++rep) {
        const auto& spine = spines[static_cast<std::size_t>(rep)];
        for (std::size_t k = 0; k < spine.dhat.size(); k += static_cast<std::size_t>(stride))
            csv << rep << ',' << k << ',' << format_double(spine.v[k]) << ','
                << format_double(spine.dhat[k]) << ',' << (spine.side_caps_hit > 0 ? 1 : 0)
                << '\n';
    }
    write_output(ctx.manifest, ctx.cfg.run.out, "spine.csv", csv.str());
    ctx.manifest.purposes.emplace_back("spine", rng::kPurposeSpine);
    ctx.manifest.purposes.emplace_back("side", rng::kPurposeSide);

    if (!envelope_mode) return;

    // Envelope reports against the iterated-log family and the
    // sqrt(2 sigma^2 n loglog n) pair.
    const double sigma2 = law_sigma2(ctx.law);
    const double delta = ctx.cfg.experiment.delta.value_or(0.3);
    const long n0 = ctx.cfg.experiment.n0.value_or(100);
    std::vector<std::vector<double>> masses;
    masses.reserve(spines.size());
    for (const auto& spine : spines) {
        std::vector<double> mass = spine_mass_series(spine);
        // Keep strictly positive mass: drop the trailing entries where the
        // truncated tail sum could vanish.
        mass.resize(mass.size() - std::min<std::size_t>(mass.size(), 64));
        masses.push_back(std::move(mass));
    }
    auto lil_env = [&](double sign) {
        return [sigma2, sign, delta](double n) {
            return std::exp(-(1.0 + sign * delta) *
                            std::sqrt(2.0 * sigma2 * n * std::log(std::log(n))));
        };
    };
    const EnvelopeReport lower = envelope_exceedance(masses, lil_env(+1.0), n0);
    const EnvelopeReport upper = envelope_exceedance(masses, lil_env(-1.0), n0);
    const PsiSpec psi_conv = make_psi_perturbed(1, 1.0);
    const PsiSpec psi_div = make_psi(1);
    const EnvelopeReport conv = envelope_exceedance(
        masses,
        [&](double n) { return std::exp(-std::sqrt(n) * psi_value(psi_conv, n)); }, n0);
    const EnvelopeReport div = envelope_exceedance(
        masses, [&](double n) { return std::exp(-std::sqrt(n) * psi_value(psi_div, n)); }, n0);

    nlohmann::json j;
    auto emit = [&](const char* name, const EnvelopeReport& rep) {
        j[name] = {{"aa_below", rep.aa_below_fraction},
                   {"aa_above", rep.aa_above_fraction},
                   {"io_above", rep.io_above_fraction},
                   {"io_below", rep.io_below_fraction},
                   {"n0", rep.n0},
                   {"windows", rep.windows.size()}};
    };
    emit("lil_lower", lower);
    emit("lil_upper", upper);
    emit("psi_convergent", conv);
    emit("psi_divergent", div);
    j["delta"] = delta;
    j["sigma2"] = sigma2;
    write_output(ctx.manifest, ctx.cfg.run.out, "envelope_summary.json", j.dump(2));

    std::ostringstream plot;
    plot << "replica,n,phi_lower,phi_upper,minus_log_mass\n";
    for (std::size_t r = 0; r < masses.size(); ++r)
        for (std::size_t i = 0; i < masses[r].size(); i += static_cast<std::size_t>(stride)) {
            const double n = static_cast<double>(i + 1);
            if (n < static_cast<double>(n0)) continue;
            plot << r << ',' << n << ',' << format_double(lil_env(+1.0)(n)) << ','
                 << format_double(lil_env(-1.0)(n)) << ','
                 << format_double(-std::log(masses[r][i])) << '\n';
        }
    write_output(ctx.manifest, ctx.cfg.run.out, "envelope_plot.csv", plot.str());
}

void run_phase_scan(ExperimentContext& ctx) {
    const std::vector<double> betas =
        parse_double_list(ctx.cfg.experiment.betas.value_or(std::string("0.5, 1, 2")));
    const int depth = static_cast<int>(ctx.cfg.experiment.depth.value_or(18));
    const long replicas = ctx.cfg.experiment.replicas.value_or(2000);
    const bool fast = lattice_histogram_supported(ctx.law);

    // values[beta][n][replica]
    std::vector<std::vector<std::vector<double>>> values(
        betas.size(), std::vector<std::vector<double>>(static_cast<std::size_t>(depth) + 1,
                                                       std::vector<double>(
                                                           static_cast<std::size_t>(replicas))));
    run_parallel_batches(replicas, 32, ctx.workers, [&](long, long begin, long end) {
        for (long rep = begin; rep < end; ++rep) {
            rng::Stream stream = rng::derive_stream(ctx.cfg.run.seed,
                                                    static_cast<std::uint64_t>(rep),
                                                    rng::kPurposeTree);
            if (fast) {
                const LatticeHistogram hist = grow_lattice_histogram(ctx.law, depth, stream);
                for (std::size_t b = 0; b < betas.size(); ++b)
                    for (int n = 0; n <= depth; ++n)
                        values[b][static_cast<std::size_t>(n)][static_cast<std::size_t>(rep)] =
                            hist.partition(n, betas[b]);
            } else {
                const BrwTree tree = grow_tree(ctx.law, depth,
                                               ctx.cfg.experiment.cap.value_or(
                                                   kDefaultGenerationCap),
                                               stream);
                for (std::size_t b = 0; b < betas.size(); ++b)
                    for (int n = 0; n <= depth; ++n)
                        values[b][static_cast<std::size_t>(n)][static_cast<std::size_t>(rep)] =
                            partition_function(tree, betas[b], n).z;
            }
        }
    });

    std::ostringstream csv;
    csv << "beta,n,normalization,median_Z,median_normalized_Z\n";
    for (std::size_t b = 0; b < betas.size(); ++b) {
        const double beta = betas[b];
        for (int n = 1; n <= depth; ++n) {
            double norm;
            if (beta < 1.0) norm = std::pow(law_rho(ctx.law, beta), -static_cast<double>(n));
            else if (beta == 1.0) norm = std::sqrt(static_cast<double>(n));
            else norm = std::pow(static_cast<double>(n), 1.5 * beta);
            std::vector<double> zs = values[b][static_cast<std::size_t>(n)];
            const double med = num::median(zs);
            for (double& z : zs) z *= norm;
            csv << format_double(beta) << ',' << n << ',' << format_double(norm) << ','
                << format_double(med) << ',' << format_double(num::median(zs)) << '\n';
        }
    }
    write_output(ctx.manifest, ctx.cfg.run.out, "phase_scan.csv", csv.str());
    ctx.manifest.purposes.emplace_back("tree", rng::kPurposeTree);
}

} // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentContext ctx{config, config.build_law(), RunManifest{}, 0};
    ctx.workers = effective_workers(config.run.workers);
    ctx.manifest.config_hash = hex64(config.config_hash());
    ctx.manifest.code_version = kCodeVersion;
    ctx.manifest.started_at = timestamp_utc();
    ctx.manifest.master_seed = config.run.seed;
    ctx.manifest.workers = ctx.workers;
    ctx.manifest.replicas = config.experiment.replicas.value_or(0);
    try {
        const std::string& kind = config.experiment.kind;
        if (kind == "model-diagnose") run_model_diagnose(ctx);
        else if (kind == "grow") run_grow(ctx);
        else if (kind == "tree-martingales") run_tree_martingales(ctx);
        else if (kind == "renewal") run_renewal(ctx);
        else if (kind == "conditioned-walk") run_conditioned_walk(ctx);
        else if (kind == "spine") run_spine(ctx, false);
        else if (kind == "spine-envelope") run_spine(ctx, true);
        else if (kind == "phase-scan") run_phase_scan(ctx);
        else if (kind == "verify") {
            const VerifySummary summary =
                run_verification(config.run.seed, ctx.workers, config.run.out);
            write_output(ctx.manifest, config.run.out, "verify.json", verify_to_json(summary));
        } else {
            throw ConfigInvalid("unknown experiment kind: " + kind);
        }
        ctx.manifest.complete = true;
    } catch (const std::exception& e) {
        ctx.manifest.complete = false;
        ctx.manifest.error = e.what();
    }
    ctx.manifest.finished_at = timestamp_utc();
    write_output(ctx.manifest, config.run.out, "manifest.json", ctx.manifest.to_json());
    if (!ctx.manifest.complete) throw WorkerFailure("experiment failed: " + ctx.manifest.error);
    return ctx.manifest;
}

} // namespace cascade
