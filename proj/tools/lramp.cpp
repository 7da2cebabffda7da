// lramp: command-line front end for the ramped Lindblad two-level library.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lindblad_ramp/lindblad_ramp.hpp"

using namespace lramp;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_numeric = 1;
constexpr int exit_usage = 2;

/// Reads a JSON object as CLI11 config items. Top-level keys naming a
/// subcommand hold that subcommand's options; any other key is offered to
/// every subcommand (unknown names are ignored).
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(std::vector<std::string> subcommands) : subs_(std::move(subcommands)) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& is) const override
    {
        json j;
        try {
            j = json::parse(is);
        } catch (const json::exception& e) {
            throw CLI::ConversionError("config", std::string("not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config", "top level must be an object");
        std::vector<CLI::ConfigItem> out;
        for (const auto& [key, val] : j.items()) {
            const bool is_sub = val.is_object() && std::find(subs_.begin(), subs_.end(), key) != subs_.end();
            if (is_sub) {
                for (const auto& [k2, v2] : val.items()) out.push_back(item({key}, k2, v2));
                continue;
            }
            out.push_back(item({}, key, val));
            for (const auto& s : subs_) out.push_back(item({s}, key, val));
        }
        return out;
    }

private:
    static std::string scalar(const json& v)
    {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const json& v)
    {
        CLI::ConfigItem it;
        it.parents = std::move(parents);
        it.name = name;
        if (v.is_array())
            for (const auto& e : v) it.inputs.push_back(scalar(e));
        else
            it.inputs.push_back(scalar(v));
        return it;
    }

    std::vector<std::string> subs_;
};

struct Physical {
    std::string kase = "gapped";
    double delta = 1.0;
    double gamma0 = 1.0;
    double epsilon = 1.0;
    std::string kind = "full";

    void add(CLI::App* app, bool with_kind = true)
    {
        app->add_option("--case", kase, "gapped or gapless")
            ->check(CLI::IsMember({"gapped", "gapless"}))
            ->capture_default_str();
        app->add_option("--delta", delta, "gap Δ (gapped case)")->capture_default_str();
        app->add_option("--gamma0", gamma0, "final coupling γ0 (gapless case)")->capture_default_str();
        app->add_option("--epsilon", epsilon, "γ0/Δ (gapped case)")->capture_default_str();
        if (with_kind)
            app->add_option("--kind", kind, "full or nojump")
                ->check(CLI::IsMember({"full", "nojump"}))
                ->capture_default_str();
    }

    [[nodiscard]] bool gapped() const { return kase == "gapped"; }
    [[nodiscard]] Kind mode_kind() const { return kind == "full" ? Kind::full_lindblad : Kind::no_jump; }
    [[nodiscard]] double scale() const { return gapped() ? delta : gamma0; }

    [[nodiscard]] ModeParams mode(double p, double tau) const
    {
        return gapped() ? ModeParams::gapped(p, delta, epsilon, tau) : ModeParams::gapless(p, gamma0, tau);
    }
};

struct Numerics {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t steps = 0;

    void add(CLI::App* app)
    {
        app->add_option("--rtol,--tol", rtol, "relative local-error tolerance")->capture_default_str();
        app->add_option("--atol", atol, "absolute local-error tolerance")->capture_default_str();
        app->add_option("--steps", steps, "fixed RK4 step count (0: adaptive)")->capture_default_str();
    }

    [[nodiscard]] StepControls controls() const
    {
        StepControls c = steps > 0 ? StepControls::fixed(steps) : StepControls{};
        c.rtol = rtol;
        c.atol = atol;
        c.validate();
        return c;
    }
};

/// Output sink: a file, or stdout for "-".
class Output {
public:
    explicit Output(const std::string& path)
    {
        if (path != "-") {
            file_.open(path);
            if (!file_) throw Error(Errc::invalid_argument, "cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

json config_json(const CLI::App* sub)
{
    json cfg = json::object();
    for (const CLI::Option* op : sub->get_options()) {
        const std::string name = op->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        if (op->get_expected_max() == 0) {
            cfg[name] = op->count() > 0;
        } else if (op->count() > 0) {
            const auto& r = op->results();
            cfg[name] = r.size() == 1 ? json(r.front()) : json(r);
        } else {
            cfg[name] = op->get_default_str();
        }
    }
    return cfg;
}

std::vector<std::string> provenance(const CLI::App* sub)
{
    return {"lramp " + sub->get_name(), "config " + config_json(sub).dump()};
}

void write_header(std::ostream& os, const std::vector<std::string>& lines)
{
    for (const auto& l : lines) os << "# " << l << '\n';
}

std::vector<double> linspace(double a, double b, std::size_t n)
{
    require(n >= 2, "need at least two grid points");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

void require_increasing(const std::vector<double>& v, const std::string& what)
{
    require(!v.empty(), what + " must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(v[i] > 0.0, what + " entries must be positive");
        if (i > 0) require(v[i] > v[i - 1], what + " must be strictly increasing");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Defect production in linearly ramped dissipative two-level modes"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (0: hardware concurrency)")->capture_default_str();
    const std::vector<std::string> sub_names{"evolve", "defect-profile", "density-sweep", "series", "collapse", "fit"};
    app.config_formatter(std::make_shared<JsonConfig>(sub_names));
    app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");

    // evolve
    auto* ev = app.add_subcommand("evolve", "trajectory of one mode over the ramp");
    double ev_p = 0.0, ev_delta = 1.0, ev_gamma0 = 1.0, ev_tau = 0.0;
    std::string ev_kind = "full", ev_out = "-";
    std::size_t ev_samples = 1000;
    Numerics ev_num;
    ev->add_option("--p", ev_p, "momentum")->capture_default_str();
    ev->add_option("--delta", ev_delta, "gap Δ (0: gapless)")->capture_default_str();
    ev->add_option("--gamma0", ev_gamma0, "final coupling γ0")->capture_default_str();
    ev->add_option("--tau", ev_tau, "ramp duration")->required();
    ev->add_option("--kind", ev_kind, "full or nojump")->check(CLI::IsMember({"full", "nojump"}))->capture_default_str();
    ev->add_option("--samples", ev_samples, "output intervals")->capture_default_str();
    ev->add_option("--out", ev_out, "output CSV ('-' for stdout)")->capture_default_str();
    ev_num.add(ev);

    // defect-profile
    auto* dp = app.add_subcommand("defect-profile", "end-of-ramp defect against momentum");
    Physical dp_phys;
    dp_phys.add(dp);
    Numerics dp_num;
    dp_num.add(dp);
    std::vector<double> dp_taus;
    double dp_pmax = 5.0, dp_exponent = 1.0 / 3.0;
    std::size_t dp_points = 101;
    bool dp_collapse = false, dp_dephase = false;
    std::string dp_out = "-";
    auto* dp_tau = dp->add_option("--tau", dp_taus, "ramp duration")->expected(1);
    dp->add_option("--tau-list", dp_taus, "ramp durations")->delimiter(',')->excludes(dp_tau);
    dp->add_option("--p-max", dp_pmax, "largest momentum in units of the scale (z range with --collapse)")
        ->capture_default_str();
    dp->add_option("--points", dp_points, "grid points")->capture_default_str();
    dp->add_flag("--collapse", dp_collapse, "rescale no-jump profiles by (Δτ)^a");
    dp->add_option("--exponent", dp_exponent, "collapse exponent a")->capture_default_str();
    dp->add_flag("--dephase", dp_dephase, "average no-jump modes over their end-of-ramp oscillation");
    dp->add_option("--out", dp_out, "output CSV")->capture_default_str();

    // density-sweep
    auto* ds = app.add_subcommand("density-sweep", "momentum-integrated defect density against τ");
    Physical ds_phys;
    ds_phys.add(ds);
    Numerics ds_num;
    ds_num.add(ds);
    std::vector<double> ds_taus;
    std::size_t ds_nodes = 64, ds_max_nodes = 1024;
    double ds_qtol = 1e-6;
    bool ds_no_dephase = false;
    std::string ds_out = "-", ds_fit_out, ds_format = "csv";
    ds->add_option("--tau-list", ds_taus, "ramp durations, increasing")->delimiter(',')->required();
    ds->add_option("--nodes", ds_nodes, "initial quadrature nodes on p >= 0")->capture_default_str();
    ds->add_option("--max-nodes", ds_max_nodes, "quadrature node budget")->capture_default_str();
    ds->add_option("--quad-tol", ds_qtol, "relative quadrature tolerance")->capture_default_str();
    ds->add_flag("--no-dephase", ds_no_dephase, "use raw end values for no-jump modes");
    ds->add_option("--out", ds_out, "output file")->capture_default_str();
    ds->add_option("--fit-out", ds_fit_out, "exponent fit JSON (csv format)");
    ds->add_option("--format", ds_format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    // series
    auto* se = app.add_subcommand("series", "exact adiabatic series coefficients and their growth");
    std::string se_case = "gapped", se_eps = "1", se_out = "-", se_format = "csv";
    int se_orders = 0;
    std::vector<double> se_ys{0.0, 1.0, 2.0};
    std::size_t se_bits = SeriesOptions{}.bit_budget;
    se->add_option("--case", se_case, "gapped or gapless")->check(CLI::IsMember({"gapped", "gapless"}))->capture_default_str();
    se->add_option("--epsilon", se_eps, "γ0/Δ as an exact rational, e.g. 2 or 3/2")->capture_default_str();
    se->add_option("--orders", se_orders, "highest order K")->required()->check(CLI::PositiveNumber);
    se->add_option("--y-list", se_ys, "scaled momenta for the growth report")->delimiter(',')->capture_default_str();
    se->add_option("--bit-budget", se_bits, "largest coefficient bit length")->capture_default_str();
    se->add_option("--format", se_format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    se->add_option("--out", se_out, "output file")->capture_default_str();

    // collapse
    auto* co = app.add_subcommand("collapse", "no-jump Kibble-Zurek collapse at the end of the PT ramp");
    double co_delta = 1.0, co_zmax = 6.0, co_exponent = 1.0 / 3.0;
    std::vector<double> co_taus;
    std::size_t co_points = 61;
    std::string co_out = "-";
    Numerics co_num;
    co->add_option("--delta", co_delta, "gap Δ")->capture_default_str();
    co->add_option("--tau-list", co_taus, "ramp durations")->delimiter(',')->required();
    co->add_option("--z-max", co_zmax, "largest scaled momentum")->capture_default_str();
    co->add_option("--points", co_points, "grid points")->capture_default_str();
    co->add_option("--exponent", co_exponent, "collapse exponent")->capture_default_str();
    co->add_option("--out", co_out, "output CSV")->capture_default_str();
    co_num.add(co);

    // fit
    auto* fi = app.add_subcommand("fit", "power-law fit of a density CSV");
    std::string fi_in, fi_out = "-";
    fi->add_option("--in", fi_in, "density CSV with tau and n_z columns")->required();
    fi->add_option("--out", fi_out, "output JSON")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "UsageError"}, {"message", e.what()}, {"exit", exit_usage}}.dump() << '\n';
        return exit_usage;
    }

    // parameter validation happens up front and maps to the usage exit code
    auto usage_error = [](const std::string& msg) {
        std::cerr << json{{"error", "InvalidArgument"}, {"message", msg}, {"exit", exit_usage}}.dump() << '\n';
        return exit_usage;
    };

    try {
        try {
            if (ev->parsed()) {
                (void)ModeParams::make(ev_p, ev_delta, ev_gamma0, ev_tau);
                (void)ev_num.controls();
            } else if (dp->parsed()) {
                require(!dp_taus.empty(), "give --tau or --tau-list");
                require_increasing(dp_taus, "tau list");
                (void)dp_phys.mode(0.0, dp_taus.front());
                (void)dp_num.controls();
                require(dp_points >= 2 && dp_pmax > 0.0, "need --points >= 2 and --p-max > 0");
                if (dp_collapse)
                    require(dp_phys.gapped() && dp_phys.mode_kind() == Kind::no_jump,
                            "--collapse needs --kind nojump and the gapped case");
            } else if (ds->parsed()) {
                require_increasing(ds_taus, "tau list");
                (void)ds_phys.mode(0.0, ds_taus.front());
                (void)ds_num.controls();
            } else if (se->parsed()) {
                require(se_orders >= 1, "--orders must be at least 1");
                require(parse_rational(se_eps) > 0, "--epsilon must be positive");
            } else if (co->parsed()) {
                require(co_delta > 0.0 && co_zmax > 0.0 && co_points >= 2, "collapse needs delta, z-max > 0");
                require_increasing(co_taus, "tau list");
                (void)co_num.controls();
            }
        } catch (const Error& e) {
            return usage_error(e.what());
        }

        if (ev->parsed()) {
            const auto m = ModeParams::make(ev_p, ev_delta, ev_gamma0, ev_tau);
            StepControls c = ev_num.controls();
            c.samples = ev_samples;
            const Kind kind = ev_kind == "full" ? Kind::full_lindblad : Kind::no_jump;
            const auto tr = evolve(m, RampProtocol::of(m), kind, initial_ground_state(m), c);
            Output out(ev_out);
            write_trajectory_csv(out.stream(), tr, provenance(ev));
        } else if (dp->parsed()) {
            const StepControls c = dp_num.controls();
            Output out(dp_out);
            if (dp_collapse) {
                const auto sc = scaling_collapse(dp_phys.delta, dp_taus, linspace(0.0, dp_pmax, dp_points), c,
                                                 dp_exponent, threads);
                write_collapse_csv(out.stream(), sc, provenance(dp));
            } else {
                const Kind kind = dp_phys.mode_kind();
                const double sc = dp_phys.scale();
                // the gapless p = 0 mode has no dynamics, so its grid starts one step in
                auto ps = linspace(0.0, dp_pmax * sc, dp_points);
                if (!dp_phys.gapped()) ps = linspace(ps[1], dp_pmax * sc, dp_points);
                std::unique_ptr<CoefficientTable> table;
                if (kind == Kind::full_lindblad)
                    table = std::make_unique<CoefficientTable>(
                        dp_phys.gapped() ? coefficients_gapped(1, Rational(parse_rational(std::to_string(dp_phys.epsilon))))
                                         : coefficients_gapless(1));
                std::vector<std::vector<DefectRecord>> all;
                for (double tau : dp_taus)
                    all.push_back(parallel_map<DefectRecord>(
                        ps.size(),
                        [&](std::size_t i) {
                            const auto m = dp_phys.mode(ps[i], tau);
                            if (kind == Kind::no_jump && dp_dephase) return nojump_dephased_defect(m, c);
                            return defect_at_end(m, RampProtocol::of(m), kind, c);
                        },
                        threads));
                std::ostream& os = out.stream();
                write_header(os, provenance(dp));
                os << "p,tau,n_x,n_y,n_z,tau_n_z,leading\n";
                os.precision(17);
                for (std::size_t t = 0; t < dp_taus.size(); ++t) {
                    const double tau = dp_taus[t];
                    for (std::size_t i = 0; i < ps.size(); ++i) {
                        const double y = ps[i] / sc;
                        double lead = std::numeric_limits<double>::quiet_NaN();
                        if (table) {
                            lead = tau * series_defect(*table, y, sc * tau, 1);
                        } else {
                            const auto m = dp_phys.mode(ps[i], tau);
                            const double s2 = (m.energy2() - m.gamma0 * m.gamma0) / (sc * sc);
                            if (s2 > 0.0) lead = -1.0 / (2.0 * s2 * sc);
                        }
                        const auto& r = all[t][i];
                        os << r.p << ',' << tau << ',' << r.n_x << ',' << r.n_y << ',' << r.n_z << ','
                           << tau * r.n_z << ',' << lead << '\n';
                    }
                }
            }
        } else if (ds->parsed()) {
            SweepPlan plan;
            plan.kind = ds_phys.mode_kind();
            plan.gapped = ds_phys.gapped();
            plan.epsilon = ds_phys.epsilon;
            plan.energy = ds_phys.scale();
            plan.tau_list = ds_taus;
            plan.quad.nodes = ds_nodes;
            plan.quad.max_nodes = ds_max_nodes;
            plan.quad.tolerance = ds_qtol;
            plan.controls = ds_num.controls();
            plan.threads = threads;
            plan.dephase = !ds_no_dephase;
            try {
                plan.validate();
            } catch (const Error& e) {
                return usage_error(e.what());
            }
            const auto recs = tau_sweep(plan);
            json fit = nullptr;
            if (recs.size() >= 3 && recs.back().tau >= 10.0 * recs.front().tau) fit = to_json(fit_exponent(recs));
            Output out(ds_out);
            if (ds_format == "json") {
                json j{{"config", config_json(ds)}, {"records", json::array()}, {"fit", fit}};
                for (const auto& r : recs) j["records"].push_back(to_json(r));
                out.stream() << j.dump(2) << '\n';
            } else {
                write_density_csv(out.stream(), recs, provenance(ds));
                if (!ds_fit_out.empty()) {
                    Output f(ds_fit_out);
                    f.stream() << json{{"config", config_json(ds)}, {"fit", fit}}.dump(2) << '\n';
                }
            }
        } else if (se->parsed()) {
            SeriesOptions opt;
            opt.bit_budget = se_bits;
            const Rational eps = parse_rational(se_eps);
            const auto table = se_case == "gapped" ? coefficients_gapped(se_orders, eps, opt)
                                                   : coefficients_gapless(se_orders, opt);
            std::vector<ConvergenceReport> reps;
            if (se_orders >= 6) reps = convergence_report(table, se_ys, se_orders);
            Output out(se_out);
            if (se_format == "json") {
                json j{{"config", config_json(se)}, {"table", to_json(table)}, {"reports", json::array()}};
                for (const auto& r : reps) j["reports"].push_back(to_json(r));
                out.stream() << j.dump(2) << '\n';
            } else {
                auto header = provenance(se);
                for (const auto& r : reps) {
                    std::ostringstream line;
                    line << "y=" << r.y << " growth_rate=" << r.growth_rate << " radius_estimate=" << r.radius_estimate;
                    header.push_back(line.str());
                }
                if (reps.empty()) {
                    // too few orders for a growth fit: list c_k(1, y) directly
                    write_header(out.stream(), header);
                    out.stream() << "k";
                    for (double y : se_ys) out.stream() << ",c_k(y=" << y << ')';
                    out.stream() << '\n';
                    out.stream().precision(17);
                    for (int k = 1; k <= se_orders; ++k) {
                        out.stream() << k;
                        for (double y : se_ys) out.stream() << ',' << table.c_value(k, 1.0, y);
                        out.stream() << '\n';
                    }
                } else {
                    write_growth_csv(out.stream(), reps, header);
                }
            }
        } else if (co->parsed()) {
            const auto sc = scaling_collapse(co_delta, co_taus, linspace(0.0, co_zmax, co_points), co_num.controls(),
                                             co_exponent, threads);
            Output out(co_out);
            auto header = provenance(co);
            std::ostringstream line;
            line << "peak=" << sc.peak;
            header.push_back(line.str());
            write_collapse_csv(out.stream(), sc, header);
        } else if (fi->parsed()) {
            std::ifstream in(fi_in);
            if (!in) return usage_error("cannot open " + fi_in);
            std::string line;
            std::vector<std::string> cols;
            std::vector<DensityRecord> recs;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') continue;
                std::vector<std::string> fields;
                std::stringstream ss(line);
                for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
                if (cols.empty()) {
                    cols = fields;
                    continue;
                }
                DensityRecord r;
                for (std::size_t i = 0; i < fields.size() && i < cols.size(); ++i) {
                    if (cols[i] == "tau") r.tau = std::stod(fields[i]);
                    else if (cols[i] == "n_z") r.n_z_integrated = std::stod(fields[i]);
                    else if (cols[i] == "err") r.quadrature_error_estimate = std::stod(fields[i]);
                }
                recs.push_back(r);
            }
            if (std::find(cols.begin(), cols.end(), "tau") == cols.end() ||
                std::find(cols.begin(), cols.end(), "n_z") == cols.end())
                return usage_error("input needs tau and n_z columns");
            ExponentFit f;
            try {
                f = fit_exponent(recs);
            } catch (const Error& e) {
                if (e.code() == Errc::invalid_argument) return usage_error(e.what());
                throw;
            }
            Output out(fi_out);
            out.stream() << json{{"config", config_json(fi)}, {"fit", to_json(f)}}.dump(2) << '\n';
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", to_string(e.code())}, {"message", e.what()}, {"exit", exit_numeric}}.dump() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Failure"}, {"message", e.what()}, {"exit", exit_numeric}}.dump() << '\n';
        return exit_numeric;
    }
    return exit_ok;
}
