// cvbell: command-line front end for the entropic Bell functional.
//
// Exit codes: 0 ok, 1 validation failure, 2 invalid arguments, 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvbell/cvbell.hpp"
#include "cvbell/io.hpp"
#include "cvbell/validation.hpp"

namespace {

using namespace cvbell;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Common {
    double tail_epsilon = kDefaultTailEpsilon;
    std::string format = "text";
    std::string output;
    std::string method = "panel";

    [[nodiscard]] JointOptions joint() const {
        JointOptions o;
        o.method = method == "cdf" ? RectangleMethod::RectangleCdf : RectangleMethod::PanelQuadrature;
        return o;
    }
    [[nodiscard]] BellOptions bell() const { return {tail_epsilon, joint()}; }
};

struct Angle {
    std::optional<double> radians;
    std::optional<double> over_pi;

    [[nodiscard]] double value(double fallback = 0.0) const {
        if (over_pi) return *over_pi * M_PI;
        return radians.value_or(fallback);
    }
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t steps = 1;

    [[nodiscard]] std::vector<double> values(const char* what) const {
        cvbell::detail::require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
                                std::string(what) + ": range needs lower <= upper");
        cvbell::detail::require(steps >= 1, std::string(what) + ": need at least one step");
        return linspace(lo, hi, steps);
    }
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format) {
    c.format = default_format;
    cmd->add_option("--tail-epsilon", c.tail_epsilon, "Uncaptured probability bound per marginal")
        ->capture_default_str();
    cmd->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"text", "json", "csv"}))
        ->capture_default_str();
    cmd->add_option("--output,-o", c.output, "Write output to this file instead of stdout");
    cmd->add_option("--method", c.method, "Rectangle probabilities: panel quadrature or bivariate CDF")
        ->check(CLI::IsMember({"panel", "cdf"}))
        ->capture_default_str();
}

void add_delta(CLI::App* cmd, Angle& a, bool required) {
    auto* rad = cmd->add_option("--delta", a.radians, "Angle delta in radians");
    auto* pi = cmd->add_option("--delta-pi", a.over_pi, "Angle delta as a multiple of pi");
    rad->excludes(pi);
    if (required) {
        auto* group = cmd->add_option_group("angle");
        group->add_option(rad);
        group->add_option(pi);
        group->require_option(1);
    }
}

/// Writes to --output or stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw std::invalid_argument("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

/// Expands a JSON config object into command-line tokens. Keys are flag
/// names without dashes; "command" selects the subcommand when none is given.
std::vector<std::string> config_tokens(const std::string& path, std::string& command) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw CLI::ValidationError("--config", "top level must be an object");
    std::vector<std::string> out;
    auto scalar = [](const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
        if (v.is_number()) return io::num(v.get<double>());
        throw CLI::ValidationError("--config", "unsupported value " + v.dump());
    };
    for (const auto& [key, value] : cfg.items()) {
        if (key == "command") {
            if (command.empty()) command = value.get<std::string>();
            continue;
        }
        if (key == "name") {
            out.push_back(scalar(value));
            continue;
        }
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back(flag);
        } else if (value.is_array()) {
            for (const auto& v : value) {
                out.push_back(flag);
                out.push_back(scalar(v));
            }
        } else {
            out.push_back(flag);
            out.push_back(scalar(value));
        }
    }
    return out;
}

const std::vector<std::string> kCommands{"eval", "scan", "minimize", "validate", "sample", "figure"};

/// Pulls --config out of argv and splices the file's flags in right after
/// the subcommand, so flags given on the command line come later and win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::size_t pos = args.size();
    std::string command;
    for (std::size_t i = 0; i < args.size(); ++i)
        if (std::find(kCommands.begin(), kCommands.end(), args[i]) != kCommands.end()) {
            pos = i;
            command = args[i];
            break;
        }
    const bool had_command = pos < args.size();
    auto tokens = config_tokens(path, command);
    if (command.empty()) throw CLI::ValidationError("--config", "no subcommand given");
    if (!had_command) {
        args.insert(args.begin(), command);
        pos = 0;
    }
    args.insert(args.begin() + static_cast<long>(pos) + 1, tokens.begin(), tokens.end());
    return args;
}

void print_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropic Bell inequality for two-mode squeezed vacuum under coarse-grained homodyne detection"};
    app.name("cvbell");
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--config", "JSON file of flag values (keys are flag names without dashes)");

    // eval
    Common eval_c;
    double eval_r = 0.0, eval_bin = 0.0, eval_theta = 0.0;
    Angle eval_delta;
    bool eval_mi = false;
    std::string eval_dump;
    auto* eval = app.add_subcommand("eval", "Evaluate D_QM and its four conditional entropies");
    eval->add_option("--r", eval_r, "Squeezing parameter")->required();
    add_delta(eval, eval_delta, true);
    eval->add_option("--Delta", eval_bin, "Bin width")->required();
    eval->add_option("--theta", eval_theta, "Base angle theta (radians)")->capture_default_str();
    eval->add_flag("--mutual-info", eval_mi, "Also report the mutual-information form LHS - RHS");
    eval->add_option("--dump-dist", eval_dump, "Write the (A, B) binned joint as l,m,p CSV");
    add_common(eval, eval_c, "text");

    // scan
    Common scan_c;
    Range scan_r{0.0, 2.0, 41}, scan_d{0.0, M_PI, 65};
    std::optional<double> scan_d_max_pi;
    double scan_bin = 0.0;
    auto* scan_cmd = app.add_subcommand("scan", "Dense D_QM(r, delta) grid at fixed bin width");
    scan_cmd->add_option("--Delta", scan_bin, "Bin width")->required();
    scan_cmd->add_option("--r-min", scan_r.lo)->capture_default_str();
    scan_cmd->add_option("--r-max", scan_r.hi)->capture_default_str();
    scan_cmd->add_option("--r-steps", scan_r.steps)->capture_default_str();
    scan_cmd->add_option("--delta-min", scan_d.lo)->capture_default_str();
    scan_cmd->add_option("--delta-max", scan_d.hi)->capture_default_str();
    scan_cmd->add_option("--delta-max-pi", scan_d_max_pi, "Upper delta as a multiple of pi");
    scan_cmd->add_option("--delta-steps", scan_d.steps)->capture_default_str();
    add_common(scan_cmd, scan_c, "csv");

    // minimize
    Common min_c;
    Bounds min_r{0.0, 2.0}, min_d{0.0, M_PI};
    double min_bin = 0.0;
    MinimizeOptions min_opts;
    auto* min_cmd = app.add_subcommand("minimize", "Global minimum of D_QM over (r, delta) at fixed bin width");
    min_cmd->add_option("--Delta", min_bin, "Bin width")->required();
    min_cmd->add_option("--r-min", min_r.lo)->capture_default_str();
    min_cmd->add_option("--r-max", min_r.hi)->capture_default_str();
    min_cmd->add_option("--delta-min", min_d.lo)->capture_default_str();
    min_cmd->add_option("--delta-max", min_d.hi)->capture_default_str();
    min_cmd->add_option("--grid-r", min_opts.grid_r, "Start-grid points in r")->capture_default_str();
    min_cmd->add_option("--grid-delta", min_opts.grid_delta, "Start-grid points in delta")->capture_default_str();
    min_cmd->add_option("--top", min_opts.top_starts, "Simplex refinements from the best grid cells")
        ->capture_default_str();
    add_common(min_cmd, min_c, "text");

    // validate
    validation::Options val_opts;
    auto* val_cmd = app.add_subcommand("validate", "Run the invariant suite");
    val_cmd->add_flag("--quick", val_opts.quick, "Fast subset");
    val_cmd->add_option("--perturb-norm", val_opts.perturb_norm, "Test hook: offset added to captured masses");

    // sample
    Common sam_c;
    double sam_r = 0.0, sam_bin = 0.0, sam_theta = 0.0;
    Angle sam_delta;
    std::size_t sam_n = 1'000'000;
    std::uint64_t sam_seed = 1;
    EmpiricalOptions sam_opts;
    bool sam_no_mm = false;
    std::string sam_shots;
    auto* sam_cmd = app.add_subcommand("sample", "Finite-shot estimate of D_QM with bootstrap error");
    sam_cmd->add_option("--r", sam_r, "Squeezing parameter")->required();
    add_delta(sam_cmd, sam_delta, true);
    sam_cmd->add_option("--Delta", sam_bin, "Bin width")->required();
    sam_cmd->add_option("--theta", sam_theta, "Base angle theta (radians)")->capture_default_str();
    sam_cmd->add_option("--n", sam_n, "Shots per setting")->capture_default_str();
    sam_cmd->add_option("--seed", sam_seed)->capture_default_str();
    sam_cmd->add_option("--bootstrap", sam_opts.bootstrap_resamples, "Bootstrap resamples")->capture_default_str();
    sam_cmd->add_flag("--no-miller-madow", sam_no_mm, "Plain plug-in entropies");
    sam_cmd->add_option("--shots-csv", sam_shots, "Write the (A, B) setting's shots as a,b CSV");
    add_common(sam_cmd, sam_c, "text");

    // figure
    Common fig_c;
    std::string fig_name;
    std::vector<double> fig_bins;
    Range fig_r{0.0, 2.0, 41}, fig_d{0.0, M_PI, 65}, fig_bin_range{0.5, 10.0, 39};
    auto* fig_cmd = app.add_subcommand("figure", "Figure datasets: fig1 (delta x r per Delta), fig2 (r x Delta at delta=0)");
    fig_cmd->add_option("name", fig_name, "fig1 or fig2")->required()->check(CLI::IsMember({"fig1", "fig2"}));
    fig_cmd->add_option("--Delta", fig_bins, "fig1 bin widths (default 1.5 3.5 6)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    fig_cmd->add_option("--r-min", fig_r.lo)->capture_default_str();
    fig_cmd->add_option("--r-max", fig_r.hi)->capture_default_str();
    fig_cmd->add_option("--r-steps", fig_r.steps)->capture_default_str();
    fig_cmd->add_option("--delta-steps", fig_d.steps, "fig1 delta points over [0, pi]")->capture_default_str();
    fig_cmd->add_option("--Delta-min", fig_bin_range.lo, "fig2 lower bin width")->capture_default_str();
    fig_cmd->add_option("--Delta-max", fig_bin_range.hi, "fig2 upper bin width")->capture_default_str();
    fig_cmd->add_option("--Delta-steps", fig_bin_range.steps, "fig2 bin-width points")->capture_default_str();
    add_common(fig_cmd, fig_c, "csv");

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (eval->parsed()) {
            const TmsvParams<double> state(eval_r);
            const AngleGeometry geometry{eval_theta, eval_delta.value()};
            const auto result = evaluate(state, geometry, eval_bin, eval_c.bell());
            std::optional<double> mi;
            if (eval_mi) mi = evaluate_mutual_info(state, geometry.angles(), eval_bin, eval_c.bell());
            if (!eval_dump.empty()) {
                std::ofstream dump(eval_dump);
                if (!dump) throw std::invalid_argument("cannot open " + eval_dump);
                io::write_dist_csv(dump, binned_joint(state, geometry.delta, eval_bin, eval_c.tail_epsilon,
                                                      eval_c.joint()));
            }
            Sink sink(eval_c.output);
            auto& os = sink.stream();
            if (eval_c.format == "json") {
                auto j = io::to_json(result);
                if (mi) j["mutual_info_lhs_minus_rhs"] = *mi;
                print_json(os, j);
            } else if (eval_c.format == "csv") {
                io::write_eval_csv(os, result);
            } else {
                io::write_eval_text(os, result);
                if (mi) os << "MI LHS-RHS " << io::num(*mi) << (*mi > 0 ? "  (violation)" : "") << '\n';
            }
        } else if (scan_cmd->parsed()) {
            if (scan_d_max_pi) scan_d.hi = *scan_d_max_pi * M_PI;
            const auto result = scan(scan_r.values("r"), scan_d.values("delta"), scan_bin, scan_c.bell());
            Sink sink(scan_c.output);
            auto& os = sink.stream();
            if (scan_c.format == "json") {
                print_json(os, io::to_json(result));
            } else if (scan_c.format == "csv") {
                io::write_scan_csv(os, result);
            } else {
                std::size_t best = 0;
                for (std::size_t k = 1; k < result.d_qm.size(); ++k)
                    if (result.d_qm[k] < result.d_qm[best]) best = k;
                const std::size_t nd = result.column_values.size();
                os << "cells    " << result.d_qm.size() << '\n'
                   << "min d_qm " << io::num(result.d_qm[best]) << " at r=" << io::num(result.r_values[best / nd])
                   << " delta=" << io::num(result.column_values[best % nd]) << '\n';
            }
        } else if (min_cmd->parsed()) {
            min_opts.bell = min_c.bell();
            const auto result = minimize(min_r, min_d, min_bin, min_opts);
            Sink sink(min_c.output);
            auto& os = sink.stream();
            if (min_c.format == "json")
                print_json(os, io::to_json(result, min_c.tail_epsilon, min_c.joint().method));
            else if (min_c.format == "csv")
                io::write_minimize_csv(os, result);
            else
                io::write_minimize_text(os, result);
        } else if (val_cmd->parsed()) {
            const auto report = validation::run(val_opts, [](const validation::CheckResult& c) {
                std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
            });
            if (!report.passed()) {
                std::cerr << "failed checks:";
                for (const auto& name : report.failed()) std::cerr << ' ' << name;
                std::cerr << '\n';
                return kExitValidation;
            }
        } else if (sam_cmd->parsed()) {
            const TmsvParams<double> state(sam_r);
            const AngleGeometry geometry{sam_theta, sam_delta.value()};
            sam_opts.miller_madow = !sam_no_mm;
            const auto est = empirical_d_qm(state, geometry, sam_bin, sam_n, sam_seed, sam_opts);
            if (!sam_shots.empty()) {
                std::ofstream shots(sam_shots);
                if (!shots) throw std::invalid_argument("cannot open " + sam_shots);
                // Stream 3 is the (A, B) setting inside empirical_d_qm.
                io::write_shots_csv(shots, sample_pairs(state, geometry.delta, sam_n, sam_seed, 3));
            }
            Sink sink(sam_c.output);
            auto& os = sink.stream();
            if (sam_c.format == "json") {
                print_json(os, io::to_json(est, sam_r, geometry.delta, sam_bin));
            } else if (sam_c.format == "csv") {
                os << "r,delta,Delta,n,seed,estimate,std_error\n"
                   << io::num(sam_r) << ',' << io::num(geometry.delta) << ',' << io::num(sam_bin) << ',' << sam_n
                   << ',' << sam_seed << ',' << io::num(est.estimate) << ',' << io::num(est.std_error) << '\n';
            } else {
                os << "estimate  " << io::num(est.estimate) << " +/- " << io::num(est.std_error) << '\n'
                   << "shots     " << sam_n << " per setting, seed " << sam_seed << '\n';
            }
        } else if (fig_cmd->parsed()) {
            Sink sink(fig_c.output);
            auto& os = sink.stream();
            const auto rs = fig_r.values("r");
            if (fig_name == "fig1") {
                if (fig_bins.empty()) fig_bins = {1.5, 3.5, 6.0};
                const auto deltas = fig_d.values("delta");
                json all = json::array();
                bool header = true;
                for (const double bin : fig_bins) {
                    const auto result = scan(rs, deltas, bin, fig_c.bell());
                    if (fig_c.format == "json") {
                        all.push_back(io::to_json(result));
                    } else if (fig_c.format == "csv") {
                        io::write_scan_csv(os, result, header);
                        header = false;
                    } else {
                        os << "Delta " << io::num(bin) << ": min d_qm " << io::num(result.min()) << '\n';
                    }
                }
                if (fig_c.format == "json") print_json(os, {{"figure", "fig1"}, {"panels", all}});
            } else {
                const auto result = scan_fig2(rs, fig_bin_range.values("Delta"), fig_c.bell());
                if (fig_c.format == "json")
                    print_json(os, {{"figure", "fig2"}, {"panels", json::array({io::to_json(result)})}});
                else if (fig_c.format == "csv")
                    io::write_scan_csv(os, result);
                else
                    os << "min d_qm at delta=0: " << io::num(result.min()) << '\n';
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}
