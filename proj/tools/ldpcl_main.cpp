// ldpcl: design and analysis of layered LDPC ensembles on the BEC.
//
// Subcommands: rate, threshold, design, schedule, sweep, validate.
// Exit codes: 0 ok, 2 input/schema error, 3 numeric non-convergence,
// 4 verification failure.

#include "ldpcl/construct.hpp"
#include "ldpcl/de_engine.hpp"
#include "ldpcl/degree_dist.hpp"
#include "ldpcl/json_io.hpp"
#include "ldpcl/schedule.hpp"
#include "ldpcl/threshold.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace ldpcl;

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kNumericError = 3;
constexpr int kVerifyError = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Ensemble load_ensemble(const std::string& path) {
    return parse_ensemble(read_file(path));
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ParseError(out_path, "cannot open output file");
    out << text;
}

// commas and newlines inside error messages would corrupt the CSV
std::string csv_sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> toks;
    if (s.empty()) return toks;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) toks.push_back(tok);
    return toks;
}

std::vector<int> parse_int_list(const std::string& s, const char* opt) {
    std::vector<int> v;
    for (const std::string& tok : split_list(s)) {
        try {
            std::size_t pos = 0;
            v.push_back(std::stoi(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError(opt, "expected a comma-separated integer list, got \"" +
                                      s + "\"");
        }
    }
    return v;
}

std::vector<double> parse_double_list(const std::string& s, const char* opt) {
    std::vector<double> v;
    for (const std::string& tok : split_list(s)) {
        try {
            std::size_t pos = 0;
            v.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError(opt, "expected a comma-separated number list, got \"" +
                                      s + "\"");
        }
    }
    return v;
}

// Runs row tasks with at most `jobs` in flight, collecting results in input
// order so the emitted CSV is deterministic regardless of the job count.
template <typename Task>
std::vector<std::string> run_ordered(const std::vector<Task>& tasks, int jobs) {
    std::vector<std::string> rows(tasks.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) rows[i] = tasks[i]();
        return rows;
    }
    std::size_t next = 0;
    std::vector<std::pair<std::size_t, std::future<std::string>>> inflight;
    while (next < tasks.size() || !inflight.empty()) {
        while (next < tasks.size() &&
               inflight.size() < static_cast<std::size_t>(jobs)) {
            inflight.emplace_back(next, std::async(std::launch::async,
                                                   tasks[next]));
            ++next;
        }
        auto& [idx, fut] = inflight.front();
        rows[idx] = fut.get();
        inflight.erase(inflight.begin());
    }
    return rows;
}

// ---------------------------------------------------------------------------

struct RunConfig {
    // shared
    std::string input;
    std::string output;
    double tol = DEOptions::env_tol();
    // threshold
    std::size_t layers = 0; // 0 = all
    std::string method = "auto";
    // design
    std::vector<double> thresholds;
    std::string family = "tornado";
    std::vector<int> depths;
    std::string layer2_target = "exact_as";
    double tail_tol = 1e-12;
    bool verify = false;
    double verify_tol = 5e-3;
    // schedule
    double eps = 0.0;
    std::string mode = "analytic";
    double eta = 1e-4;
    int force_every = 0;
    // sweep
    std::string figure = "ca";
    std::string d1_spec = "1,2,5";
    std::string d2_spec = "1,2,3,5,10,20,35,50,100,200,400,800";
    std::string delta1_spec = "auto"; // auto = gaps of the default depth grid
    std::string delta2_spec = "auto";
    double eps1 = 0.05;
    double eps2 = 0.2;
    double eps_fraction = 0.999;
    int jobs = 1;
};

int cmd_rate(const RunConfig& cfg) {
    Ensemble e = load_ensemble(cfg.input);
    write_output(cfg.output,
                 "{\n  \"rate\": " + jsonio::fmt(design_rate(e)) + "\n}\n");
    return kOk;
}

int cmd_validate(const RunConfig& cfg) {
    Ensemble e = load_ensemble(cfg.input);
    std::string out = "{\n  \"valid\": true,\n  \"layers\": " +
                      std::to_string(e.size()) +
                      ",\n  \"rate\": " + jsonio::fmt(design_rate(e)) + "\n}\n";
    write_output(cfg.output, out);
    return kOk;
}

int cmd_threshold(const RunConfig& cfg) {
    Ensemble e = load_ensemble(cfg.input);
    std::size_t k = cfg.layers == 0 ? e.size() : cfg.layers;
    if (k < 1 || k > e.size())
        throw ParseError("--layers", "must lie in 1.." + std::to_string(e.size()));

    auto prefix2 = [&]() {
        return Ensemble({e.layer(0), e.layer(1)});
    };
    ThresholdReport rep;
    if (cfg.method == "formula") {
        if (k != 1) throw ParseError("--method", "formula applies to --layers 1");
        rep = threshold_1d(e.layer(0));
    } else if (cfg.method == "theorem3") {
        if (k != 2) throw ParseError("--method", "theorem3 applies to --layers 2");
        rep = threshold_bilayer(prefix2());
    } else if (cfg.method == "bisection") {
        DEOptions opts;
        opts.tol = cfg.tol;
        rep = threshold_multilayer_bisection(e, k, opts);
    } else { // auto
        if (k == 1) {
            rep = threshold_1d(e.layer(0));
        } else if (k == 2) {
            rep = threshold_bilayer(prefix2());
        } else {
            DEOptions opts;
            opts.tol = cfg.tol;
            rep = threshold_multilayer_bisection(e, k, opts);
        }
    }
    write_output(cfg.output, threshold_report_to_json(rep));
    return kOk;
}

std::vector<ComponentFamily> make_families(const RunConfig& cfg, std::size_t L) {
    std::vector<ComponentFamily> fams;
    if (cfg.family == "tornado") {
        if (cfg.depths.size() != L)
            throw ParseError("--d", "need one depth per layer (" +
                                        std::to_string(L) + " layers)");
        for (int d : cfg.depths) fams.push_back(tornado_family(d, cfg.tail_tol));
    } else if (cfg.family == "checkreg") {
        for (std::size_t i = 0; i < L; ++i) fams.push_back(checkreg_family());
    } else {
        throw ParseError("--family", "unknown family " + cfg.family);
    }
    return fams;
}

int cmd_design(const RunConfig& cfg) {
    DesignTargets targets(cfg.thresholds);
    Layer2Target mode = cfg.layer2_target == "full_eps2" ? Layer2Target::full_eps2
                                                         : Layer2Target::exact_as;
    Construction c = construct_multilayer(
        targets, make_families(cfg, targets.size()), mode);

    bool verify_ok = true;
    DesignVerification ver;
    if (cfg.verify) {
        ver.measured_thresholds.push_back(
            threshold_1d(c.ensemble.layer(0)).epsilon_star);
        DEOptions opts;
        opts.tol = cfg.tol;
        for (std::size_t k = 2; k <= c.ensemble.size(); ++k)
            ver.measured_thresholds.push_back(
                threshold_multilayer_bisection(c.ensemble, k, opts)
                    .epsilon_star);
        ver.gap = gap_report(c);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            double miss =
                std::abs(ver.measured_thresholds[i] - targets.thresholds[i]);
            if (miss > cfg.verify_tol) verify_ok = false;
        }
    }
    write_output(cfg.output, design_to_json(c, cfg.verify ? &ver : nullptr));
    if (!verify_ok) {
        std::cerr << "error: verification missed a target threshold by more "
                     "than "
                  << cfg.verify_tol << "\n";
        return kVerifyError;
    }
    return kOk;
}

int cmd_schedule(const RunConfig& cfg) {
    Ensemble e = load_ensemble(cfg.input);
    ScheduleTrace tr;
    if (cfg.mode == "analytic") {
        tr = schedule_analytic(e, cfg.eps);
    } else {
        ScheduleOptions opts;
        opts.force_every = cfg.force_every;
        tr = schedule_simulate(e, cfg.eps, cfg.eta, opts);
    }
    write_output(cfg.output, schedule_trace_to_json(tr));
    return kOk;
}

int cmd_sweep(const RunConfig& cfg) {
    std::vector<std::function<std::string()>> tasks;
    std::string header;

    std::vector<int> d1s = parse_int_list(cfg.d1_spec, "--d1");
    std::vector<int> d2s = parse_int_list(cfg.d2_spec, "--d2");

    if (cfg.figure == "ca") {
        header = "d1,d2,rate,error\n";
        for (int d1 : d1s)
            for (int d2 : d2s)
                tasks.push_back([d1, d2, &cfg]() -> std::string {
                    std::string row = std::to_string(d1) + "," +
                                      std::to_string(d2) + ",";
                    try {
                        DesignTargets targets({cfg.eps1, cfg.eps2});
                        Construction c = construct_bilayer(
                            targets, tornado_family(d1, cfg.tail_tol),
                            tornado_family(d2, cfg.tail_tol),
                            Layer2Target::full_eps2);
                        row += jsonio::fmt(design_rate(c.ensemble)) + ",";
                    } catch (const std::exception& ex) {
                        row += ",error:" + csv_sanitize(ex.what());
                    }
                    return row + "\n";
                });
    } else { // n2
        std::vector<double> d1list, d2list;
        if (cfg.delta1_spec == "auto")
            for (int d : {1, 2, 5}) d1list.push_back(tornado_gap(d, cfg.eps1));
        else
            d1list = parse_double_list(cfg.delta1_spec, "--delta1");
        if (cfg.delta2_spec == "auto")
            for (int d : d2s) d2list.push_back(tornado_gap(d, cfg.eps2));
        else
            d2list = parse_double_list(cfg.delta2_spec, "--delta2");
        header = "delta1,delta2,rate,n2,eps,mode\n";
        N2SweepParams params;
        params.eps1 = cfg.eps1;
        params.eps2 = cfg.eps2;
        params.eps_fraction = cfg.eps_fraction;
        params.tail_tol = cfg.tail_tol;
        for (double g1 : d1list)
            for (double g2 : d2list)
                tasks.push_back([g1, g2, params]() -> std::string {
                    auto rows = n2_sweep(params, {{g1, g2}});
                    const N2SweepRow& r = rows.front();
                    std::string row =
                        jsonio::fmt(r.delta1) + "," + jsonio::fmt(r.delta2) + ",";
                    if (r.ok)
                        row += jsonio::fmt(r.rate) + "," +
                               std::to_string(r.n2) + ",";
                    else
                        row += ",,";
                    row += jsonio::fmt(r.eps) + "," + csv_sanitize(r.mode);
                    return row + "\n";
                });
    }

    std::vector<std::string> rows = run_ordered(tasks, cfg.jobs);
    std::string out = header;
    std::size_t failed = 0;
    for (const auto& r : rows) {
        out += r;
        if (r.find("error:") != std::string::npos) ++failed;
    }
    write_output(cfg.output, out);
    if (!rows.empty() && failed == rows.size()) {
        std::cerr << "error: every sweep row failed\n";
        return kNumericError;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "ldpcl: design and analysis of layered LDPC ensembles on the binary "
        "erasure channel"};
    app.require_subcommand(1);
    RunConfig cfg;

    app.add_option(
        "--tol", cfg.tol,
        "density-evolution zero level (default from LDPC_DE_TOL, else 1e-10)");

    auto add_input = [&](CLI::App* sub) {
        sub->add_option("ensemble", cfg.input, "ensemble JSON file")
            ->required();
    };
    auto add_output = [&](CLI::App* sub) {
        sub->add_option("-o,--output", cfg.output,
                        "output path (default: stdout)");
    };

    CLI::App* rate = app.add_subcommand("rate", "design rate of an ensemble");
    add_input(rate);
    add_output(rate);

    CLI::App* thr =
        app.add_subcommand("threshold", "decoding threshold of a layer prefix");
    add_input(thr);
    add_output(thr);
    thr->add_option("--layers", cfg.layers,
                    "prefix length (default: all layers)");
    thr->add_option("--method", cfg.method,
                    "auto | formula | theorem3 | bisection")
        ->check(CLI::IsMember({"auto", "formula", "theorem3", "bisection"}));

    CLI::App* design = app.add_subcommand(
        "design", "construct an ensemble hitting prescribed thresholds");
    add_output(design);
    design
        ->add_option("--thresholds", cfg.thresholds,
                     "strictly increasing per-prefix thresholds, e.g. 0.05,0.2")
        ->required()
        ->delimiter(',');
    design->add_option("--family", cfg.family, "tornado | checkreg")
        ->check(CLI::IsMember({"tornado", "checkreg"}));
    design->add_option("--d", cfg.depths, "tornado depth per layer, e.g. 1,100")
        ->delimiter(',');
    design
        ->add_option("--layer2-target", cfg.layer2_target,
                     "component target for layers >= 2: exact_as | full_eps2")
        ->check(CLI::IsMember({"exact_as", "full_eps2"}));
    design->add_option("--tail-tol", cfg.tail_tol,
                       "Poisson tail mass trimmed per side");
    design->add_flag("--verify", cfg.verify,
                     "measure prefix thresholds and attach a gap report");
    design->add_option("--verify-tol", cfg.verify_tol,
                       "allowed |measured - target| under --verify");

    CLI::App* sched = app.add_subcommand(
        "schedule", "layer-2 update schedule for a bilayer ensemble");
    add_input(sched);
    add_output(sched);
    sched->add_option("--eps", cfg.eps, "channel erasure probability")
        ->required();
    sched->add_option("--mode", cfg.mode, "analytic | simulate")
        ->check(CLI::IsMember({"analytic", "simulate"}));
    sched->add_option("--eta", cfg.eta,
                      "progress gate for --mode simulate (default 1e-4)");
    sched->add_option("--force-every", cfg.force_every,
                      "also update every k type-1 iterations (simulate)");

    CLI::App* sweep =
        app.add_subcommand("sweep", "tabulate rate or N2 over a design grid");
    add_output(sweep);
    sweep->add_option("--figure", cfg.figure, "ca (rates) | n2 (update counts)")
        ->check(CLI::IsMember({"ca", "n2"}));
    sweep->add_option("--d1", cfg.d1_spec,
                      "layer-1 tornado depths for --figure ca, e.g. 1,2,5 "
                      "(\"\" for an empty grid)");
    sweep->add_option("--d2", cfg.d2_spec,
                      "layer-2 tornado depths for --figure ca and the "
                      "default n2 gap grid");
    sweep->add_option("--delta1", cfg.delta1_spec,
                      "layer-1 gap targets for --figure n2");
    sweep->add_option("--delta2", cfg.delta2_spec,
                      "layer-2 gap targets for --figure n2");
    sweep->add_option("--eps1", cfg.eps1, "layer-1 threshold target");
    sweep->add_option("--eps2", cfg.eps2, "full-ensemble threshold target");
    sweep->add_option("--eps-fraction", cfg.eps_fraction,
                      "run schedules at eps_fraction * eps2 (n2)");
    sweep->add_option("--tail-tol", cfg.tail_tol,
                      "Poisson tail mass trimmed per side");
    sweep->add_option("--jobs", cfg.jobs, "max concurrent rows")
        ->check(CLI::PositiveNumber);

    CLI::App* validate =
        app.add_subcommand("validate", "parse and validate an ensemble file");
    add_input(validate);
    add_output(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (app.got_subcommand(rate)) return cmd_rate(cfg);
        if (app.got_subcommand(thr)) return cmd_threshold(cfg);
        if (app.got_subcommand(design)) return cmd_design(cfg);
        if (app.got_subcommand(sched)) return cmd_schedule(cfg);
        if (app.got_subcommand(sweep)) return cmd_sweep(cfg);
        if (app.got_subcommand(validate)) return cmd_validate(cfg);
    } catch (const ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kInputError;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kInputError;
    } catch (const std::domain_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kInputError;
    } catch (const schedule_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kNumericError;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kNumericError;
    }
    return kOk;
}
