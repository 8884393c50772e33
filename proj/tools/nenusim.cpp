// Experiment driver: constellation design, BMI sweeps, (N, rho) optimization,
// PAPR CCDFs and BER campaigns, all with reproducible seeding and CSV output.
//
// Every run echoes its resolved configuration into the output header, so a
// result file is enough to reproduce the run. Validation failures print one
// machine-readable JSON line on stderr and exit nonzero.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "nenu/csv.hpp"
#include "nenu/experiments.hpp"
#include "nenu/metrics.hpp"
#include "nenu/shaping.hpp"

using nlohmann::json;
using namespace nenu;

namespace {

// --config file values fill in every option the user did not pass on the
// command line; explicit flags always win.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CLI::ValidationError("--config", "cannot open " + path);
    json j = json::parse(is);
    for (auto* opt : cmd->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames()[0];
        if (name == "config" || opt->count() > 0 || !j.contains(name)) continue;
        const json& v = j.at(name);
        opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
        opt->run_callback(); // convert into the bound variable
    }
}

std::vector<double> parse_snr_grid(const std::string& text) {
    std::vector<double> out;
    std::string token;
    std::istringstream ss(text);
    while (std::getline(ss, token, ',')) {
        const auto c1 = token.find(':');
        if (c1 == std::string::npos) {
            out.push_back(std::stod(token));
            continue;
        }
        const auto c2 = token.find(':', c1 + 1);
        const double lo = std::stod(token.substr(0, c1));
        if (c2 == std::string::npos) throw CLI::ValidationError("--snr", "range needs lo:hi:step");
        const double hi = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
        const double step = std::stod(token.substr(c2 + 1));
        if (!(step > 0.0) || hi < lo) throw CLI::ValidationError("--snr", "bad range " + token);
        for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError("--snr", "empty grid");
    std::sort(out.begin(), out.end());
    return out;
}

struct ConstellationArgs {
    int m = 32;
    int n = 0; // 0: use m
    double rho = 1.0;
    double es = 2.0;
    std::string file;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--m", m, "label count per dimension (power of two)");
        cmd->add_option("--n", n, "distinct signed points (default: M)");
        cmd->add_option("--rho", rho, "shaping parameter in [0,1]; 0 is uniform PAM");
        cmd->add_option("--es", es, "QAM symbol energy");
        cmd->add_option("--constellation", file, "load constellation from file instead of designing");
    }
    Constellation build() const {
        if (!file.empty()) return load_constellation(file);
        return design(m, n == 0 ? m : n, rho, es);
    }
    void echo(json& j) const {
        if (!file.empty()) {
            j["constellation"] = file;
        } else {
            j["m"] = m;
            j["n"] = n == 0 ? m : n;
            j["rho"] = rho;
            j["es"] = es;
        }
    }
};

void emit(const CsvWriter& w, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << w.str();
    } else {
        w.write(out);
    }
}

void stamp(CsvWriter& w, const std::string& experiment, const json& cfg, uint64_t seed) {
    w.meta("experiment", experiment);
    const std::string dump = cfg.dump();
    w.meta("config", dump);
    w.meta("seed", seed);
    w.meta("param_hash", hex64(fnv1a64(experiment + "|" + dump + "|" + std::to_string(seed))));
}

BmiVariant parse_variant(const std::string& s) {
    static const std::map<std::string, BmiVariant> m{{"A1", BmiVariant::A1},
                                                     {"A2", BmiVariant::A2},
                                                     {"A3", BmiVariant::A3},
                                                     {"F1", BmiVariant::F1},
                                                     {"F2", BmiVariant::F2}};
    const auto it = m.find(s);
    if (it == m.end()) throw CLI::ValidationError("--system", "expected A1|A2|A3|F1|F2");
    return it->second;
}

SystemKind parse_system(const std::string& s) {
    if (s == "S1") return SystemKind::S1;
    if (s == "S2") return SystemKind::S2;
    if (s == "S3") return SystemKind::S3;
    throw CLI::ValidationError("--system", "expected S1|S2|S3");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NENU PAM constellation shaping and BICM-OFDM simulation toolkit"};
    app.require_subcommand(1);
    unsigned threads = std::thread::hardware_concurrency();
    app.add_option("--threads", threads, "worker threads")->capture_default_str();

    std::map<CLI::App*, std::string> config_paths;
    auto add_common = [&](CLI::App* cmd) {
        cmd->fallthrough(); // lets --threads appear after the subcommand
        cmd->add_option("--config", config_paths[cmd], "JSON config file; flags override file values");
    };

    // ---- design ----
    auto* cmd_design = app.add_subcommand("design", "design an (M,N)-PAM constellation and write its table");
    ConstellationArgs dsg;
    std::string design_out = "-";
    dsg.add_to(cmd_design);
    cmd_design->add_option("--out", design_out, "output path ('-' for stdout)");
    add_common(cmd_design);

    // ---- bmi ----
    auto* cmd_bmi = app.add_subcommand("bmi", "BMI versus SNR for one constellation");
    ConstellationArgs bmi_c;
    std::string bmi_snr = "26", bmi_system = "A1", bmi_method = "auto", bmi_out = "-";
    int bmi_nodes = 64, bmi_kmax = 10, bmi_paths = 4, bmi_nc = 1024, bmi_j = 4;
    double bmi_gcr = 1.5;
    long bmi_symbols = 200000;
    uint64_t bmi_seed = 1;
    bmi_c.add_to(cmd_bmi);
    cmd_bmi->add_option("--snr", bmi_snr, "SNR grid in dB: list a,b,... and/or ranges lo:hi:step");
    cmd_bmi->add_option("--system", bmi_system, "A1|A2|A3 (AWGN) or F1|F2 (Rayleigh)");
    cmd_bmi->add_option("--method", bmi_method, "ghq|mc|auto (ghq only valid for A1)");
    cmd_bmi->add_option("--nodes", bmi_nodes, "Gauss-Hermite order");
    cmd_bmi->add_option("--symbols", bmi_symbols, "QAM symbols per MC point");
    cmd_bmi->add_option("--nc", bmi_nc, "subcarriers");
    cmd_bmi->add_option("--j", bmi_j, "oversampling factor");
    cmd_bmi->add_option("--gcr", bmi_gcr, "clipping ratio");
    cmd_bmi->add_option("--kmax", bmi_kmax, "CNC iterations");
    cmd_bmi->add_option("--paths", bmi_paths, "Rayleigh paths");
    cmd_bmi->add_option("--seed", bmi_seed, "master seed");
    cmd_bmi->add_option("--out", bmi_out, "output CSV path");
    add_common(cmd_bmi);

    // ---- optimize ----
    auto* cmd_opt = app.add_subcommand("optimize", "grid-search N and rho for maximum BMI");
    std::string opt_system = "A1", opt_out = "-";
    int opt_m = 32, opt_nodes = 64, opt_kmax = 10, opt_paths = 4, opt_nc = 1024, opt_j = 4;
    double opt_snr = 26.0, opt_gcr = 1.5, opt_es = 2.0;
    long opt_budget = 200000;
    uint64_t opt_seed = 1;
    cmd_opt->add_option("--m", opt_m, "label count per dimension");
    cmd_opt->add_option("--snr", opt_snr, "SNR in dB");
    cmd_opt->add_option("--system", opt_system, "A1 (GHQ) or A2|A3|F1|F2 (MC pipeline)");
    cmd_opt->add_option("--es", opt_es, "QAM symbol energy");
    cmd_opt->add_option("--nodes", opt_nodes, "Gauss-Hermite order for A1");
    cmd_opt->add_option("--budget", opt_budget, "QAM symbols per MC cell");
    cmd_opt->add_option("--nc", opt_nc, "subcarriers");
    cmd_opt->add_option("--j", opt_j, "oversampling factor");
    cmd_opt->add_option("--gcr", opt_gcr, "clipping ratio");
    cmd_opt->add_option("--kmax", opt_kmax, "CNC iterations");
    cmd_opt->add_option("--paths", opt_paths, "Rayleigh paths");
    cmd_opt->add_option("--seed", opt_seed, "master seed");
    cmd_opt->add_option("--out", opt_out, "output CSV path");
    add_common(cmd_opt);

    // ---- papr ----
    auto* cmd_papr = app.add_subcommand("papr", "PAPR CCDF of the oversampled transmit waveform");
    ConstellationArgs papr_c;
    std::string papr_system = "S1", papr_out = "-";
    int papr_nc = 1024, papr_j = 4;
    double papr_gcr = 1.5;
    long papr_symbols = 100000;
    uint64_t papr_seed = 1;
    papr_c.add_to(cmd_papr);
    cmd_papr->add_option("--system", papr_system, "S1 (plain) | S2 (CAF) | S3 (DFT precoding)");
    cmd_papr->add_option("--nc", papr_nc, "subcarriers");
    cmd_papr->add_option("--j", papr_j, "oversampling factor");
    cmd_papr->add_option("--gcr", papr_gcr, "clipping ratio (S2)");
    cmd_papr->add_option("--symbols", papr_symbols, "OFDM symbols");
    cmd_papr->add_option("--seed", papr_seed, "master seed");
    cmd_papr->add_option("--out", papr_out, "output CSV path");
    add_common(cmd_papr);

    // ---- ber ----
    auto* cmd_ber = app.add_subcommand("ber", "coded BER campaign");
    ConstellationArgs ber_c;
    std::string ber_system = "S1", ber_channel = "awgn", ber_snr = "30", ber_out = "-";
    int ber_nc = 1024, ber_j = 4, ber_kmax = 10, ber_paths = 4;
    double ber_gcr = 1.5;
    long ber_codeword = 30720, ber_frames = 2000, ber_errors = 100;
    uint64_t ber_seed = 1;
    ber_c.add_to(cmd_ber);
    cmd_ber->add_option("--system", ber_system, "S1|S2|S3");
    cmd_ber->add_option("--channel", ber_channel, "awgn|rayleigh");
    cmd_ber->add_option("--snr", ber_snr, "SNR grid in dB");
    cmd_ber->add_option("--codeword", ber_codeword, "codeword length in coded bits");
    cmd_ber->add_option("--frames", ber_frames, "frame cap per point");
    cmd_ber->add_option("--errors", ber_errors, "target bit errors per point");
    cmd_ber->add_option("--nc", ber_nc, "subcarriers");
    cmd_ber->add_option("--j", ber_j, "oversampling factor");
    cmd_ber->add_option("--gcr", ber_gcr, "clipping ratio (S2)");
    cmd_ber->add_option("--kmax", ber_kmax, "CNC iterations (S2)");
    cmd_ber->add_option("--paths", ber_paths, "Rayleigh paths");
    cmd_ber->add_option("--seed", ber_seed, "master seed");
    cmd_ber->add_option("--out", ber_out, "output CSV path");
    add_common(cmd_ber);

    try {
        app.parse(argc, argv);
        for (auto& [cmd, path] : config_paths)
            if (!path.empty() && cmd->parsed()) apply_config_file(cmd, path);

        const auto t0 = std::chrono::steady_clock::now();

        if (cmd_design->parsed()) {
            const Constellation c = dsg.build();
            if (design_out.empty() || design_out == "-") {
                save_constellation(c, std::cout);
            } else {
                save_constellation(c, design_out);
                std::cout << "wrote " << design_out << " (M=" << c.M << " N=" << c.N << ")\n";
            }
        } else if (cmd_bmi->parsed()) {
            const Constellation c = bmi_c.build();
            const BmiVariant v = parse_variant(bmi_system);
            std::string method = bmi_method;
            if (method == "auto") method = v == BmiVariant::A1 ? "ghq" : "mc";
            if (method == "ghq" && v != BmiVariant::A1)
                throw CLI::ValidationError("--method", "GHQ only models the plain AWGN channel (A1)");
            if (method != "ghq" && method != "mc") throw CLI::ValidationError("--method", "expected ghq|mc|auto");

            json cfg;
            bmi_c.echo(cfg);
            cfg["system"] = bmi_system;
            cfg["method"] = method;
            cfg["snr"] = bmi_snr;
            if (method == "mc") {
                cfg["symbols"] = bmi_symbols;
                cfg["nc"] = bmi_nc;
                cfg["j"] = bmi_j;
                if (variant_uses_caf(v)) cfg["gcr"] = bmi_gcr;
                if (variant_uses_cnc(v)) cfg["kmax"] = bmi_kmax;
                if (variant_fading(v)) cfg["paths"] = bmi_paths;
            } else {
                cfg["nodes"] = bmi_nodes;
            }
            CsvWriter w;
            stamp(w, "bmi", cfg, bmi_seed);
            w.header({"snr_db", "bmi", "stderr", "samples", "method"});
            for (double snr : parse_snr_grid(bmi_snr)) {
                BmiEstimate est;
                if (method == "ghq") {
                    est = bmi_awgn_ghq(c, snr, bmi_nodes);
                } else {
                    McBmiConfig mc;
                    mc.ofdm = {bmi_nc, bmi_j, bmi_gcr};
                    mc.kmax = bmi_kmax;
                    mc.paths = bmi_paths;
                    mc.qam_symbols = bmi_symbols;
                    mc.threads = threads;
                    est = mc_bmi(v, c, snr, mc, derive_seed(bmi_seed, {static_cast<uint64_t>(std::llround(snr * 100))})).bmi;
                }
                w.row({fmt_double(snr), fmt_double(est.value), fmt_double(est.std_error),
                       std::to_string(est.samples), method});
            }
            emit(w, bmi_out);
        } else if (cmd_opt->parsed()) {
            const BmiVariant v = parse_variant(opt_system);
            OptimizeOptions oo;
            oo.Es = opt_es;
            oo.seed = opt_seed;
            oo.threads = threads;
            CellEvaluator eval;
            if (v == BmiVariant::A1) {
                eval = ghq_evaluator(opt_nodes);
                oo.two_stage = false;
                oo.budget_per_cell = 0;
            } else {
                McBmiConfig mc;
                mc.ofdm = {opt_nc, opt_j, opt_gcr};
                mc.kmax = opt_kmax;
                mc.paths = opt_paths;
                mc.qam_symbols = opt_budget;
                mc.threads = 1; // cells already run in parallel
                eval = mc_evaluator(v, mc);
                oo.two_stage = true;
                oo.budget_per_cell = opt_budget;
            }
            const OptimizationResult res = optimize_params(opt_m, opt_snr, eval, oo);

            json cfg{{"m", opt_m},        {"snr", opt_snr},   {"system", opt_system}, {"es", opt_es},
                     {"budget", oo.budget_per_cell}, {"two_stage", res.two_stage}};
            if (v != BmiVariant::A1) {
                cfg["nc"] = opt_nc;
                cfg["j"] = opt_j;
                cfg["gcr"] = opt_gcr;
                cfg["kmax"] = opt_kmax;
                if (variant_fading(v)) cfg["paths"] = opt_paths;
            } else {
                cfg["nodes"] = opt_nodes;
            }
            CsvWriter w;
            stamp(w, "optimize", cfg, opt_seed);
            w.meta("best_N", res.best_N);
            w.meta("best_rho", res.best_rho);
            w.meta("best_bmi", res.best_bmi.value);
            w.header({"N", "rho", "bmi", "stderr", "samples"});
            for (const auto& cell : res.grid)
                w.row({std::to_string(cell.N), fmt_double(cell.rho), fmt_double(cell.bmi.value),
                       fmt_double(cell.bmi.std_error), std::to_string(cell.bmi.samples)});
            emit(w, opt_out);
            std::cout << "best: N=" << res.best_N << " rho=" << fmt_double(res.best_rho)
                      << " bmi=" << fmt_double(res.best_bmi.value) << "\n";
        } else if (cmd_papr->parsed()) {
            const Constellation c = papr_c.build();
            const SystemKind sys = parse_system(papr_system);
            PaprConfig pc;
            pc.ofdm = {papr_nc, papr_j, papr_gcr};
            pc.symbols = papr_symbols;
            pc.threads = threads;
            const dvec ens = papr_ensemble(sys, c, pc, papr_seed);

            json cfg;
            papr_c.echo(cfg);
            cfg["system"] = papr_system;
            cfg["nc"] = papr_nc;
            cfg["j"] = papr_j;
            if (sys == SystemKind::S2) cfg["gcr"] = papr_gcr;
            cfg["symbols"] = papr_symbols;
            CsvWriter w;
            stamp(w, "papr", cfg, papr_seed);
            w.meta("nc", papr_nc);
            w.meta("j", papr_j);
            w.meta("gamma_cr", papr_gcr);
            w.meta("symbols", papr_symbols);
            w.header({"papr_db", "ccdf"});
            for (const auto& p : ccdf_points(ens))
                w.row({fmt_double(p.papr_db), fmt_double(p.ccdf)});
            emit(w, papr_out);
        } else if (cmd_ber->parsed()) {
            const Constellation c = ber_c.build();
            const SystemKind sys = parse_system(ber_system);
            BerConfig bc;
            bc.ofdm = {ber_nc, ber_j, ber_gcr};
            bc.kmax = ber_kmax;
            if (ber_channel == "awgn") {
                bc.channel = ChannelKind::Awgn;
            } else if (ber_channel == "rayleigh") {
                bc.channel = ChannelKind::Rayleigh;
            } else {
                throw CLI::ValidationError("--channel", "expected awgn|rayleigh");
            }
            bc.paths = ber_paths;
            bc.codec.codeword_len = ber_codeword;
            bc.target_errors = ber_errors;
            bc.max_frames = ber_frames;
            bc.threads = threads;

            json cfg;
            ber_c.echo(cfg);
            cfg["system"] = ber_system;
            cfg["channel"] = ber_channel;
            cfg["snr"] = ber_snr;
            cfg["codeword"] = ber_codeword;
            cfg["frames"] = ber_frames;
            cfg["errors"] = ber_errors;
            cfg["nc"] = ber_nc;
            cfg["j"] = ber_j;
            if (sys == SystemKind::S2) {
                cfg["gcr"] = ber_gcr;
                cfg["kmax"] = ber_kmax;
            }
            if (bc.channel == ChannelKind::Rayleigh) cfg["paths"] = ber_paths;
            CsvWriter w;
            stamp(w, "ber", cfg, ber_seed);
            w.header({"snr_db", "ber", "errors", "bits", "frames"});
            for (double snr : parse_snr_grid(ber_snr)) {
                const BerPoint pt =
                    ber_point(sys, c, snr, bc, derive_seed(ber_seed, {static_cast<uint64_t>(std::llround(snr * 100))}));
                w.row({fmt_double(snr), fmt_double(pt.ber()), std::to_string(pt.bit_errors),
                       std::to_string(pt.bits), std::to_string(pt.frames)});
                std::cout << "snr=" << fmt_double(snr) << " ber=" << fmt_double(pt.ber()) << " errors="
                          << pt.bit_errors << " frames=" << pt.frames << "\n";
            }
            emit(w, ber_out);
        }

        const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << "elapsed " << fmt_double(dt) << " s\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
        return 2;
    }
}
