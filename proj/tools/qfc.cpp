// Command-line driver: sweep, g2, tomo and offline analyze.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.

#include "qfc/qfc.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace qfc;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out_dir = ".";
    bool subtract_bg = false;
    bool write_events = false;
    std::string events_path;
    std::string counts_path;
};

ExperimentConfig load_config(const Options& o) {
    ExperimentConfig c;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        require(static_cast<bool>(in), "cannot open config file " + o.config_path);
        c = read_config(in);
    }
    if (o.seed) c.seed = o.seed;
    if (o.threads) c.threads = *o.threads;
    c.validate();
    return c;
}

std::ofstream open_output(const Options& o, const std::string& name) {
    fs::create_directories(o.out_dir);
    const auto path = fs::path(o.out_dir) / name;
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    return out;
}

int cmd_sweep(const Options& o) {
    const auto c = load_config(o);
    const auto r = run_efficiency_sweep(c, sweep_powers(c));
    auto table = open_output(o, "sweep.csv");
    write_sweep_csv(table, r);
    auto fit = open_output(o, "fit.txt");
    write_fit_summary(fit, r);
    write_fit_summary(std::cout, r);
    if (!r.fit) {
        std::cerr << "error: efficiency fit failed: " << r.fit_error << '\n';
        return 3;
    }
    return 0;
}

void write_g2_outputs(const Options& o, const G2Result& r) {
    auto report = open_output(o, "g2_report.txt");
    write_g2_report(report, r);
    auto hist = open_output(o, "histogram.csv");
    write_histogram_csv(hist, r.histogram);
    auto counts = open_output(o, "counts.txt");
    write_count_summary(counts, r.g2_zero.counts);
    write_g2_report(std::cout, r);
}

int cmd_g2(const Options& o) {
    const auto c = load_config(o);
    const auto r = run_g2_experiment(c);
    write_g2_outputs(o, r);
    if (o.write_events) {
        auto ev = open_output(o, "events.csv");
        write_event_stream(ev, r.stream);
    }
    return 0;
}

void write_tomo_outputs(const Options& o, const TomographyResult& r) {
    auto report = open_output(o, "tomo_report.json");
    write_tomography_report(report, r);
    write_tomography_report(std::cout, r);
}

int cmd_tomo(const Options& o) {
    const auto c = load_config(o);
    const auto r = run_tomography_experiment(c, o.subtract_bg);
    write_tomo_outputs(o, r);
    auto counts = open_output(o, "counts.csv");
    write_count_records(counts, r.records);

    const auto mzi = run_mzi_experiment(c);
    auto hist = open_output(o, "mzi_histogram.csv");
    write_histogram_csv(hist, mzi.histogram);
    auto sel = open_output(o, "mzi_selected_histogram.csv");
    write_histogram_csv(sel, mzi.selected);
    auto peaks = open_output(o, "mzi_peaks.txt");
    peaks << "early=" << mzi.early << "\ncentral=" << mzi.central << "\nlate=" << mzi.late
          << "\nselected=" << mzi.selected.total() << '\n';
    return 0;
}

int cmd_analyze(const Options& o) {
    require(o.events_path.empty() != o.counts_path.empty(), "analyze needs exactly one of --events or --counts");
    auto c = load_config(o);
    if (!o.events_path.empty()) {
        std::ifstream in(o.events_path);
        require(static_cast<bool>(in), "cannot open event file " + o.events_path);
        G2Result r;
        r.stream = read_event_stream(in);
        r.setup.n_pulses = r.stream.n_pulses;
        r.setup.seed = r.stream.seed;
        analyze_hbt_stream(r.stream, c, r);
        write_g2_outputs(o, r);
        return 0;
    }
    std::ifstream in(o.counts_path);
    require(static_cast<bool>(in), "cannot open count file " + o.counts_path);
    TomographyResult r;
    r.records = read_count_records(in);
    reconstruct_records(r.records, c, o.subtract_bg, c.seed.value_or(0), r);
    r.signal_state = r.mle.state;
    write_tomo_outputs(o, r);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum frequency conversion simulator"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, bool seeded) {
        sub->add_option("--config", o.config_path, "Configuration file (key=value)");
        sub->add_option("--out", o.out_dir, "Output directory");
        sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
        if (seeded) sub->add_option("--seed", o.seed, "Master seed");
    };
    auto* sweep = app.add_subcommand("sweep", "Efficiency versus pump power, with fit");
    common(sweep, false);
    auto* g2 = app.add_subcommand("g2", "Heralded HBT simulation and g2 analysis");
    common(g2, true);
    g2->add_flag("--write-events", o.write_events, "Also write the detection event stream");
    auto* tomo = app.add_subcommand("tomo", "Entangled-pair tomography through the interface");
    common(tomo, true);
    tomo->add_flag("--subtract-bg", o.subtract_bg, "Subtract background counts before reconstruction");
    auto* analyze = app.add_subcommand("analyze", "Offline analysis of stored events or counts");
    common(analyze, true);
    analyze->add_option("--events", o.events_path, "Event-stream file");
    analyze->add_option("--counts", o.counts_path, "Count-record file");
    analyze->add_flag("--subtract-bg", o.subtract_bg, "Subtract background counts before reconstruction");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        if (sweep->parsed()) return cmd_sweep(o);
        if (g2->parsed()) return cmd_g2(o);
        if (tomo->parsed()) return cmd_tomo(o);
        return cmd_analyze(o);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
