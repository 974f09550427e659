#pragma once

#include <tfpc/csv.hpp>
#include <tfpc/http_server.hpp>
#include <tfpc/pipeline.hpp>

#include <CLI11.hpp>

#include <fstream>

namespace tfpc {

namespace detail {

inline table read_table_file(const std::string& path, bool header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open '" + path + "'");
    csv_options opts;
    opts.header = header;
    return load_csv(in, opts);
}

/// Output files staged until the whole pipeline has succeeded.
struct staged_outputs {
    std::vector<std::pair<std::string, std::string>> files;

    void add(const std::string& path, std::string content) {
        if (!path.empty()) files.emplace_back(path, std::move(content));
    }

    void commit() const {
        for (const auto& [path, content] : files) {
            std::ofstream out(path, std::ios::binary);
            out << content;
            if (!out) throw error("cannot write '" + path + "'");
        }
    }
};

inline void parse_nlevels(const std::vector<std::string>& specs, std::optional<std::size_t>& nlevels,
                          std::map<std::string, std::size_t>& overrides) {
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        const auto value = eq == std::string::npos ? spec : spec.substr(eq + 1);
        auto k = parse_number(value);
        if (!k || *k < 2 || *k != std::floor(*k)) throw invalid_argument("--nlevels expects K or col=K with K >= 2");
        if (eq == std::string::npos) nlevels = static_cast<std::size_t>(*k);
        else overrides[spec.substr(0, eq)] = static_cast<std::size_t>(*k);
    }
}

inline void print_patterns(std::ostream& out, const frequency_table& ft, const std::vector<weighted_pattern>& top) {
    for (std::size_t c = 0; c < ft.arity(); ++c) out << ft.names()[c] << '\t';
    out << frequency_column_name << '\n';
    char buf[64];
    for (const auto& wp : top) {
        for (std::size_t c = 0; c < wp.levels.size(); ++c) out << ft.levels()[c][wp.levels[c]] << '\t';
        std::snprintf(buf, sizeof buf, "%.6f", wp.weight);
        out << buf << '\n';
    }
}

} // namespace detail

/// Runs the tfpc command line. Exit status: 0 success, 1 pipeline error,
/// 2 flag misuse.
inline int cli_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Top-frequency parallel coordinates"};
    app.require_subcommand(1);

    std::string file;
    bool no_header = false;
    long long lines = 50;
    std::string order, columns, group, svg_path, json_path, export_path;
    unsigned threads = 1;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("file", file, "CSV input")->required();
        sub->add_flag("--no-header", no_header, "first row is data");
        sub->add_option("--lines", lines, "lines to plot; negative plots the least frequent");
        sub->add_option("--order", order, "axis order, comma separated");
        sub->add_option("--columns", columns, "columns to use, comma separated");
        sub->add_option("--svg", svg_path, "write the plot as SVG");
        sub->add_option("--json", json_path, "write the plot model as JSON");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "random seed");
    };

    auto* count = app.add_subcommand("count", "tuple-frequency plot of discrete data");
    add_common(count);
    std::vector<std::string> nlevels;
    std::optional<double> naexp;
    std::string na_method_name;
    std::string accent;
    count->add_option("--nlevels", nlevels, "quantile bins for continuous columns: K or col=K")->allow_extra_args(false);
    count->add_option("--naexp", naexp, "partial credit exponent for rows with NA cells");
    count->add_option("--na-method", na_method_name, "drop, naexp, mom or mar")
        ->check(CLI::IsMember({"drop", "naexp", "mom", "mar"}));
    count->add_option("--accentuate", accent, "up-weight a level: col=level:mult");
    count->add_option("--group", group, "stack one plot per level of this column");
    count->add_option("--export-freq,--export", export_path, "write all pattern frequencies");

    auto* density = app.add_subcommand("density", "k-NN density plot of continuous data");
    add_common(density);
    std::size_t k = 0;
    bool locmax = false, labels = false;
    double jitter_amount = 0;
    density->add_option("--k", k, "neighbour count (default max(1, n/100) capped at 50)");
    density->add_flag("--locmax", locmax, "plot local density maxima instead of the global top");
    density->add_option("--group", group, "estimate within, and stack plots by, this column");
    density->add_flag("--labels", labels, "label lines with their row numbers");
    density->add_option("--jitter", jitter_amount, "jitter amount factor applied before estimation");

    auto* sample = app.add_subcommand("subsample", "ordinary plot of a random subsample");
    add_common(sample);
    std::size_t sample_size = 0;
    sample->add_option("--n", sample_size, "subsample size")->required();

    auto* diagnose = app.add_subcommand("diagnose", "missing-value summary and MCAR check");
    diagnose->add_option("file", file, "CSV input")->required();
    diagnose->add_flag("--no-header", no_header, "first row is data");

    auto* serve_cmd = app.add_subcommand("serve", "HTTP API for the explorer");
    std::string host = "127.0.0.1";
    int port = 8080;
    service_limits limits;
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);
    serve_cmd->add_option("--max-sessions", limits.max_sessions);
    serve_cmd->add_option("--max-bytes", limits.max_dataset_bytes);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (*serve_cmd) {
            service svc(limits);
            out << "listening on " << host << ':' << port << std::endl;
            return serve(svc, host, port) ? 0 : 1;
        }
        if (lines == 0) {
            err << "--lines must be nonzero\n";
            return 2;
        }
        const table data = detail::read_table_file(file, !no_header);
        detail::staged_outputs staged;
        std::optional<plot_model> model;

        if (*diagnose) {
            const auto r = mcar_diagnostic(data);
            char buf[160];
            std::snprintf(buf, sizeof buf, "rows\t%zu\ncolumns\t%zu\nq\t%.6f\npredicted_complete\t%.6f\nempirical_complete\t%.6f\n",
                          data.rows(), data.cols(), r.q, r.predicted_complete_rate, r.empirical_complete_rate);
            out << buf;
            return 0;
        }
        if (*count) {
            count_settings cs;
            cs.columns = split_list(columns);
            detail::parse_nlevels(nlevels, cs.nlevels, cs.nlevel_overrides);
            if (naexp) {
                cs.na_exp = *naexp;
                cs.method = na_method::naexp;
            }
            if (!na_method_name.empty()) cs.method = parse_na_method(na_method_name);
            if (!accent.empty()) cs.accentuate = parse_accentuation(accent);
            cs.threads = threads;
            const auto discrete = discrete_view(data, cs);
            const auto ft = compute_frequencies(discrete, cs);
            const auto top = top_patterns(ft, lines);
            plot_options opts;
            opts.column_order = split_list(order);
            if (!group.empty()) opts.facet_column = group;
            model = build_plot(top, ft, opts);
            if (!export_path.empty()) staged.add(export_path, export_frequencies(ft));
            detail::print_patterns(out, ft, top);
        } else if (*density) {
            density_settings ds;
            ds.columns = split_list(columns);
            ds.k = k;
            ds.locmax = locmax;
            if (!group.empty()) ds.group = group;
            ds.lines = lines;
            ds.order = split_list(order);
            ds.labels = labels;
            ds.jitter = jitter_amount;
            ds.seed = seed;
            ds.threads = threads;
            auto run = run_density(data, ds);
            out << "row\tdensity\n";
            for (const auto& r : run.selected) out << (r.row + 1) << '\t' << format_number(r.weight) << '\n';
            model = std::move(run.model);
        } else if (*sample) {
            model = subsample_plot(data, sample_size, seed, split_list(order));
        }

        if (model) {
            if (!svg_path.empty()) staged.add(svg_path, emit_svg(*model));
            if (!json_path.empty()) staged.add(json_path, emit_json(*model));
        }
        staged.commit();
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace tfpc
