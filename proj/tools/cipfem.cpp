// Batch front-end for the CIP-stabilized transport solver: single runs,
// convergence studies, the invariant verification suite, and mesh utilities.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cip/config.hpp"
#include "cip/mesh_io.hpp"
#include "cip/study.hpp"
#include "cip/verify.hpp"

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_diagnostics(const cip::Trajectory& traj, double dt, const std::string& path) {
    std::ofstream out(path);
    out << "step,t,energy,cip_seminorm\n";
    for (std::size_t n = 0; n < traj.energy.size(); ++n) {
        out << n << ',' << fmt17(n * dt) << ',' << fmt17(traj.energy[n]) << ','
            << fmt17(traj.cip_seminorm[n]) << '\n';
    }
}

void write_snapshots(const cip::Trajectory& traj, const std::string& dir) {
    for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%04zu.txt", s);
        std::ofstream out(dir + "/" + name);
        out << "# mesh mesh.txt\n";
        out << fmt17(traj.snapshot_times[s]);
        for (long i = 0; i < traj.snapshots[s].size(); ++i) {
            out << ' ' << fmt17(traj.snapshots[s][i]);
        }
        out << '\n';
    }
}

int cmd_run(const std::string& config_path) {
    const cip::RunConfig cfg = cip::parse_config(config_path);
    if (cfg.neles.size() != 1) {
        std::cerr << "run: config must give a single nele (got a list)\n";
        return 1;
    }
    const cip::Scenario scenario = cip::make_scenario(cfg.scenario);
    cip::RunParams params = cfg.params();
    params.collect_error_trace = true;
    if (params.snapshot_stride == 0) {
        params.snapshot_stride = 0; // keep first/last only unless asked
    }

    const cip::SingleRunResult r = cip::run_single(scenario, params, cfg.neles[0]);

    std::filesystem::create_directories(cfg.output_dir);
    write_diagnostics(r.trajectory, r.dt, cfg.output_dir + "/diagnostics.csv");
    cip::export_mesh(*r.mesh, cfg.output_dir + "/mesh.txt");
    write_snapshots(r.trajectory, cfg.output_dir);
    {
        std::ofstream out(cfg.output_dir + "/error_trace.csv");
        out << "step,t,err_global_L2\n";
        for (std::size_t n = 0; n < r.error_trace.size(); ++n) {
            out << n << ',' << fmt17(n * r.dt) << ',' << fmt17(r.error_trace[n]) << '\n';
        }
    }
    {
        std::ofstream out(cfg.output_dir + "/summary.txt");
        out << "scenario = " << scenario.name << '\n';
        out << "degree = " << cfg.degree << '\n';
        out << "nele = " << r.nele << '\n';
        out << "h = " << fmt17(r.h) << '\n';
        out << "dt = " << fmt17(r.dt) << '\n';
        out << "nsteps = " << r.nsteps << '\n';
        out << "gamma = " << fmt17(cfg.gamma) << '\n';
        out << "theta = " << fmt17(cfg.theta) << '\n';
        for (const auto& [name, value] : r.errors) {
            out << name << " = " << fmt17(value) << '\n';
        }
    }
    std::cout << "run " << scenario.name << " nele=" << r.nele << " done, " << r.nsteps
              << " steps\n";
    for (const auto& [name, value] : r.errors) {
        std::cout << "  " << name << " = " << value << '\n';
    }
    return 0;
}

int cmd_convergence(const std::string& config_path) {
    const cip::RunConfig cfg = cip::parse_config(config_path);
    const cip::Scenario scenario = cip::make_scenario(cfg.scenario);
    std::filesystem::create_directories(cfg.output_dir);

    struct VariantRun {
        std::string suffix;
        double gamma;
        cip::ErrorReport report;
    };
    std::vector<VariantRun> runs;
    runs.push_back({"_stab", cfg.gamma, {}});
    if (cfg.compare_unstabilized) {
        runs.push_back({"_gal", 0.0, {}});
    }

    bool any_failed = false;
    for (auto& vr : runs) {
        cip::RunParams params = cfg.params();
        params.gamma = vr.gamma;
        vr.report = cip::run_convergence_study(scenario, params, cfg.neles);
        std::ofstream out(cfg.output_dir + "/report" + vr.suffix + ".csv");
        cip::write_report_csv(vr.report, out);
        for (const auto& lvl : vr.report.levels) {
            if (lvl.failed) {
                any_failed = true;
                std::cerr << "level nele=" << lvl.nele << " failed: " << lvl.message << '\n';
            }
        }
    }

    {
        std::ofstream out(cfg.output_dir + "/rates.csv");
        out << "variant,error,ls_rate\n";
        for (const auto& vr : runs) {
            for (const auto& name : cip::error_column_names()) {
                const double r = cip::ls_rate(vr.report, name);
                if (std::isfinite(r)) {
                    out << vr.suffix.substr(1) << ',' << name << ',' << fmt17(r) << '\n';
                }
            }
        }
    }

    for (const auto& vr : runs) {
        std::cout << "variant " << vr.suffix.substr(1) << " (gamma=" << vr.gamma << ")\n";
        for (const auto& name : cip::error_column_names()) {
            const double r = cip::ls_rate(vr.report, name);
            if (std::isfinite(r)) {
                std::cout << "  " << name << " rate " << r << '\n';
            }
        }
    }
    return any_failed ? 1 : 0;
}

int cmd_mesh_gen(const std::string& domain, int nele, bool periodic, const std::string& out_path) {
    cip::Mesh mesh;
    if (domain == "square") {
        mesh = cip::generate_square(nele, periodic);
    } else if (domain == "disc") {
        if (periodic) {
            std::cerr << "mesh gen: disc cannot be periodic\n";
            return 1;
        }
        mesh = cip::generate_disc(nele);
    } else {
        std::cerr << "mesh gen: domain must be square or disc\n";
        return 1;
    }
    cip::export_mesh(mesh, out_path);
    std::cout << "wrote " << out_path << ": " << mesh.vertices.size() << " vertices, "
              << mesh.triangles.size() << " triangles, " << mesh.boundary_edges.size()
              << " boundary edges, h = " << mesh.h << ", shape regularity "
              << mesh.shape_regularity << '\n';
    return 0;
}

int cmd_mesh_import(const std::string& in_path, const std::string& out_path) {
    std::vector<std::string> warnings;
    const cip::Mesh mesh = cip::import_mesh(in_path, &warnings);
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    std::cout << in_path << ": " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
              << " triangles, " << mesh.interior_edges.size() << " interior edges, "
              << mesh.boundary_edges.size() << " boundary edges, h = " << mesh.h
              << ", shape regularity " << mesh.shape_regularity << '\n';
    if (!out_path.empty()) {
        cip::export_mesh(mesh, out_path);
        std::cout << "wrote " << out_path << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CIP-stabilized finite element solver for transient transport"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run one simulation from a config file");
    run->add_option("config", config_path, "key = value config file")->required();

    std::string conv_config;
    auto* conv = app.add_subcommand("convergence", "run a mesh-refinement study");
    conv->add_option("config", conv_config, "key = value config file")->required();

    bool full = false;
    auto* verify = app.add_subcommand("verify", "run the invariant verification suite");
    verify->add_flag("--full", full, "include the long-running checks");

    auto* mesh = app.add_subcommand("mesh", "mesh generation and file utilities");
    mesh->require_subcommand(1);
    std::string gen_domain, gen_out;
    int gen_nele = 0;
    bool gen_periodic = false;
    auto* gen = mesh->add_subcommand("gen", "generate a mesh and write it");
    gen->add_option("domain", gen_domain, "square or disc")->required();
    gen->add_option("nele", gen_nele, "cells (square side) or boundary faces (disc)")->required();
    gen->add_flag("--periodic", gen_periodic, "identify opposite sides (square only)");
    gen->add_option("output", gen_out, "output mesh file")->required();
    std::string imp_in, imp_out;
    auto* imp = mesh->add_subcommand("import", "import a mesh file, validate and report");
    imp->add_option("input", imp_in, "input mesh file")->required();
    imp->add_option("--export", imp_out, "re-export to this path");
    std::string exp_in, exp_out;
    auto* exp = mesh->add_subcommand("export", "normalize a mesh file (import + export)");
    exp->add_option("input", exp_in, "input mesh file")->required();
    exp->add_option("output", exp_out, "output mesh file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config_path);
        }
        if (*conv) {
            return cmd_convergence(conv_config);
        }
        if (*verify) {
            return cip::verify::run_verify(full, std::cout) ? 0 : 1;
        }
        if (*gen) {
            return cmd_mesh_gen(gen_domain, gen_nele, gen_periodic, gen_out);
        }
        if (*imp) {
            return cmd_mesh_import(imp_in, imp_out);
        }
        if (*exp) {
            return cmd_mesh_import(exp_in, exp_out);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
