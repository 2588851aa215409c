// radm: command-line driver for single solves, harness experiments, the
// symbol audit and snapshot inspection.
//
// Exit codes: 0 success, 2 configuration error, 3 blow-up, 4 audit or
// verification failure, 1 any other error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <malloc.h>

#include "CLI11.hpp"

#include "radm/cli_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBlowUp = 3;
constexpr int kExitAudit = 4;

int cmd_run(const std::string& config_path, const std::string& out_override, int snapshot_every) {
  radm::SolverConfig cfg = radm::parse_config(radm::read_text_file(config_path));
  if (!out_override.empty()) cfg.out_dir = out_override;
  radm::OutDirLock lock(cfg.out_dir);
  const std::filesystem::path dir(cfg.out_dir);

  radm::RunManifest manifest;
  manifest.config = cfg;
  manifest.created_at = radm::utc_timestamp();
  radm::write_text_file((dir / "manifest.json").string(), radm::to_json(manifest).dump(2) + "\n");

  const radm::Solver solver(cfg);
  for (const auto& w : solver.warnings()) std::cerr << "warning: " << w << '\n';
  long sample_index = 0;
  const auto result = radm::run(solver, [&](const radm::SolverState& st, const radm::DiagRecord&) {
    if (snapshot_every > 0 && sample_index % snapshot_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "snap_%06ld.bin", sample_index);
      radm::write_snapshot(st.w, st.t, cfg.filter, (dir / name).string());
    }
    ++sample_index;
  });
  radm::write_diag_csv(result.records, (dir / "diagnostics.csv").string());
  radm::write_snapshot(result.final_state.w, result.final_state.t, cfg.filter, (dir / "final.bin").string());

  const auto& last = result.records.back();
  std::cout << "t=" << radm::format_double(last.t) << " steps=" << result.final_state.step_count
            << " model_energy=" << radm::format_double(last.model_energy) << '\n';
  if (result.blew_up) {
    std::cerr << "blow-up: " << result.failure << '\n';
    return kExitBlowUp;
  }
  return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& output_override) {
  radm::ExperimentSpec spec = radm::parse_experiment(radm::read_text_file(spec_path));
  if (!output_override.empty()) spec.output_path = output_override;
  const auto out_dir = std::filesystem::path(spec.output_path).parent_path();
  radm::OutDirLock lock(out_dir.empty() ? "." : out_dir.string());
  const auto outcome = radm::run_experiment(spec);
  radm::write_text_file(spec.output_path, outcome.table.text());
  radm::write_text_file(spec.output_path + ".summary.txt", outcome.summary);
  std::cout << outcome.summary;
  return outcome.passed ? 0 : kExitAudit;
}

int cmd_audit(int grid_n, int max_order) {
  const std::array<double, 4> alphas{0.1, 0.25, 1.0, 4.0};
  const std::array<double, 4> thetas{1.0 / 6.0, 0.5, 0.75, 1.0};
  const auto rep = radm::run_symbol_audit(radm::WaveGrid(grid_n), alphas, thetas, max_order);
  std::cout << radm::table_of(rep).text();
  for (const auto& o : rep.offenders) std::cout << "offender: " << o << '\n';
  std::cout << (rep.passed() ? "PASS" : "FAIL") << " symbol_audit\n";
  return rep.passed() ? 0 : kExitAudit;
}

int cmd_snapshot_dump(const std::string& path, double threshold) {
  const auto snap = radm::read_snapshot(path);
  const auto& h = snap.header;
  std::cout << "n_per_axis=" << h.n_per_axis << " t=" << radm::format_double(h.t)
            << " alpha=" << radm::format_double(h.alpha) << " theta=" << radm::format_double(h.theta)
            << " deconv_order=" << h.deconv_order
            << " payload=" << (h.payload_kind == radm::PayloadKind::spectral ? "spectral" : "physical") << '\n';
  if (const auto* v = std::get_if<radm::SpectralVectorField>(&snap.field)) {
    const auto& grid = v->grid();
    std::cout << "k1,k2,k3,re0,im0,re1,im1,re2,im2\n";
    for (std::size_t m = 0; m < grid.size(); ++m) {
      const auto c = v->at(m);
      if (std::abs(c[0]) + std::abs(c[1]) + std::abs(c[2]) <= threshold) continue;
      const auto k = grid.wavevector(m);
      std::cout << k[0] << ',' << k[1] << ',' << k[2];
      for (const auto& z : c) std::cout << ',' << radm::format_double(z.real()) << ',' << radm::format_double(z.imag());
      std::cout << '\n';
    }
  } else {
    const auto& f = std::get<radm::RealVectorField>(snap.field);
    std::cout << "index,v0,v1,v2\n";
    for (std::size_t i = 0; i < f.points(); ++i) {
      const auto x = f.at(i);
      std::cout << i << ',' << radm::format_double(x[0]) << ',' << radm::format_double(x[1]) << ','
                << radm::format_double(x[2]) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Field buffers are ~MB sized; keep them on the heap instead of fresh mmaps per step.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  CLI::App app{"Pseudo-spectral solver for the rotational approximate deconvolution model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int snapshot_every = 0;
  auto* run = app.add_subcommand("run", "Integrate one configuration");
  run->add_option("config", config_path, "key=value configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Override out_dir");
  run->add_option("--snapshot-every", snapshot_every, "Write a snapshot every K samples (0: final only)")
      ->check(CLI::NonNegativeNumber);

  std::string spec_path;
  std::string output;
  auto* experiment = app.add_subcommand("experiment", "Run a harness experiment file");
  experiment->add_option("spec", spec_path, "Experiment file")->required()->check(CLI::ExistingFile);
  experiment->add_option("--output", output, "Override the output CSV path");

  int grid_n = 32;
  int max_order = 32;
  auto* audit = app.add_subcommand("audit", "Symbol audit over the default (alpha, theta, N) lattice");
  audit->add_option("--grid-n", grid_n, "Points per axis");
  audit->add_option("--max-order", max_order, "Largest deconvolution order")->check(CLI::NonNegativeNumber);

  std::string snap_path;
  double threshold = 0.0;
  auto* dump = app.add_subcommand("snapshot-dump", "List the contents of a snapshot file");
  dump->add_option("file", snap_path, "Snapshot file")->required()->check(CLI::ExistingFile);
  dump->add_option("--threshold", threshold, "Skip modes with |c| at or below this value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, snapshot_every);
    if (*experiment) return cmd_experiment(spec_path, output);
    if (*audit) return cmd_audit(grid_n, max_order);
    if (*dump) return cmd_snapshot_dump(snap_path, threshold);
  } catch (const radm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const radm::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const radm::BlowUp& e) {
    std::cerr << "blow-up: " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const radm::AuditFailure& e) {
    std::cerr << "audit failure: " << e.what() << '\n';
    return kExitAudit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
