//! Command execution. Every file goes into the output directory.

use crate::acceptance;
use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::io::{num, write_csv, write_obj};
use crate::report::RunReport;
use hplane_core::exhaustion::{run_exhaustion, ExhaustionStage};
use hplane_core::mesh::TriMesh;
use hplane_core::solver::{catenoid, cross_section_lengths, minimize_annulus};
use hplane_core::verify::{
    barrier_sweeps, check_containment, check_embedded, check_maximum_principle, foliation_sweep, graph_near_infinity, pair_planes,
    CheckReport, GRAPH_BINS,
};
use std::fs;
use std::path::Path;

pub const REPORT_FILE: &str = "report.toml";

/// Run `cfg` writing into `out`. The report is written even when the command
/// fails; artifacts produced before a failure are kept.
pub fn run(cfg: &RunConfig, out: &Path) -> RunReport {
    let mut report = RunReport::new(cfg);
    let result = fs::create_dir_all(out).map_err(CliError::from).and_then(|_| execute(cfg, out, &mut report));
    let result = result.and_then(|_| {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Verification(failed.join(", ")))
        }
    });
    if let Err(e) = result {
        report.exit_code = e.exit_code();
        report.error = Some(e.to_string());
    }
    let _ = fs::write(out.join(REPORT_FILE), report.to_toml());
    report
}

fn save(out: &Path, report: &mut RunReport, name: &str, mesh: &TriMesh) -> Result<(), CliError> {
    write_obj(&out.join(name), mesh)?;
    report.artifacts.push(name.into());
    Ok(())
}

fn save_csv(out: &Path, report: &mut RunReport, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    write_csv(&out.join(name), header, rows)?;
    report.artifacts.push(name.into());
    Ok(())
}

const STAGE_HEADER: [&str; 13] = [
    "stage",
    "radius",
    "vertices",
    "iterations",
    "energy",
    "gradient_sup_norm",
    "converged",
    "ideal_gap",
    "hausdorff_to_prev_on_core",
    "core_components",
    "core_area",
    "core_area_bound",
    "failure",
];

fn stage_row(s: &ExhaustionStage) -> Vec<String> {
    let rep = s.report.as_ref();
    vec![
        s.n.to_string(),
        s.ball.radius.to_string(),
        s.disk.as_ref().map(|d| d.num_vertices().to_string()).unwrap_or_default(),
        rep.map(|r| r.iterations.to_string()).unwrap_or_default(),
        num(rep.map(|r| r.energy.i_h)),
        num(rep.map(|r| r.energy.gradient_sup_norm)),
        rep.map(|r| r.converged.to_string()).unwrap_or_default(),
        s.ideal_gap.to_string(),
        num(s.hausdorff_to_prev_on_core),
        s.core_components.to_string(),
        s.core_area.to_string(),
        s.core_area_bound.to_string(),
        s.failure.clone().unwrap_or_default(),
    ]
}

/// Run the exhaustion, write stage meshes and diagnostics, and fail on a
/// stage failure after saving what was computed.
fn exhaust(cfg: &RunConfig, out: &Path, report: &mut RunReport, h: f64) -> Result<Vec<ExhaustionStage>, CliError> {
    let curve = cfg.curve.build()?;
    let stages = run_exhaustion(&curve, &cfg.exhaustion_config(h)?)?;
    for s in &stages {
        if let Some(d) = &s.disk {
            save(out, report, &format!("stage_{}.obj", s.n), d)?;
        }
    }
    let rows: Vec<Vec<String>> = stages.iter().map(stage_row).collect();
    save_csv(out, report, "diagnostics.csv", &STAGE_HEADER, &rows)?;
    if let Some(f) = stages.iter().find_map(|s| s.failure.clone()) {
        return Err(CliError::Solver(hplane_core::Error::InvalidInput(f)));
    }
    Ok(stages)
}

/// A check that could not be evaluated counts as failed.
fn evaluated(name: &str, r: hplane_core::Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| CheckReport::new(name, f64::INFINITY, None, 0.0).with_note(format!("inconclusive: {e}")))
}

fn execute(cfg: &RunConfig, out: &Path, report: &mut RunReport) -> Result<(), CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Solve => {
            let h = cfg.h.unwrap_or(0.0);
            let mut one = cfg.clone();
            one.radii = vec![*cfg.radii.last().unwrap()];
            let stages = exhaust(&one, out, report, h)?;
            let s = stages.last().unwrap();
            let rep = s.report.as_ref().unwrap();
            let rows: Vec<Vec<String>> = rep
                .energy_history
                .iter()
                .zip(&rep.gradient_history)
                .enumerate()
                .map(|(i, (e, g))| vec![i.to_string(), e.to_string(), g.to_string()])
                .collect();
            save_csv(out, report, "energy.csv", &["iteration", "energy", "gradient_sup_norm"], &rows)?;
            report.checks.push(check_embedded(s.disk.as_ref().unwrap()));
        }
        Command::Annulus => {
            let a = &cfg.annulus;
            let plus = catenoid::circle(a.half_height, a.axis_distance, a.samples);
            let minus = catenoid::circle(-a.half_height, a.axis_distance, a.samples);
            let scfg = cfg.solver_config(0.0, *cfg.radii.last().unwrap())?;
            let (m, _) = minimize_annulus(&plus, &minus, &scfg, None)?;
            save(out, report, "annulus.obj", &m)?;
            let rows: Vec<Vec<String>> =
                cross_section_lengths(&m).iter().enumerate().map(|(i, l)| vec![i.to_string(), l.to_string()]).collect();
            save_csv(out, report, "cross_sections.csv", &["section", "length"], &rows)?;
            report.checks.push(check_embedded(&m));
        }
        Command::Pair => {
            let h = cfg.h.unwrap_or(0.0);
            let p = pair_planes(&cfg.curve.build()?, h, &cfg.exhaustion_config(h)?)?;
            save(out, report, "plus.obj", &p.plus)?;
            save(out, report, "minus.obj", &p.minus)?;
            save_csv(out, report, "pair.csv", &["h", "min_distance"], &[vec![h.to_string(), p.min_distance.to_string()]])?;
            report.checks.push(p.report);
        }
        Command::Sweep => {
            let mut hs = cfg.h_list.clone().unwrap_or_default();
            hs.sort_by(f64::total_cmp);
            let (meshes, r) = foliation_sweep(&cfg.curve.build()?, &hs, &cfg.exhaustion_config(0.0)?)?;
            let mut rows = Vec::new();
            for (i, (m, h)) in meshes.iter().zip(&hs).enumerate() {
                let name = format!("leaf_{i}.obj");
                save(out, report, &name, m)?;
                rows.push(vec![i.to_string(), h.to_string(), name]);
            }
            save_csv(out, report, "leaves.csv", &["leaf", "h", "mesh"], &rows)?;
            report.checks.push(r);
        }
        Command::Exhaust => {
            exhaust(cfg, out, report, cfg.h.unwrap_or(0.0))?;
        }
        Command::Verify => {
            let h = cfg.h.unwrap_or(0.0);
            let curve = cfg.curve.build()?;
            let stages = exhaust(cfg, out, report, h)?;
            let disk = stages.last().and_then(|s| s.disk.clone()).unwrap();
            report.checks.push(evaluated("containment", check_containment(&disk, &curve, h, cfg.hull_samples, 1e-3)));
            for (side, sweep) in ["plus", "minus"].iter().zip(barrier_sweeps(&curve, h)?) {
                let r = evaluated("maximum_principle", check_maximum_principle(&disk, &sweep, h, 1e-3));
                report.checks.push(r.with_provenance(format!("sweep from {side}")));
            }
            report.checks.push(evaluated("graph_near_infinity", graph_near_infinity(&disk, &curve, cfg.graph_height, GRAPH_BINS)));
            report.checks.push(check_embedded(&disk));
        }
        Command::Accept => {
            let results = acceptance::run_all();
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    vec![
                        r.id.to_string(),
                        r.pass().to_string(),
                        format!("{:.3}", r.elapsed.as_secs_f64()),
                        r.budget.as_secs().to_string(),
                        r.summary.clone(),
                    ]
                })
                .collect();
            save_csv(out, report, "acceptance.csv", &["criterion", "pass", "seconds", "budget_seconds", "summary"], &rows)?;
            report.checks.extend(results.iter().map(|r| r.check()));
        }
    }
    for c in &mut report.checks {
        c.provenance.push(format!("seed {}", cfg.seed));
    }
    Ok(())
}
