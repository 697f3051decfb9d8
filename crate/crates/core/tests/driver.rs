//! End-to-end runs of the adaptive driver on the 2D-1 mesh.

mod common;

use std::path::PathBuf;

use common::repo_path;
use fsidwr::driver::{parse_results_table, run_adaptive, Benchmark, LoopRecord, RunConfig, TableRow, RESULTS_FILE, RESULTS_HEADER};

fn scratch_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("fsidwr-driver-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn short_run(tag: &str, loops: usize) -> (RunConfig, Vec<LoopRecord>) {
    let mut cfg = RunConfig::load(&repo_path("configs/flow2d1.cfg")).unwrap();
    cfg.max_loops = loops;
    cfg.output = scratch_dir(tag);
    let records = run_adaptive(&cfg).unwrap();
    (cfg, records)
}

#[test]
fn shipped_configs_equal_presets() {
    for (file, b) in [("configs/fsi1.cfg", Benchmark::Fsi1), ("configs/flow2d1.cfg", Benchmark::Flow2d1)] {
        let loaded = RunConfig::load(&repo_path(file)).unwrap();
        let mut preset = RunConfig::preset(b);
        preset.mesh = loaded.mesh.clone();
        assert!(loaded.mesh.is_file(), "{}", loaded.mesh.display());
        assert_eq!(loaded, preset, "{file}");
    }
}

#[test]
fn infinite_tolerance_stops_after_one_loop() {
    let mut cfg = RunConfig::load(&repo_path("configs/flow2d1.cfg")).unwrap();
    cfg.tol = f64::INFINITY;
    cfg.output = scratch_dir("inf");
    let records = run_adaptive(&cfg).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].marked_cells, 0);
}

#[test]
fn outputs_are_consistent_and_deterministic() {
    let (cfg, records) = short_run("a", 2);
    assert_eq!(records.len(), 2);
    assert!(records[1].dofs > records[0].dofs);
    assert!(records[1].active_cells == records[0].active_cells + 3 * records[0].marked_cells);

    // results table round trip
    let text = std::fs::read_to_string(cfg.output.join(RESULTS_FILE)).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER);
    let rows = parse_results_table(&text).unwrap();
    let expected: Vec<TableRow> = records.iter().map(TableRow::from).collect();
    assert_eq!(rows.len(), expected.len());
    for (r, e) in rows.iter().zip(&expected) {
        assert_eq!(r.dofs, e.dofs);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-3 * b.abs();
        assert!(close(r.est_err, e.est_err) && close(r.est_ind, e.est_ind));
        assert!(close(r.true_error.unwrap(), e.true_error.unwrap()));
    }

    // one VTK file per loop, sized like the mesh of that loop
    for r in &records {
        let vtk = std::fs::read_to_string(cfg.output.join(format!("solution-{:02}.vtk", r.loop_index))).unwrap();
        let count = |key: &str| -> usize {
            let line = vtk.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key}"));
            line.split_whitespace().nth(1).unwrap().parse().unwrap()
        };
        let cells = count("CELLS");
        assert_eq!(cells, r.active_cells);
        assert_eq!(count("CELL_DATA"), cells);
        assert_eq!(count("POINT_DATA"), count("POINTS"));
        for field in ["VECTORS v ", "VECTORS u ", "SCALARS p ", "VECTORS z_v ", "SCALARS eta "] {
            assert!(vtk.contains(field), "missing {field}");
        }
    }
    assert!(cfg.output.join("summary.txt").is_file());

    // a second run gives bit-identical numbers
    let (_, again) = short_run("b", 2);
    for (a, b) in records.iter().zip(&again) {
        assert_eq!((a.dofs, a.goal, a.eta, a.eta.to_bits()), (b.dofs, b.goal, b.eta, b.eta.to_bits()));
    }
}
