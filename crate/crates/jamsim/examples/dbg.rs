use jamsim::harness::*;

fn main() {
    let rho_grid = vec![0.02, 0.05, 0.08, 0.12, 0.17, 0.25, 0.35, 0.5, 0.65, 0.8];
    for e_j in [1_000.0, 2_000.0, 4_000.0, 8_000.0, 16_000.0] {
        let cfg = ExperimentConfig {
            e_j_grid: vec![e_j],
            rho_grid: rho_grid.clone(),
            seeds: (0..10).collect(),
            ..ExperimentConfig::default()
        };
        let out = run_sweep(&cfg).unwrap();
        let table = comparison_table(&cfg, &out.rows);
        let mut line = format!("E={e_j:7}: ");
        for r in &table {
            line += &format!("{}={:.4}(r{:.2}) ", r.scheme.name(), r.best_ser, r.best_rho_target);
        }
        println!("{line}");
        // PerJDT rho profile for unimodality
        let mut prof = String::from("   PerJDT rho profile: ");
        for &rho in &rho_grid {
            let sers: Vec<f64> = out.rows.iter()
                .filter(|r| r.cell.scheme == jamsim::schedule::JamScheme::PerJDt && r.cell.rho_target == rho)
                .map(|r| r.ser_eve).collect();
            if sers.is_empty() { continue; }
            let mean = sers.iter().sum::<f64>() / sers.len() as f64;
            prof += &format!("{mean:.4} ");
        }
        println!("{prof}");
    }
}
