//! Square-pulse decay run printing the main monitors.

use std::time::Instant;

use gasdecay::diagnostics::detect_t0;
use gasdecay::scheme::{run_trajectory, InitialData, MeshConfig};
use gasdecay::GasParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).take(3).map(|a| a.parse().unwrap()).collect();
    let dx = args.first().copied().unwrap_or(0.05);
    let t_final = args.get(1).copied().unwrap_or(5.0);
    let amp = args.get(2).copied().unwrap_or(2.0);
    let gas = GasParams::new(2.0, 1.0)?;
    let data = InitialData::square_pulse(&gas, -1.0, 1.0, amp, 0.0)?;
    let mut cfg = MeshConfig::new(gas, dx, -20.0, 20.0, t_final);
    if std::env::args().nth(4).as_deref() == Some("godunov") {
        cfg.variant = gasdecay::scheme::Variant::StandardGodunov;
    }
    let start = Instant::now();
    let (scheme, traj) = run_trajectory(cfg, &data)?;
    let secs = start.elapsed().as_secs_f64();
    let d = &traj.diagnostics;
    let mass0 = d[0].total_mass;
    let drift = d.iter().map(|r| (r.total_mass - mass0).abs()).fold(0.0, f64::max);
    println!("steps {} dt {:e} E0 {} M0 {} delta {:e} domain [{}, {}] time {secs:.2}s", scheme.n_steps, scheme.dt, scheme.e0, scheme.m0, scheme.delta, scheme.x_min, scheme.x_max);
    println!("mass drift {drift:e}");
    let rec = &traj.records;
    let l_dec = rec.windows(2).filter(|w| w[1].l < w[0].l).count();
    let min_inc = rec.iter().map(|r| r.l_increment).fold(f64::INFINITY, f64::min);
    println!("L0 {} Lfinal {} L decreases {l_dec} min increment {min_inc:e}", d[0].t, rec.last().unwrap().l);
    let q = rec.len() * 3 / 4;
    println!("L at 3/4 {} final {}", rec[q].l, rec.last().unwrap().l);
    println!("M final {}", rec.last().unwrap().m);
    let rh = rec.iter().map(|r| r.max_rh_mid).fold(0.0, f64::max);
    let gap = rec.iter().map(|r| r.two_pass_gap).fold(0.0, f64::max);
    let defect = rec.iter().map(|r| r.construction_defect).fold(0.0, f64::max);
    let cut = rec.iter().map(|r| r.cut_total).fold(0.0, f64::max);
    let vac = rec.iter().map(|r| r.near_vacuum_cells).max().unwrap();
    println!("max rh {rh:e} gap {gap:e} defect {defect:e} cut {cut:e} near-vac {vac}");
    for k in (0..d.len()).step_by((d.len() / 20).max(1)) {
        let r = &d[k];
        println!("t {:.3} min_z~ {:.5} max_w~ {:.5} J {:.5} mass {:.15} band {}", r.t, r.min_ztilde, r.max_wtilde, r.total_j, r.total_mass, r.in_band);
    }
    let r = d.last().unwrap();
    println!("final t {:.3} min_z~ {:.5} max_w~ {:.5} J {:.5}", r.t, r.min_ztilde, r.max_wtilde, r.total_j);
    println!("t0 {:?}", detect_t0(d, 0.05, scheme.e0, &gas));
    Ok(())
}
