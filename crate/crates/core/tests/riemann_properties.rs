use gasdecay::riemann::{rh_residual, solve_riemann, Wave, WaveKind};
use gasdecay::{GasParams, GasState, InvariantPair};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..3.0, -2.0f64..2.0)
}

fn gamma() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.4), Just(5.0 / 3.0), Just(2.0), 1.05f64..2.5]
}

fn close(a: &GasState, b: &GasState, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol * (1.0 + a.rho.abs().max(a.m.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn solutions_are_consistent((rl, vl) in state(), (rr, vr) in state(), g in gamma()) {
        let p = GasParams::new(g, 1.0).unwrap();
        let ul = GasState::from_rho_v(rl, vl);
        let ur = GasState::from_rho_v(rr, vr);
        let rs = solve_riemann(&ul, &ur, &p).unwrap();
        prop_assert_eq!(rs.sample(-1e3), ul);
        prop_assert_eq!(rs.sample(1e3), ur);
        if rs.pattern.is_vacuum() {
            prop_assert_eq!(rs.middle, GasState::VACUUM);
            return Ok(());
        }
        let inv = |u: &GasState| p.to_invariants(u);
        let states = [(rs.left, rs.middle), (rs.middle, rs.right)];
        for (k, w) in rs.waves.iter().enumerate() {
            let (a, b) = states[k];
            match *w {
                Wave::Shock { speed } => {
                    prop_assert!(rh_residual(speed, &a, &b, &p) <= 1e-10, "R-H {}", rh_residual(speed, &a, &b, &p));
                    let (la, lb) = (p.char_speeds(&a), p.char_speeds(&b));
                    let (sa, sb) = if k == 0 { (la.0, lb.0) } else { (la.1, lb.1) };
                    prop_assert!(sa >= speed - 1e-12 && speed >= sb - 1e-12, "Lax: {sa} {speed} {sb}");
                }
                Wave::Rarefaction { from, to } => {
                    prop_assert!(from <= to);
                    // the other family's invariant is carried across the fan
                    if k == 0 {
                        prop_assert!((inv(&a).w - inv(&b).w).abs() <= 1e-12 * (1.0 + inv(&a).w.abs()));
                    } else {
                        prop_assert!((inv(&a).z - inv(&b).z).abs() <= 1e-12 * (1.0 + inv(&a).z.abs()));
                    }
                }
            }
        }
        prop_assert!(rs.waves[0].fastest() <= rs.waves[1].slowest() + 1e-12);
    }

    #[test]
    fn mirror_symmetry((rl, vl) in state(), (rr, vr) in state(), g in gamma()) {
        let p = GasParams::new(g, 1.0).unwrap();
        let ul = GasState::from_rho_v(rl, vl);
        let ur = GasState::from_rho_v(rr, vr);
        let a = solve_riemann(&ul, &ur, &p).unwrap();
        let b = solve_riemann(&ur.reflect(), &ul.reflect(), &p).unwrap();
        prop_assert!(close(&a.middle.reflect(), &b.middle, 1e-10), "{:?} vs {:?}", a.middle, b.middle);
        for xi in [-1.5, -0.3, 0.0, 0.4, 1.7] {
            prop_assert!(close(&a.sample(xi).reflect(), &b.sample(-xi), 1e-9));
        }
    }

    #[test]
    fn invariant_round_trip((r, v) in (0.0f64..5.0, -3.0f64..3.0), g in gamma()) {
        let p = GasParams::new(g, 1.0).unwrap();
        let u = GasState::from_rho_v(r, v);
        let zw = p.to_invariants(&u);
        prop_assert!(zw.w >= zw.z);
        let back = p.from_invariants(&zw).unwrap();
        if r > 0.0 {
            prop_assert!(close(&u, &back, 1e-12));
        }
    }

    #[test]
    fn averages_stay_in_invariant_boxes(
        raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
        weights in prop::collection::vec(0.01f64..1.0, 20),
        g in gamma(),
    ) {
        // states with z ≥ z_lo and w ≤ w_hi form a convex set in (ρ, m)
        let p = GasParams::new(g, 1.0).unwrap();
        let (z_lo, w_hi) = (-2.0, 1.5);
        let states: Vec<GasState> = raw
            .iter()
            .map(|&(a, b)| {
                let z = z_lo + a * (w_hi - z_lo);
                let w = z + b * (w_hi - z);
                p.from_invariants(&InvariantPair { z, w }).unwrap()
            })
            .collect();
        let total: f64 = weights[..states.len()].iter().sum();
        let avg = states.iter().zip(&weights).fold(GasState { rho: 0.0, m: 0.0 }, |acc, (u, w)| GasState {
            rho: acc.rho + w * u.rho / total,
            m: acc.m + w * u.m / total,
        });
        if avg.rho > 1e-12 {
            let zw = p.to_invariants(&avg);
            prop_assert!(zw.z >= z_lo - 1e-9 && zw.w <= w_hi + 1e-9, "{zw:?}");
        }
    }
}

#[test]
fn patterns_cover_all_cases() {
    let p = GasParams::new(2.0, 1.0).unwrap();
    let s = |r: f64, v: f64| GasState::from_rho_v(r, v);
    let case = |a, b| solve_riemann(&a, &b, &p).unwrap().pattern;
    assert_eq!(case(s(1.0, -0.5), s(1.0, 0.5)).family1, WaveKind::Rarefaction);
    assert_eq!(case(s(1.0, 1.0), s(1.0, -1.0)).case(), Some(4));
    assert_eq!(case(s(2.0, 0.0), s(1.0, 0.0)).case(), Some(1));
    assert_eq!(case(s(1.0, 0.0), s(2.0, 0.0)).case(), Some(2));
    assert!(case(s(1.0, -5.0), s(1.0, 5.0)).is_vacuum());
}
