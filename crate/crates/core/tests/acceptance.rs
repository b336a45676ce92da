//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tfc_homotopy::homotopy::{
    convex_homotopy, q_matrices, vectorize_omega, BasisFunction, SupportCase, SupportKind, TfcHomotopy,
};
use tfc_homotopy::linalg::{self, DenseMatrix};
use tfc_homotopy::problems::{self, example2_costate_oracle, rk4_integrate, OdeSystem};
use tfc_homotopy::trace::EventPayload;
use tfc_homotopy::{
    dcm_track, pam_track, two_layer_track, AuxiliaryProblem, EventKind, Outcome, ParametricHomotopy, PathTrace,
    PenaltySwitcher, SwitchParams, TrackerConfig, ZeroProblem,
};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, title: &str, checks: Vec<(String, bool)>, elapsed: Duration, limit: Duration) {
        let mut checks = checks;
        checks.push((format!("runtime {:.2}s < {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()), elapsed < limit));
        let ok = checks.iter().all(|(_, c)| *c);
        if !ok {
            self.failures += 1;
        }
        let detail: Vec<String> = checks.iter().map(|(d, c)| format!("{}{}", if *c { "" } else { "!! " }, d)).collect();
        println!("{} [{id}] {title}: {}", if ok { "PASS" } else { "FAIL" }, detail.join("; "));
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn first_limit_kappa(t: &PathTrace) -> Option<f64> {
    t.events_of(EventKind::LimitPointDetected).next().map(|e| e.kappa)
}

fn switcher(cfg: &TrackerConfig) -> PenaltySwitcher {
    PenaltySwitcher::new(SwitchParams::from_config(cfg, 0))
}

fn criterion1(r: &mut Report) {
    let start = Instant::now();
    let p = problems::example1();
    let h = p.tfc(SupportKind::Poly).unwrap();
    let t = two_layer_track(&h, &p.config, &switcher(&p.config));
    let elapsed = start.elapsed();
    let last = t.last_point().unwrap();
    let lp = first_limit_kappa(&t);
    r.line(
        "1",
        "example 1, two-layer tracker",
        vec![
            (format!("outcome {}", t.outcome), t.outcome == Outcome::Success),
            (format!("final kappa {}", last.kappa), last.kappa == 1.0),
            (format!("|x - 0| = {:.2e} <= 1e-6", dist(&last.x, &[0.0, 0.0])), dist(&last.x, &[0.0, 0.0]) <= 1e-6),
            (format!("switches {}", t.switch_count()), t.switch_count() >= 1),
            (format!("first limit point at {lp:?} in [0.32, 0.43]"), lp.is_some_and(|k| (0.32..=0.43).contains(&k))),
        ],
        elapsed,
        Duration::from_secs(10),
    );
}

fn criterion2(r: &mut Report) {
    let start = Instant::now();
    let p = problems::example1();
    let h = p.convex().unwrap();
    let t = pam_track(&h, p.start(), p.arclength_step, &p.config);
    let elapsed = start.elapsed();
    r.line(
        "2",
        "example 1, pseudo-arclength on the fixed-point homotopy",
        vec![(format!("outcome {}", t.outcome), matches!(t.outcome, Outcome::Diverged | Outcome::ReturnedToStart))],
        elapsed,
        Duration::from_secs(10),
    );
}

fn criterion3(r: &mut Report) {
    let start = Instant::now();
    let l0 = example2_costate_oracle().unwrap();
    let p = problems::example2();
    let h = p.tfc(SupportKind::Poly).unwrap();
    let t = two_layer_track(&h, &p.config, &switcher(&p.config));
    let elapsed = start.elapsed();
    let last = t.last_point().unwrap();
    let lp = first_limit_kappa(&t);
    let d0 = dist(&l0, &[-2.9411, -2.0820]);
    let d1 = dist(&last.x, &[0.4728, -0.0739]);
    r.line(
        "3",
        "example 2, optimal-control shooting",
        vec![
            (format!("costate oracle {l0:.5?}, off by {d0:.1e} <= 2e-3"), d0 <= 2e-3),
            (format!("outcome {}", t.outcome), t.outcome == Outcome::Success),
            (format!("final {:.5?}, off by {d1:.1e} <= 2e-3", last.x), last.kappa == 1.0 && d1 <= 2e-3),
            (format!("first limit point at {lp:?} in [0.48, 0.60]"), lp.is_some_and(|k| (0.48..=0.60).contains(&k))),
        ],
        elapsed,
        Duration::from_secs(60),
    );
}

fn criterion4(r: &mut Report) {
    let start = Instant::now();
    let p = problems::example3();
    let cfg = p.config;
    let h = p.tfc(SupportKind::Poly).unwrap();
    let t = two_layer_track(&h, &cfg, &switcher(&cfg));
    let last = t.last_point().unwrap();
    let d = dist(&last.x, &[0.0, 0.0, PI]);
    let crossing =
        t.events_of(EventKind::ThresholdCrossed).find(|e| linalg::norm_inf(&e.point) > 100.0 && e.kappa > 0.99);
    let ladder = t
        .events_of(EventKind::SwitchSolved)
        .filter(|e| matches!(e.payload, Some(EventPayload::Switch { ladder_level, .. }) if ladder_level >= 1))
        .count();
    let convex = p.convex().unwrap();
    let pam = pam_track(&convex, p.start(), p.arclength_step, &cfg);
    let dcm = dcm_track(&convex, p.start(), &cfg);
    let elapsed = start.elapsed();
    r.line(
        "4",
        "example 3, elastic rod with growth threshold",
        vec![
            (format!("outcome {}", t.outcome), t.outcome == Outcome::Success),
            (format!("final {:.6?}, off by {d:.1e} <= 1e-4", last.x), last.kappa == 1.0 && d <= 1e-4),
            (
                format!("threshold crossing above 100 past kappa 0.99: {:?}", crossing.map(|e| e.kappa)),
                crossing.is_some(),
            ),
            (format!("ladder switches {ladder} >= 1"), ladder >= 1),
            (format!("pam outcome {}", pam.outcome), pam.outcome == Outcome::Diverged),
            (format!("dcm outcome {}", dcm.outcome), dcm.outcome == Outcome::Diverged),
        ],
        elapsed,
        Duration::from_secs(120),
    );
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> (ZeroProblem, AuxiliaryProblem) {
    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = ZeroProblem::new(n, move |x| {
        Ok((0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>() + (x[i] * s[i]).sin() + x[i].powi(3))
            .collect())
    });
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let g = ZeroProblem::new(n, {
        let b = b.clone();
        move |x| Ok(x.iter().zip(&b).map(|(u, v)| (u - v) * (1.0 + u * u)).collect())
    });
    (f, AuxiliaryProblem::custom(g, b).unwrap())
}

fn random_basis(rng: &mut ChaCha8Rng, n: usize) -> BasisFunction {
    match rng.random_range(0..3) {
        0 => BasisFunction::exp_kappa_squared(n),
        1 => BasisFunction::new(n, |k, x| Ok(x.iter().map(|v| (2.0 + v.sin()) * k * k * k + 0.5).collect())),
        _ => BasisFunction::new(n, |k, x| Ok(x.iter().map(|v| (1.0 + v * v) * (k * 3.0).exp()).collect())),
    }
}

fn criterion5(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kinds = [SupportKind::Poly, SupportKind::ExpPos, SupportKind::ExpNeg];
    let mut boundary = 0.0_f64;
    let mut annihilate = 0.0_f64;
    let mut vect = 0.0_f64;
    let mut jac = 0.0_f64;
    for draw in 0..1000 {
        let n = 1 + draw % 3;
        let (f, g) = random_problem(&mut rng, n);
        let kind = kinds[draw % 3];
        let h = TfcHomotopy::new(f.clone(), g.clone(), SupportCase::unit(kind), random_basis(&mut rng, n)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let omega =
            DenseMatrix::from_row_slice(n, n, &(0..n * n).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<_>>())
                .unwrap();
        let rel =
            |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs() / (1.0 + v.abs())).fold(0.0, f64::max);
        boundary = boundary
            .max(rel(&h.tfc_gamma(0.0, &x, &omega).unwrap(), &g.residual(&x).unwrap()))
            .max(rel(&h.tfc_gamma(1.0, &x, &omega).unwrap(), &f.residual(&x).unwrap()));
        let scale = linalg::norm_inf(&h.basis().eval(1.0, &x).unwrap()).max(1.0);
        annihilate = annihilate
            .max(linalg::norm_inf(&h.gamma_omega(0.0, &x).unwrap()) / scale)
            .max(linalg::norm_inf(&h.gamma_omega(1.0, &x).unwrap()) / scale);
        let kappa = rng.random_range(0.0..1.0);
        let direct = omega.matvec(&h.gamma_omega(kappa, &x).unwrap()).unwrap();
        let tilde = h.gamma_omega_tilde(kappa, &x).unwrap().matvec(&vectorize_omega(&omega)).unwrap();
        vect = vect.max(rel(&direct, &tilde));
        if draw % 10 == 0 {
            let a = h.tfc_gamma_jac_x(kappa, &x, &omega).unwrap();
            let fd = linalg::jacobian_fd(|y| h.tfc_gamma(kappa, y, &omega), &x, None).unwrap();
            jac = jac.max(a.add(&fd.scale(-1.0)).unwrap().max_abs() / fd.max_abs().max(1.0));
        }
    }

    let mut block = 0.0_f64;
    for kind in kinds {
        for eta0 in [0.0, -1.0] {
            for etaf in [1.0, 2.0] {
                for n in 1..=3 {
                    let s = SupportCase::new(kind, eta0, etaf).unwrap();
                    let q = q_matrices(&s, n).unwrap();
                    let prod = s.boundary_block(n).matmul(&q.assemble()).unwrap();
                    block = block.max(prod.add(&DenseMatrix::identity(2 * n).scale(-1.0)).unwrap().max_abs());
                }
            }
        }
    }

    let mut poly = 0.0_f64;
    for _ in 0..200 {
        let n = 2;
        let (f, g) = random_problem(&mut rng, n);
        let h = TfcHomotopy::new(
            f.clone(),
            g.clone(),
            SupportCase::unit(SupportKind::Poly),
            BasisFunction::exp_kappa_squared(n),
        )
        .unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let k = rng.random_range(0.0..1.0);
        let a = h.gamma0(k, &x).unwrap();
        let b = convex_homotopy(&f, &g, k, &x).unwrap();
        poly = poly.max(a.iter().zip(&b).map(|(u, v)| (u - v).abs() / (1.0 + v.abs())).fold(0.0, f64::max));
    }

    r.line(
        "5",
        "TFC property suite",
        vec![
            (format!("boundary conditions, 1000 draws: {boundary:.1e} <= 1e-12"), boundary <= 1e-12),
            (format!("steering term vanishes at kappa 0 and 1: {annihilate:.1e} <= 1e-12"), annihilate <= 1e-12),
            (format!("Q block identity: {block:.1e} <= 1e-10"), block <= 1e-10),
            (format!("poly baseline equals convex homotopy: {poly:.1e} <= 1e-12"), poly <= 1e-12),
            (format!("vectorized product: {vect:.1e} <= 1e-12"), vect <= 1e-12),
            (format!("analytic vs differenced Jacobian: {jac:.1e} <= 1e-5"), jac <= 1e-5),
        ],
        start.elapsed(),
        Duration::from_secs(60),
    );
}

fn criterion6(r: &mut Report) {
    let start = Instant::now();
    let fold = ParametricHomotopy::new(1, |k, x| Ok(vec![x[0] * x[0] + k - 0.25]));
    let cfg = TrackerConfig::default();
    let d = dcm_track(&fold, &[0.5], &cfg);
    let lp = first_limit_kappa(&d);
    let a = pam_track(&fold, &[0.5], cfg.dkappa_default, &cfg);
    let end = a.last_point().unwrap();

    // same fold as a convex homotopy, regularized at the fold point
    let f = ZeroProblem::new(1, |x| Ok(vec![x[0] * x[0] + 0.75]));
    let g = AuxiliaryProblem::custom(ZeroProblem::new(1, |x| Ok(vec![x[0] * x[0] - 0.25])), vec![0.5]).unwrap();
    let h = TfcHomotopy::new(f, g, SupportCase::unit(SupportKind::Poly), BasisFunction::exp_kappa_squared(1)).unwrap();
    let omega = h.regularize_omega(0.25, &[0.0], 1e-2).unwrap();
    let det = linalg::determinant(&h.tfc_gamma_jac_x(0.25, &[0.0], &omega).unwrap()).unwrap().abs();

    let growth = OdeSystem::new(1, 0.0, 1.0, |_, y, _| Ok(vec![y[0]]));
    let e = |steps| (rk4_integrate(&growth, &[1.0], 0.0, steps).unwrap()[0] - std::f64::consts::E).abs();
    let ratio = e(50) / e(100);

    r.line(
        "6",
        "oracle suite",
        vec![
            (
                format!("fold dcm {} at {lp:?} in [0.22, 0.25]", d.outcome),
                d.outcome == Outcome::LimitPointStall && lp.is_some_and(|k| (0.22..=0.25).contains(&k)),
            ),
            (
                format!("fold pam {} at kappa {} x {:.8}", a.outcome, end.kappa, end.x[0]),
                a.outcome == Outcome::ReturnedToStart && end.kappa == 0.0 && (end.x[0] + 0.5).abs() <= 1e-6,
            ),
            (format!("regularized |det| {det:.2e} >= 1e-3"), det >= 1e-3),
            (format!("rk4 order ratio {ratio:.2} in [12, 20]"), (12.0..=20.0).contains(&ratio)),
        ],
        start.elapsed(),
        Duration::from_secs(10),
    );
}

fn main() {
    let only: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut r = Report { failures: 0 };
    type Criterion = fn(&mut Report);
    let criteria: [(&str, Criterion); 6] = [
        ("1", criterion1),
        ("2", criterion2),
        ("3", criterion3),
        ("4", criterion4),
        ("5", criterion5),
        ("6", criterion6),
    ];
    for (id, run) in criteria {
        if only.as_deref().is_none_or(|o| o == id) {
            run(&mut r);
        }
    }
    if r.failures > 0 {
        println!("{} criterion(s) failed", r.failures);
        std::process::exit(1);
    }
}
