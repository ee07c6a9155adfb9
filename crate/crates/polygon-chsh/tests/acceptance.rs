//! Acceptance criteria 1-8. One PASS/FAIL line per criterion with the
//! tolerance used and the measured runtime against its budget. Exits non-zero
//! if any criterion fails.

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use polygon_chsh::analytic::{even_bound, g_table, h_opt, h_table, n_star};
use polygon_chsh::bipartite::*;
use polygon_chsh::chsh::*;
use polygon_chsh::search::{
    certify, closed_form_sweep, global_optimum, max_chsh_fixed_obs, me_optimum, sample_max_tensor, ChshSense, Parity,
};
use polygon_chsh::theory::{build_theory, unit, Observable, Theory, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LP_CAP: usize = 15;
const CASES: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: u32, tolerance: &str, budget: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(_) => (false, "panicked".to_string()),
    };
    let in_time = elapsed < budget;
    let ok = pass && in_time;
    println!(
        "{} criterion {id}: {detail} [tol {tolerance}] runtime {:.3}s (budget {}s{})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", exceeded" },
    );
    ok
}

fn classical_bound() -> Outcome {
    let t = build_theory(3).unwrap();
    let report = global_optimum(&t, true, LP_CAP).unwrap();
    let third = 1.0 / 3.0;
    let sigma = separable_from_vertices(&t, &[(third, 0, 0), (third, 1, 1), (third, 2, 2)]).unwrap();
    let quad = [1, 0, 2, 0];
    let c_star = chsh_value(&prob_table(&ChshSetting::from_indices(&t, sigma, quad)).unwrap());
    let (lp_min, _) = max_chsh_fixed_obs(&t, quad, ChshSense::Min).unwrap();
    let pass = (report.best_value - 2.0).abs() <= 1e-7
        && (c_star.abs() - report.best_value).abs() <= 1e-7
        && (lp_min - c_star).abs() <= 1e-7;
    outcome(
        pass,
        format!(
            "n=3 global |C|={:.9}; classical quintuple obs=1,0,2,0 C={c_star:.9}, LP min for those observables {lp_min:.9}",
            report.best_value
        ),
    )
}

fn square() -> Outcome {
    let v = global_optimum(&build_theory(4).unwrap(), true, LP_CAP).unwrap().best_value;
    outcome((v - 4.0).abs() <= 1e-6, format!("n=4 global |C|={v:.9}"))
}

fn hexagon() -> Outcome {
    let v = global_optimum(&build_theory(6).unwrap(), true, LP_CAP).unwrap().best_value;
    let closed = 4.0 * even_bound(6, 0).unwrap();
    outcome(
        (v - 3.0).abs() <= 1e-6 && closed == 3.0,
        format!("n=6 global |C|={v:.9}, 4*even_bound(6,0)={closed:?}"),
    )
}

fn entangled_optimum_suite() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for n in 4..=13 {
        let t = build_theory(n).unwrap();
        let global = global_optimum(&t, true, LP_CAP).unwrap().best_value;
        let me = me_optimum(&t).value;
        let mut gap = (global - me).abs();
        if n % 2 == 1 {
            gap = gap.max((global - h_opt(n).unwrap().value).abs());
        }
        worst = worst.max(gap);
        if gap > 1e-6 {
            failures.push(n);
        }
    }
    outcome(
        failures.is_empty(),
        format!("n=4..13 global vs ME (and vs H_opt for odd n): max gap {worst:.2e}, failing n {failures:?}"),
    )
}

fn certificates() -> Outcome {
    let tol = 1e-8;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut lp_dual_positive = true;
    let mut closed_positive = true;
    for n in (5..=17).step_by(2) {
        let report = certify(n, tol).unwrap();
        for p in [&report.theorem, &report.delta] {
            let v = &p.verdict;
            worst = worst
                .max(v.primal_feasibility)
                .max(v.dual_feasibility)
                .max(v.primal_slackness)
                .max(v.dual_slackness)
                .max(v.gap);
            lp_dual_positive &= p.dual_positive;
        }
        if let Some(c) = &report.closed_form_dual {
            closed_positive &= c.all_positive;
        }
        if !report.pass {
            failures.push(n);
        }
    }
    outcome(
        failures.is_empty() && worst <= tol && lp_dual_positive && closed_positive,
        format!(
            "certify n=5..17 odd: max residual {worst:.2e}, LP duals positive={lp_dual_positive}, \
             closed-form y positive={closed_positive}, failing n {failures:?}"
        ),
    )
}

fn tsirelson() -> Outcome {
    let tsirelson = 2.0 * SQRT_2;
    let even: Vec<_> = closed_form_sweep(Parity::Even, 40).unwrap().into_iter().filter(|r| r.n >= 6).collect();
    let odd = closed_form_sweep(Parity::Odd, 41).unwrap();
    let mut bad = Vec::new();
    for r in &even {
        if r.optimum < tsirelson {
            bad.push(r.n);
        }
    }
    for r in &odd {
        if r.optimum > tsirelson {
            bad.push(r.n);
        }
    }
    for r in even.iter().chain(&odd) {
        if r.n >= 24 && (r.optimum - tsirelson).abs() > 0.05 {
            bad.push(r.n);
        }
    }
    let far = even
        .iter()
        .chain(&odd)
        .filter(|r| r.n >= 24)
        .map(|r| (r.optimum - tsirelson).abs())
        .fold(0.0, f64::max);
    outcome(
        bad.is_empty() && !even.is_empty() && !odd.is_empty(),
        format!(
            "{} even rows (n = 2,6 mod 8) and {} odd rows; max |C-2sqrt2| for n>=24 {far:.4}, violations {bad:?}",
            even.len(),
            odd.len()
        ),
    )
}

fn random_observable<R: Rng>(t: &Theory, rng: &mut R) -> Observable {
    if rng.gen_bool(0.5) {
        return t.binary_observable(rng.gen_range(0..2 * t.n() as i64));
    }
    let effects = t.pure_effects();
    let mut w: Vec<f64> = (0..effects.len() + 2).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let e: Vec3 = effects.iter().zip(&w).map(|(e, x)| e * *x).sum::<Vec3>() + w[effects.len() + 1] * unit();
    Observable::from_effect(e)
}

fn random_point<R: Rng>(t: &Theory, rng: &mut R) -> Vec3 {
    let mut v: Vec<f64> = (0..t.n()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    t.pure_states().iter().zip(&v).map(|(p, x)| p * *x).sum()
}

fn random_separable<R: Rng>(t: &Theory, rng: &mut R) -> BipartiteState {
    let k = rng.gen_range(1..4);
    let mut w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let mixture: Vec<_> = w.iter().map(|&x| (x, random_point(t, rng), random_point(t, rng))).collect();
    separable_state(t, &mixture).unwrap()
}

fn random_state<R: Rng>(t: &Theory, rng: &mut R) -> BipartiteState {
    match rng.gen_range(0..3) {
        0 => {
            let all = enumerate_max_entangled(t);
            all[rng.gen_range(0..all.len())].state.clone()
        }
        1 => random_separable(t, rng),
        _ => sample_max_tensor(t, rng, 3).unwrap(),
    }
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = [0usize; 5];
    let mut worst = [0.0f64; 5];

    for _ in 0..CASES {
        let t = build_theory(rng.gen_range(3..=8)).unwrap();
        let state = random_state(&t, &mut rng);
        let obs: [Observable; 4] = std::array::from_fn(|_| random_observable(&t, &mut rng));
        let setting = ChshSetting::new(state, obs[0], obs[1], obs[2], obs[3]);
        let table = prob_table(&setting).unwrap();
        let c = chsh_value(&table);
        let pair = AssemblagePair::new(&setting.state, &obs[0], &obs[1]);
        let routes = [
            chsh_from_win(winning_probability(&table)),
            chsh_from_win(win_q_route(&setting)),
            chsh_from_win(win_r_route(&setting)),
            chsh_from_win(win_via_assemblage(&pair, &q_effects(&obs[2], &obs[3]))),
            chsh_of_map(setting.state.map(), &[obs[0].effect0, obs[1].effect0], &[obs[2].effect0, obs[3].effect0]),
        ];
        let dev = routes.iter().map(|r| (r - c).abs()).fold(0.0, f64::max);
        worst[0] = worst[0].max(dev);
        violations[0] += usize::from(dev > 1e-10);
    }

    for _ in 0..CASES {
        let t = build_theory(rng.gen_range(3..=12)).unwrap();
        let state = random_state(&t, &mut rng);
        let a0 = random_observable(&t, &mut rng);
        let a1 = random_observable(&t, &mut rng);
        let gap = AssemblagePair::new(&state, &a0, &a1).signaling_gap();
        worst[1] = worst[1].max(gap);
        violations[1] += usize::from(gap > 1e-10);
    }

    for _ in 0..CASES {
        let n = rng.gen_range(3..=12);
        let t = build_theory(n).unwrap();
        let s = random_separable(&t, &mut rng);
        let quad: [i64; 4] = std::array::from_fn(|_| rng.gen_range(0..2 * n as i64));
        let c = chsh_indices(&t, s.map(), quad).abs();
        worst[2] = worst[2].max(c);
        violations[2] += usize::from(c > 2.0 + 1e-9);
    }

    for _ in 0..CASES {
        let t = build_theory(rng.gen_range(3..=16)).unwrap();
        let all = enumerate_max_entangled(&t);
        let me = &all[rng.gen_range(0..all.len())].state;
        let mut dev = (me.apply(&unit()) - t.max_mixed()).amax();
        for i in 0..t.n() as i64 {
            let image = me.apply(&t.pure_effect(i));
            let ray = image / image.z;
            let nearest = t.pure_states().iter().map(|v| (v - ray).amax()).fold(f64::MAX, f64::min);
            dev = dev.max(nearest);
            if image.z <= 0.0 {
                dev = f64::INFINITY;
            }
        }
        worst[3] = worst[3].max(dev);
        violations[3] += usize::from(dev > 1e-10);
    }

    let triangle = build_theory(3).unwrap();
    for _ in 0..CASES {
        let k = rng.gen_range(1..=6);
        let s = sample_max_tensor(&triangle, &mut rng, k).unwrap();
        let residual = match separable_decomposition(&triangle, &s).unwrap() {
            Some(d) => d.residual.max((d.terms.iter().map(|x| x.0).sum::<f64>() - 1.0).abs()),
            None => f64::INFINITY,
        };
        worst[4] = worst[4].max(residual);
        violations[4] += usize::from(residual > 1e-8);
    }

    outcome(
        violations.iter().all(|&v| v == 0),
        format!(
            "{CASES} cases each; violations / worst: four routes {} / {:.1e}, no-signaling {} / {:.1e}, \
             separable |C| {} / {:.9}, ME rays and u {} / {:.1e}, n=3 decomposition {} / {:.1e}",
            violations[0], worst[0], violations[1], worst[1], violations[2], worst[2], violations[3], worst[3],
            violations[4], worst[4]
        ),
    )
}

fn argmax_set(values: &[f64]) -> Vec<usize> {
    let best = values.iter().cloned().fold(f64::MIN, f64::max);
    (0..values.len()).filter(|&k| values[k] >= best - 1e-12).collect()
}

fn optima_ordering() -> Outcome {
    let mut failures = Vec::new();
    for n in (5..=21).step_by(2) {
        let g = g_table(n).unwrap();
        let h = h_table(n).unwrap();
        let ns = n_star(n);
        let hopt = h_opt(n).unwrap().value;
        let others = (0..g.len()).filter(|&k| k != ns).map(|k| g[k]).fold(f64::MIN, f64::max);
        let ok = others < hopt && hopt < g[ns] && argmax_set(&g) == vec![ns] && argmax_set(&h) == vec![ns];
        if !ok {
            failures.push(n);
        }
    }
    outcome(failures.is_empty(), format!("odd n=5..21, failing n {failures:?}"))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "1e-7", secs(5), classical_bound),
        run(2, "1e-6", secs(60), square),
        run(3, "1e-6, exact closed form", secs(120), hexagon),
        run(4, "1e-6", secs(15 * 60), entangled_optimum_suite),
        run(5, "1e-8", secs(30), certificates),
        run(6, "0.05", secs(1), tsirelson),
        run(7, "1e-10 / 1e-9 / 1e-8", secs(60), properties),
        run(8, "strict", secs(1), optima_ordering),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
