//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use liftdec::counting::{enumerate_histograms, CountingVariable};
use liftdec::lifting::{ground, ground_distance, lift, lifted_distance};
use liftdec::model::{Distribution, JointKind, Mdp, Pomdp, Range, DEFAULT_ENUMERATION_CAP};
use liftdec::nano::{generate_nano, nano_desk_preset, nano_paper_preset, NOOP, RELEASE};
use liftdec::random::{random_liftable, random_lifted, random_mdp, random_pomdp, PartitionShape};
use liftdec::size::{ground_key_count, lifted_key_count, size_report, SizeParams};
use liftdec::solvers::{
    decpomdp_exhaustive, lifted_exhaustive, mdp_value_iteration, pomdp_plan_iteration,
    ConditionalPlan,
};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CAP: u64 = DEFAULT_ENUMERATION_CAP;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || {
        format!("took {elapsed:?}, budget {budget:?}")
    })
}

/// Agreement to `digits` significant digits.
fn sig_digits_eq(a: f64, b: f64, digits: i32) -> bool {
    (a - b).abs() <= 0.5 * 10f64.powi(1 - digits) * b.abs()
}

fn size_reproduction() -> Result<String, String> {
    let t0 = Instant::now();
    let p = nano_paper_preset()
        .size_params()
        .map_err(|e| e.to_string())?;
    let r = size_report(&p);
    let elapsed = t0.elapsed();
    ensure(r.log2_t_ground == 320010.0, || {
        format!("log2 T ground = {}", r.log2_t_ground)
    })?;
    ensure(r.log2_omega_ground == 320005.0, || {
        format!("log2 Omega ground = {}", r.log2_omega_ground)
    })?;
    let l = 64000f64.log2();
    ensure(sig_digits_eq(r.log2_t_lifted, 10.0 + 10.0 * l, 12), || {
        format!("log2 T lifted = {}", r.log2_t_lifted)
    })?;
    ensure(
        sig_digits_eq(r.log2_omega_lifted, 5.0 + 10.0 * l, 12),
        || format!("log2 Omega lifted = {}", r.log2_omega_lifted),
    )?;
    within_budget(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "ground 2^{} / 2^{}, lifted 2^{:.6} / 2^{:.6}",
        r.log2_t_ground, r.log2_omega_ground, r.log2_t_lifted, r.log2_omega_lifted
    ))
}

/// C(n, k) by the multiplicative formula in u128.
fn choose(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn histogram_counting() -> Result<String, String> {
    let t0 = Instant::now();
    let mut checked = 0;
    for n in 1..=10u64 {
        for r in 1..=4usize {
            let var =
                CountingVariable::new(0, Range::numbered("v", r), n).map_err(|e| e.to_string())?;
            let hs: Vec<_> = enumerate_histograms(&var, CAP)
                .map_err(|e| e.to_string())?
                .collect();
            let expected = choose(n + r as u64 - 1, r as u64 - 1);
            ensure(hs.len() as u128 == expected, || {
                format!("n={n} r={r}: {} histograms, expected {expected}", hs.len())
            })?;
            let total: BigUint = hs.iter().map(|h| h.multiplicity()).sum();
            ensure(total == BigUint::from(r).pow(n as u32), || {
                format!("n={n} r={r}: multiplicities sum to {total}")
            })?;
            if n >= 2 {
                ensure(expected <= (n as u128).pow(r as u32), || {
                    format!("n={n} r={r}: C exceeds n^r")
                })?;
            }
            checked += 1;
        }
    }
    within_budget(t0.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{checked} (n, r) pairs"))
}

fn lifted_ground_equivalence() -> Result<String, String> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_value = 0f64;
    let mut worst_entry = 0f64;
    for i in 0..50 {
        let h = 1 + i % 3;
        let l = random_liftable(&mut rng, 4, 2, 3).map_err(|e| e.to_string())?;
        let g = ground(&l, CAP).map_err(|e| e.to_string())?;
        let vg = decpomdp_exhaustive(&g, h).map_err(|e| e.to_string())?.value;
        let vl = lifted_exhaustive(&l, h, false)
            .map_err(|e| e.to_string())?
            .value;
        worst_value = worst_value.max((vg - vl).abs());
        ensure((vg - vl).abs() < 1e-9, || {
            format!("instance {i} (h={h}): ground {vg}, lifted {vl}")
        })?;

        let relifted = lift(&g, &l.partitioning).map_err(|e| e.to_string())?;
        let regrounded = ground(&relifted, CAP).map_err(|e| e.to_string())?;
        let dl = lifted_distance(&l, &relifted).ok_or("lifted key sets differ")?;
        let dg = ground_distance(&g, &regrounded).ok_or("ground key sets differ")?;
        worst_entry = worst_entry.max(dl).max(dg);
        ensure(dl <= 1e-9 && dg <= 1e-9, || {
            format!("instance {i}: round trip off by {dl} / {dg}")
        })?;
    }
    within_budget(t0.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "50 instances, max |value delta| {worst_value:.1e}, max entry delta {worst_entry:.1e}, {:?}",
        t0.elapsed()
    ))
}

fn mdp_correctness() -> Result<String, String> {
    let t0 = Instant::now();
    let pairs = [
        (1.0, 0.5),
        (-2.0, 0.9),
        (0.3, 0.1),
        (5.0, 0.99),
        (1.0, 0.75),
        (-0.5, 0.6),
        (10.0, 0.2),
        (2.5, 0.95),
        (0.0, 0.8),
        (-7.0, 0.3),
    ];
    for (r, gamma) in pairs {
        let m = Mdp {
            states: Range::numbered("s", 1),
            actions: Range::numbered("a", 1),
            transition: BTreeMap::from([((0, 0), Distribution::point(1, 0))]),
            reward: vec![r],
            discount: gamma,
        };
        let (u, _) = mdp_value_iteration(&m, 1e-9).map_err(|e| e.to_string())?;
        let exact = r / (1.0 - gamma);
        ensure((u.values[0] - exact).abs() < 1e-6, || {
            format!("R={r} gamma={gamma}: {} vs {exact}", u.values[0])
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eps = 1e-6;
    let mut worst = 0f64;
    for i in 0..20 {
        let m = random_mdp(&mut rng, 1 + i % 5, 2 + i % 2);
        let (u, _) = mdp_value_iteration(&m, eps).map_err(|e| e.to_string())?;
        let ns = m.num_states();
        // Bellman backup written out directly
        let residual = (0..ns)
            .map(|s| {
                let best = (0..m.actions.len())
                    .filter(|&a| m.row(s, a).is_some())
                    .map(|a| (0..ns).map(|n| m.prob(s, a, n) * u.values[n]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                (m.reward[s] + m.discount * best - u.values[s]).abs()
            })
            .fold(0.0, f64::max);
        let bound = eps * (1.0 - m.discount) / m.discount;
        worst = worst.max(residual / bound);
        ensure(residual < bound, || {
            format!("MDP {i}: residual {residual} >= {bound}")
        })?;
    }
    within_budget(t0.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "10 geometric cases, 20 random MDPs, worst residual/bound {worst:.3}"
    ))
}

/// Every depth-`d` plan over `a` actions and `o` observations.
fn all_plans(d: usize, a: usize, o: usize) -> Vec<ConditionalPlan> {
    if d == 1 {
        return (0..a).map(ConditionalPlan::leaf).collect();
    }
    let subs = all_plans(d - 1, a, o);
    let mut choices: Vec<Vec<ConditionalPlan>> = vec![Vec::new()];
    for _ in 0..o {
        choices = choices
            .into_iter()
            .flat_map(|c| {
                subs.iter().map(move |s| {
                    let mut c = c.clone();
                    c.push(s.clone());
                    c
                })
            })
            .collect();
    }
    (0..a)
        .flat_map(|action| {
            choices.iter().map(move |subplans| ConditionalPlan {
                action,
                subplans: subplans.clone(),
            })
        })
        .collect()
}

fn plan_alpha(p: &Pomdp, plan: &ConditionalPlan) -> Vec<f64> {
    let ns = p.num_states();
    if plan.subplans.is_empty() {
        return p.base.reward.clone();
    }
    let subs: Vec<Vec<f64>> = plan.subplans.iter().map(|c| plan_alpha(p, c)).collect();
    (0..ns)
        .map(|s| {
            let future: f64 = (0..ns)
                .map(|n| {
                    p.base.prob(s, plan.action, n)
                        * (0..p.num_observations())
                            .map(|o| p.obs_prob(n, o) * subs[o][n])
                            .sum::<f64>()
                })
                .sum();
            p.base.reward[s] + p.base.discount * future
        })
        .collect()
}

fn surface(alphas: &[Vec<f64>], b: f64) -> f64 {
    alphas
        .iter()
        .map(|a| (1.0 - b) * a[0] + b * a[1])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn pruning_soundness() -> Result<String, String> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut kept_total = 0;
    let mut worst = 0f64;
    for i in 0..20 {
        let p = random_pomdp(&mut rng, 2, 2, 2);
        let kept: Vec<Vec<f64>> = pomdp_plan_iteration(&p, 2)
            .map_err(|e| e.to_string())?
            .vectors
            .into_iter()
            .map(|v| v.alpha)
            .collect();
        kept_total += kept.len();
        let all: Vec<Vec<f64>> = all_plans(2, 2, 2)
            .iter()
            .map(|pl| plan_alpha(&p, pl))
            .collect();
        for k in 0..=100 {
            let b = k as f64 / 100.0;
            let d = (surface(&kept, b) - surface(&all, b)).abs();
            worst = worst.max(d);
            ensure(d < 1e-9, || {
                format!("POMDP {i}: surfaces differ by {d} at b={b}")
            })?;
        }
    }
    within_budget(t0.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "20 POMDPs, {kept_total} of 160 plans kept, max gap {worst:.1e}"
    ))
}

fn nano_end_to_end() -> Result<String, String> {
    const HAND_VALUE: f64 = 0.5 * 0.9 * 0.9 * (1.0 - 0.1);
    const DETECT: usize = 0;
    const NONE: usize = 1;
    let t0 = Instant::now();
    let m = generate_nano(&nano_desk_preset()).map_err(|e| e.to_string())?;
    let full = lifted_exhaustive(&m, 3, false).map_err(|e| e.to_string())?;
    let peak = lifted_exhaustive(&m, 3, true).map_err(|e| e.to_string())?;
    ensure((full.value - HAND_VALUE).abs() < 1e-9, || {
        format!("value {} vs hand {HAND_VALUE}", full.value)
    })?;
    ensure((peak.value - HAND_VALUE).abs() < 1e-9, || {
        format!("peak value {} vs hand {HAND_VALUE}", peak.value)
    })?;

    // sensors: the whole partition releases at the first step
    for sol in [&full, &peak] {
        let sensors = &sol.policy.components[0];
        ensure(sensors.iter().all(|pa| pa.plan.action == RELEASE), || {
            "a sensor withholds its release".into()
        })?;
        let bots = &sol.policy.components[1];
        ensure(
            bots.iter()
                .all(|pa| pa.plan.after(DETECT).action == RELEASE),
            || "a bot ignores the message".into(),
        )?;
    }
    // with one shared plan the bots must also hold back without the message
    let bot = &peak.policy.components[1][0];
    ensure(
        bot.count == 3 && bot.plan.action == NOOP && bot.plan.after(NONE).action == NOOP,
        || format!("peak bot plan {:?}", bot.plan),
    )?;
    within_budget(t0.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "value {:.6} (hand {HAND_VALUE:.6}), peak-only {:.6}",
        full.value, peak.value
    ))
}

fn blowup_demonstration() -> Result<String, String> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rows = Vec::new();
    for n in 2..=6u64 {
        let shape = PartitionShape {
            size: n,
            actions: 1,
            observations: 2,
        };
        let l = random_lifted(&mut rng, 1, &[shape]).map_err(|e| e.to_string())?;
        let g = ground(&l, CAP).map_err(|e| e.to_string())?;
        let ground_keys = g.sensor[0].len() as u64;
        let lifted_keys = l.sensor[0].len() as u64;
        ensure(ground_keys == 2u64.pow(n as u32), || {
            format!("N={n}: {ground_keys} ground keys")
        })?;
        ensure(lifted_keys == n + 1, || {
            format!("N={n}: {lifted_keys} lifted keys")
        })?;
        ensure(
            ground_key_count(&g, JointKind::Observations) == BigUint::from(ground_keys),
            || format!("N={n}: ground count formula"),
        )?;
        ensure(
            lifted_key_count(&l, JointKind::Observations) == BigUint::from(lifted_keys),
            || format!("N={n}: lifted count formula"),
        )?;
        let p = SizeParams::from_lifted(&l).map_err(|e| e.to_string())?;
        ensure(size_report(&p).log2_omega_ground == n as f64, || {
            format!("N={n}: log2 bound")
        })?;
        rows.push(format!("{n}:{ground_keys}/{lifted_keys}"));
    }
    within_budget(t0.elapsed(), Duration::from_secs(1))?;
    Ok(format!("N:ground/lifted {}", rows.join(" ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 7] = [
        ("size reproduction", size_reproduction),
        ("histogram counting", histogram_counting),
        ("lifted/ground value equivalence", lifted_ground_equivalence),
        ("MDP solver correctness", mdp_correctness),
        ("POMDP pruning soundness", pruning_soundness),
        ("nano end-to-end", nano_end_to_end),
        ("worst-case blowup", blowup_demonstration),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
