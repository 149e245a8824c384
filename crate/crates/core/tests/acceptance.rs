//! Acceptance criteria, one pass/fail line each. Runs as a plain binary so
//! the lines come out in order; exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use helpercap::blahut::oblivious_baseline;
use helpercap::format::num;
use helpercap::info::evaluate_policy;
use helpercap::optimizer::objective::{BranchModel, Workspace};
use helpercap::oracles::large_help_lower_bound;
use helpercap::seed::task_rng;
use helpercap::sim::{run_trials, typical, SimConfig, SimMode};
use helpercap::{
    brute_force_capacity, capacity, capacity_rate_split, sweep, CapacityResult, Channel,
    OptimOptions,
};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, title: &str, pass: bool, detail: String, start: Instant) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {} {title}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
}

fn h2(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

fn random_dist(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn random_useless(seed: u64) -> Channel {
    let mut rng = task_rng(seed, 1, 0);
    let (nx, ns, ny) = (rng.random_range(2..=3), rng.random_range(2..=3), rng.random_range(2..=3));
    let q_s = random_dist(&mut rng, ns);
    let per_state: Vec<Vec<f64>> = (0..ns).map(|_| random_dist(&mut rng, ny)).collect();
    Channel::new(q_s, vec![per_state; nx]).unwrap()
}

fn random_222(seed: u64, stream: u64) -> Channel {
    let mut rng = task_rng(seed, stream, 0);
    let q_s = random_dist(&mut rng, 2);
    let w = (0..2)
        .map(|_| (0..2).map(|_| random_dist(&mut rng, 2)).collect())
        .collect();
    Channel::new(q_s, w).unwrap()
}

/// `Y = X + S mod a`.
fn mod_channel(q_s: Vec<f64>) -> Channel {
    let a = q_s.len();
    let w = (0..a)
        .map(|x| {
            (0..a)
                .map(|s| (0..a).map(|y| f64::from(u8::from(y == (x + s) % a))).collect())
                .collect()
        })
        .collect();
    Channel::new(q_s, w).unwrap()
}

struct Case {
    label: String,
    ch: Channel,
    rhs: Vec<f64>,
}

/// I(U;Y) and I(U;S) from entropies, with Q entries as free variables.
fn mi_free(ch: &Channel, phi: &[usize], q: &[f64]) -> (f64, f64) {
    let (ns, ny, nu) = (ch.s_size(), ch.y_size(), phi.len());
    let mut pus = vec![0.0; nu * ns];
    let mut puy = vec![0.0; nu * ny];
    for s in 0..ns {
        for u in 0..nu {
            let p = ch.q_s()[s] * q[s * nu + u];
            pus[u * ns + s] = p;
            for y in 0..ny {
                puy[u * ny + y] += p * ch.w(phi[u], s, y);
            }
        }
    }
    let pu: Vec<f64> = (0..nu).map(|u| pus[u * ns..(u + 1) * ns].iter().sum()).collect();
    let py: Vec<f64> = (0..ny).map(|y| (0..nu).map(|u| puy[u * ny + y]).sum()).collect();
    let i_uy = h2(&pu) + h2(&py) - h2(&puy);
    // The S term is a cross entropy against the fixed Q_S, which is the
    // extension off the simplex that the library differentiates.
    let h_s: f64 = (0..nu * ns)
        .filter(|&k| pus[k] > 0.0)
        .map(|k| -pus[k] * ch.q_s()[k % ns].log2())
        .sum();
    let i_us = h2(&pu) + h_s - h2(&pus);
    (i_uy, i_us)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_helpercap"))
}

fn channel_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../channels").join(name)
}

fn cli_bytes(args: &[&str], dir: &Path, file: &str) -> Vec<u8> {
    let out = dir.join(file);
    let _ = std::fs::remove_file(&out);
    let status = bin()
        .args(args)
        .arg("--out")
        .arg(&out)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?}");
    std::fs::read(out).unwrap()
}

fn main() {
    let mut report = Report { failures: 0 };
    let opts = OptimOptions::default();
    let mut replay: Vec<(String, Channel, CapacityResult)> = Vec::new();

    // 1. Useless channels.
    let t = Instant::now();
    let useless: Vec<Case> = (0..5)
        .map(|i| Case {
            label: format!("useless#{i}"),
            ch: random_useless(100 + i),
            rhs: vec![0.0, 0.25, 0.8],
        })
        .collect();
    let mut worst: f64 = 0.0;
    for case in &useless {
        for &rh in &case.rhs {
            let res = capacity(&case.ch, rh, &opts).unwrap();
            worst = worst.max((res.c - rh).abs());
            replay.push((case.label.clone(), case.ch.clone(), res));
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    report.line(
        "1",
        "useless-channel exactness",
        worst <= 1e-3 && elapsed < 30.0,
        format!("max |c - rh| = {} over 15 cases, limit 1e-3; runtime target 30 s", num(worst)),
        t,
    );

    // 2. Modulo-additive channels.
    let t = Instant::now();
    let mods: Vec<Case> = [
        vec![0.5, 0.5],
        vec![0.89, 0.11],
        vec![1.0 / 3.0; 3],
        vec![0.7, 0.2, 0.1],
    ]
    .into_iter()
    .map(|q_s| {
        let h = h2(&q_s);
        Case {
            label: format!("mod{}{:?}", q_s.len(), q_s),
            ch: mod_channel(q_s),
            rhs: vec![0.0, 0.3, h],
        }
    })
    .collect();
    let mut worst: f64 = 0.0;
    for case in &mods {
        let a = case.ch.x_size() as f64;
        let h = h2(case.ch.q_s());
        for &rh in &case.rhs {
            let res = capacity(&case.ch, rh, &opts).unwrap();
            worst = worst.max((res.c - (a.log2() - h + rh)).abs());
            replay.push((case.label.clone(), case.ch.clone(), res));
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    report.line(
        "2",
        "modulo-additive exactness",
        worst <= 1e-2 && elapsed < 120.0,
        format!("max |c - (log2 A - H(S) + rh)| = {} over 12 cases, limit 1e-2", num(worst)),
        t,
    );

    // 4 first: its channels feed 3, 5 and 6.
    let t = Instant::now();
    let randoms: Vec<Case> = (0..20)
        .map(|i| Case {
            label: format!("random#{i}"),
            ch: random_222(200 + i, 4),
            rhs: vec![0.2, 0.6],
        })
        .collect();
    let (mut below, mut above): (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
    for case in &randoms {
        for &rh in &case.rhs {
            let res = capacity(&case.ch, rh, &opts).unwrap();
            let brute = brute_force_capacity(&case.ch, rh, 7, 3).unwrap();
            below = below.min(res.c - brute.c);
            above = above.max(res.c - brute.c);
            replay.push((case.label.clone(), case.ch.clone(), res));
            replay.push((format!("{} brute", case.label), case.ch.clone(), brute));
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    report.line(
        "4",
        "brute-force dominance",
        below >= -1e-6 && above <= 0.05 && elapsed < 600.0,
        format!(
            "c - brute in [{}, {}] over 40 cases, allowed [-1e-6, 0.05]",
            num(below),
            num(above)
        ),
        t,
    );

    // 3. Cross-path agreement.
    let t = Instant::now();
    let extra: Vec<Case> = (0..10)
        .map(|i| Case {
            label: format!("cross#{i}"),
            ch: random_222(300 + i, 3),
            rhs: vec![0.2, 0.6],
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    let mut count = 0;
    for case in useless.iter().chain(&mods).chain(&extra) {
        for &rh in &case.rhs {
            let env = capacity(&case.ch, rh, &opts).unwrap();
            let split = capacity_rate_split(&case.ch, rh, &opts).unwrap();
            let gap = (env.c - split.c).abs();
            if gap > worst {
                worst = gap;
                worst_at = format!(" at {} rh={}", case.label, num(rh));
            }
            count += 1;
            replay.push((format!("{} split", case.label), case.ch.clone(), split));
        }
    }
    report.line(
        "3",
        "cross-path agreement",
        worst <= 2e-2,
        format!("max |envelope - rate_split| = {}{worst_at} over {count} cases, limit 2e-2", num(worst)),
        t,
    );

    // 5. Monotone, concave, saturating sweeps.
    let t = Instant::now();
    let (mut mono, mut conc, mut sat): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut sweeps = 0;
    for case in useless.iter().chain(&mods).chain(&randoms) {
        let top = (case.ch.s_size() as f64).log2() + 0.5;
        let grid: Vec<f64> = (0..11).map(|i| top * i as f64 / 10.0).collect();
        let res = sweep(&case.ch, &grid, &opts).unwrap();
        let c: Vec<f64> = res.iter().map(|r| r.c).collect();
        for i in 1..c.len() {
            mono = mono.max(c[i - 1] - c[i]);
        }
        for i in 1..c.len() - 1 {
            conc = conc.max((c[i - 1] + c[i + 1]) / 2.0 - c[i]);
        }
        let h = h2(case.ch.q_s());
        let tail: Vec<f64> = res.iter().filter(|r| r.rh >= h).map(|r| r.c - r.rh).collect();
        if let (Some(lo), Some(hi)) = (
            tail.iter().copied().reduce(f64::min),
            tail.iter().copied().reduce(f64::max),
        ) {
            sat = sat.max(hi - lo);
        }
        sweeps += 1;
    }
    report.line(
        "5",
        "monotonicity and concavity",
        mono <= 1e-7 && conc <= 1e-6 && sat <= 1e-6,
        format!(
            "{sweeps} sweeps: worst decrease {}, worst concavity defect {}, saturation spread {}",
            num(mono),
            num(conc),
            num(sat)
        ),
        t,
    );

    // 6. Large-rate bound chain.
    let t = Instant::now();
    let (mut cap_margin, mut lb_margin): (f64, f64) = (f64::INFINITY, f64::INFINITY);
    for case in &randoms {
        let h = h2(case.ch.q_s());
        let rh = h + 0.2;
        let weaker = oblivious_baseline(&case.ch).unwrap() + (rh - h);
        let res = capacity(&case.ch, rh, &opts).unwrap();
        let lb = large_help_lower_bound(&case.ch, rh).unwrap();
        cap_margin = cap_margin.min(res.c - weaker);
        lb_margin = lb_margin.min(lb.bound.value - weaker);
        replay.push((format!("{} large", case.label), case.ch.clone(), res));
    }
    report.line(
        "6",
        "large-rate bound chain",
        cap_margin >= -1e-6 && lb_margin >= -1e-9,
        format!(
            "min c - weaker = {}, min bound - weaker = {} over 20 channels",
            num(cap_margin),
            num(lb_margin)
        ),
        t,
    );

    // 7. Gradients against central differences of an independent evaluator.
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let mut rng = task_rng(700, 7, i);
        let (nx, ns, ny) = (rng.random_range(2..=3), rng.random_range(2..=3), rng.random_range(2..=3));
        let q_s = random_dist(&mut rng, ns);
        let w = (0..nx)
            .map(|_| (0..ns).map(|_| random_dist(&mut rng, ny)).collect())
            .collect();
        let ch = Channel::new(q_s, w).unwrap();
        let nu = rng.random_range(2..=4);
        let phi: Vec<usize> = (0..nu).map(|_| rng.random_range(0..nx)).collect();
        let q: Vec<f64> = (0..ns).flat_map(|_| random_dist(&mut rng, nu)).collect();
        let model = BranchModel::new(&ch, &phi);
        let mut ws = Workspace::default();
        model.eval(&q, &mut ws);
        let (mut g_uy, mut g_us) = (vec![0.0; q.len()], vec![0.0; q.len()]);
        model.grad(&ws, &mut g_uy, &mut g_us);
        let h = 1e-5;
        let (mut fd_uy, mut fd_us) = (vec![0.0; q.len()], vec![0.0; q.len()]);
        for k in 0..q.len() {
            let (mut hi, mut lo) = (q.clone(), q.clone());
            hi[k] += h;
            lo[k] -= h;
            let (a, b) = (mi_free(&ch, &phi, &hi), mi_free(&ch, &phi, &lo));
            fd_uy[k] = (a.0 - b.0) / (2.0 * h);
            fd_us[k] = (a.1 - b.1) / (2.0 * h);
        }
        for (g, fd) in [(&g_uy, &fd_uy), (&g_us, &fd_us)] {
            let err = g.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = fd.iter().map(|b| b.abs()).fold(0.0, f64::max).max(1e-12);
            worst = worst.max(err / scale);
        }
    }
    report.line(
        "7",
        "gradient check",
        worst <= 1e-5,
        format!("max relative error {} over 100 points, limit 1e-5", num(worst)),
        t,
    );

    // 8. Replay of every returned policy.
    let t = Instant::now();
    let (mut err, mut slack): (f64, f64) = (0.0, f64::INFINITY);
    for (_, ch, res) in &replay {
        let mi = evaluate_policy(ch, &res.policy).unwrap();
        err = err.max((mi.objective(res.rh) - res.c).abs());
        slack = slack.min(res.rh - mi.i_us_given_v);
    }
    report.line(
        "8",
        "policy replay",
        err <= 1e-9 && slack >= -1e-9,
        format!(
            "{} results: max |replayed - c| = {}, min slack = {}",
            replay.len(),
            num(err),
            num(slack)
        ),
        t,
    );

    // 9. Simulator phase behavior.
    let t = Instant::now();
    let mod2 = mod_channel(vec![0.89, 0.11]);
    let mean_error = |n: usize, rate_r: f64| {
        let total: f64 = (0..5)
            .map(|seed| {
                let cfg = SimConfig {
                    n,
                    rate_r,
                    rate_rh: 0.1,
                    r0: 0.0,
                    epsilon: 0.46,
                    epsilon_decoder: 0.48,
                    trials: 500,
                    seed,
                    mode: SimMode::Ensemble,
                    ..SimConfig::new(vec![vec![0.5, 0.5]; 2], vec![0, 1])
                };
                run_trials(&mod2, &cfg).unwrap().error_rate
            })
            .sum();
        total / 5.0
    };
    let (a, b) = (mean_error(200, 0.3), mean_error(200, 0.7));
    let (short, long) = (mean_error(100, 0.3), mean_error(400, 0.3));
    let elapsed = t.elapsed().as_secs_f64();
    report.line(
        "9",
        "simulator phase behavior",
        a < 0.05 && b > 0.5 && long <= short && elapsed < 300.0,
        format!(
            "ensemble mode, eps 0.46/0.48: (a) {} < 0.05, (b) {} > 0.5, (c) n=400 {} <= n=100 {}",
            num(a),
            num(b),
            num(long),
            num(short)
        ),
        t,
    );

    // 10. Typicality law of large numbers.
    let t = Instant::now();
    let acceptance = |reference: &[Vec<f64>], stream: u64| {
        let flat: Vec<f64> = reference.iter().flatten().copied().collect();
        let nb = reference[0].len();
        let hits = (0..200u64)
            .filter(|&d| {
                let mut rng = task_rng(1000, stream, d);
                let (a, b): (Vec<usize>, Vec<usize>) = (0..1000)
                    .map(|_| {
                        let mut pick = rng.random::<f64>();
                        let mut k = flat.len() - 1;
                        for (j, &p) in flat.iter().enumerate() {
                            pick -= p;
                            if pick < 0.0 {
                                k = j;
                                break;
                            }
                        }
                        (k / nb, k % nb)
                    })
                    .unzip();
                typical(&a, &b, reference, 0.1).unwrap()
            })
            .count();
        hits as f64 / 200.0
    };
    let diagonal = acceptance(&[vec![0.5, 0.0], vec![0.0, 0.5]], 1);
    let uniform = acceptance(&[vec![0.25, 0.25], vec![0.25, 0.25]], 2);
    report.line(
        "10",
        "typicality LLN",
        diagonal > 0.9,
        format!(
            "acceptance {} on the noiseless binary joint (> 0.9); uniform 2x2 joint gives {} (not gated)",
            num(diagonal),
            num(uniform)
        ),
        t,
    );

    // 11. Reproducibility through the CLI.
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mod2_file = channel_file("mod2.toml");
    let asym = channel_file("asymmetric.toml");
    let m = mod2_file.to_str().unwrap();
    let commands: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            vec!["capacity", m, "--rh", "0.3", "--method", "all", "--seed", "3"],
            vec!["--jobs", "1"],
        ),
        (
            vec!["sweep", asym.to_str().unwrap(), "--rh-min", "0", "--rh-max", "1.5", "--steps", "11", "--seed", "3"],
            vec!["--jobs", "2"],
        ),
        (
            vec![
                "simulate", m, "--policy-from-capacity", "0.1", "--n", "200", "--rate-r", "0.3",
                "--rate-rh", "0.1", "--epsilon", "0.46", "--epsilon-decoder", "0.48", "--trials",
                "500", "--mode", "ensemble", "--seed", "42",
            ],
            vec!["--jobs", "1"],
        ),
    ];
    let identical = commands.iter().all(|(args, jobs)| {
        let first = cli_bytes(args, dir.path(), "a.out");
        let again = cli_bytes(args, dir.path(), "b.out");
        let mut serial = args.clone();
        serial.extend(jobs);
        let third = cli_bytes(&serial, dir.path(), "c.out");
        !first.is_empty() && first == again && first == third
    });
    report.line(
        "11",
        "reproducibility",
        identical,
        format!(
            "{} commands rerun with the same seed, with and without --jobs: {}",
            commands.len(),
            if identical { "byte-identical" } else { "outputs differ" }
        ),
        t,
    );

    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
