//! Scratch calibration harness for sandbox dynamics (not shipped behavior).

use pathwise_core::config::RewardConfig;
use pathwise_core::decimal::Dec;
use pathwise_core::sandbox::*;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "convergence".into());
    match which.as_str() {
        "convergence" => convergence(),
        "spearman" => spearman(),
        "format" => format_modes(),
        "sweep" => sweep_shape(),
        "gradient" => gradient_check(),
        _ => eprintln!("unknown mode"),
    }
}

fn convergence() {
    let t0 = Instant::now();
    let world = build_world(2024, 150, 2, 50).unwrap();
    let cfg = RewardConfig::default();
    let opts = TrainOptions {
        group_size: 8,
        updates: 200,
        samples_per_update: Some(8),
        step_size: 0.5,
        seed: 0,
        format_noise: 0.0,
        stop_at_accuracy: Some(0.9),
    };
    let seeds: Vec<u64> = (1..=10).collect();
    let variants = [
        (RewardVariant::PathCentric, cfg),
        (RewardVariant::BinaryOutcome, cfg),
    ];
    let result = compare_variants(&world, &variants, &seeds, 0.9, &opts);
    for row in &result.rows {
        println!("{},{},{:?}", row.variant, row.seed, row.steps_to_threshold);
    }
    for (v, m) in &result.medians {
        println!("median {v}: {m:?}");
    }
    let mut wins = 0;
    let mut ties = 0;
    for &s in &seeds {
        let p = result.rows.iter().find(|r| r.variant == "path_centric" && r.seed == s).unwrap();
        let b = result.rows.iter().find(|r| r.variant == "binary_outcome" && r.seed == s).unwrap();
        let pv = p.steps_to_threshold.map(|v| v as i64).unwrap_or(i64::MAX);
        let bv = b.steps_to_threshold.map(|v| v as i64).unwrap_or(i64::MAX);
        if pv < bv {
            wins += 1;
        } else if pv == bv {
            ties += 1;
        }
    }
    println!("path wins {wins}/10, ties {ties}; elapsed {:?}", t0.elapsed());
}

fn spearman() {
    let world = build_world(77, 150, 2, 50).unwrap();
    let cfg = RewardConfig::default();
    let policy = ToyPolicy::uniform(2);
    let retriever = world.retriever();
    let agent_cfg = pathwise_core::config::AgentConfig::default();
    let sampling = pathwise_core::runtime::SamplingParams::new();

    let mut soft_pairs = Vec::new();
    let mut binary_rewards = Vec::new();
    for (si, sample) in world.samples.iter().enumerate() {
        let bundle = world.bundle_for(&sample.id).unwrap();
        for g in 0..8 {
            let seed = split_seed(5, &[si as u64, g]);
            let mut ep = policy.episode(seed, 0.0);
            let trace =
                pathwise_core::runtime::run_episode(sample, &mut ep, &retriever, &agent_cfg, &sampling);
            let (r, correct) = episode_reward(RewardVariant::PathCentric, &trace, sample, &bundle, &cfg);
            let (rb, _) = episode_reward(RewardVariant::BinaryOutcome, &trace, sample, &bundle, &cfg);
            if !correct {
                let v = pathwise_core::evaluator::oracle_evaluate(&trace.trajectory, sample, &bundle);
                soft_pairs.push((r, v.effective_steps_ref as f64));
                binary_rewards.push(rb);
            }
        }
    }
    let n = soft_pairs.len();
    let coverage_counts: [usize; 3] = [
        soft_pairs.iter().filter(|(_, c)| *c == 0.0).count(),
        soft_pairs.iter().filter(|(_, c)| *c == 1.0).count(),
        soft_pairs.iter().filter(|(_, c)| *c == 2.0).count(),
    ];
    println!("incorrect: {n}; coverage dist {coverage_counts:?}");
    let rho = spearman_rho(
        &soft_pairs.iter().map(|p| p.0).collect::<Vec<_>>(),
        &soft_pairs.iter().map(|p| p.1).collect::<Vec<_>>(),
    );
    println!("spearman soft: {rho:.4}");
    let var = variance(&binary_rewards);
    println!("binary variance among incorrect: {var}");
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut r = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman_rho(a: &[f64], b: &[f64]) -> f64 {
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va.sqrt() * vb.sqrt())
}

fn format_modes() {
    let world = build_world(99, 150, 2, 50).unwrap();
    let mut soft_wins = 0;
    for seed in 1..=10u64 {
        let opts = TrainOptions {
            group_size: 8,
            updates: 20,
            samples_per_update: Some(8),
            step_size: 0.5,
            seed,
            format_noise: 0.35,
            stop_at_accuracy: None,
        };
        let mut cfg_soft = RewardConfig::default();
        cfg_soft.format_mode = pathwise_core::config::FormatMode::Soft;
        let mut cfg_strict = RewardConfig::default();
        cfg_strict.format_mode = pathwise_core::config::FormatMode::Strict;
        let soft = train(&world, RewardVariant::PathCentric, &cfg_soft, &opts);
        let strict = train(&world, RewardVariant::PathCentric, &cfg_strict, &opts);
        let ms: f64 = soft.curve.iter().map(|p| p.mean_reward).sum::<f64>() / soft.curve.len() as f64;
        let mt: f64 =
            strict.curve.iter().map(|p| p.mean_reward).sum::<f64>() / strict.curve.len() as f64;
        println!("seed {seed}: soft {ms:.4} strict {mt:.4} -> {}", if ms > mt { "soft" } else { "strict" });
        if ms > mt {
            soft_wins += 1;
        }
    }
    println!("soft wins {soft_wins}/10");
}

fn sweep_shape() {
    let t0 = Instant::now();
    let world = build_world(31, 150, 2, 50).unwrap();
    let cfg = RewardConfig::default();
    let opts = TrainOptions {
        group_size: 8,
        updates: 40,
        samples_per_update: Some(6),
        step_size: 0.5,
        seed: 0,
        format_noise: 0.0,
        stop_at_accuracy: None,
    };
    let grid: Vec<Dec> = ["0.0", "0.2", "0.3", "0.4", "0.8"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let seeds: Vec<u64> = (1..=10).collect();
    let rows = sweep(&world, SweepParam::LambdaP, &grid, &seeds, &cfg, &opts, 10);
    for r in &rows {
        println!(
            "lambda_p={} mean_acc={:.4} median_acc={:.4} per-seed={:?}",
            r.value,
            r.mean_accuracy,
            r.median_accuracy,
            r.per_seed_accuracy.iter().map(|a| (a * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }
    println!("elapsed {:?}", t0.elapsed());
}

fn gradient_check() {
    let t0 = Instant::now();
    let world = build_world(3, 4, 1, 1).unwrap();
    let mut policy = ToyPolicy::new(1, vec![ActionKind::NextHop, ActionKind::Answer]);
    policy.logits = vec![vec![0.3, -0.2], vec![0.1, 0.4]];
    let cfg = RewardConfig::default();
    let n = 100_000;
    let g = policy_gradient_estimate(&world, &policy, RewardVariant::PathCentric, &cfg, n, 123);

    let eps = 0.1;
    let mut fd = vec![vec![0.0; 2]; 2];
    for slot in 0..2 {
        for a in 0..2 {
            let mut plus = policy.clone();
            plus.logits[slot][a] += eps;
            let mut minus = policy.clone();
            minus.logits[slot][a] -= eps;
            let ep = expected_reward_mc(&world, &plus, RewardVariant::PathCentric, &cfg, n, 123);
            let em = expected_reward_mc(&world, &minus, RewardVariant::PathCentric, &cfg, n, 123);
            fd[slot][a] = (ep - em) / (2.0 * eps);
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for slot in 0..2 {
        for a in 0..2 {
            num += (g[slot][a] - fd[slot][a]).powi(2);
            den += fd[slot][a].powi(2);
        }
    }
    let rel = (num / den).sqrt();
    println!("score-fn {g:?}");
    println!("fd       {fd:?}");
    println!("relative error {rel:.4}; elapsed {:?}", t0.elapsed());
}
