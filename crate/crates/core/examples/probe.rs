// Temporary development probe: mini end-to-end pipeline to validate the
// replanning mechanism before pinning acceptance-scale configs.
use std::time::Instant;

use adaplan::bench;
use adaplan::datagen::{self};
use adaplan::diffuser::{self, DenoiserModel};
use adaplan::invdyn::{self, InvdynTrainConfig};
use adaplan::numerics::Rng;
use adaplan::planner::{DiffusionPlanner, PlannerConfig};
use adaplan::sim::EnvConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scale: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);

    let mut env = EnvConfig::default();
    env.traffic_count = 30;

    let horizon = 16usize;
    let k_steps = 100usize;
    let data_steps = (100_000 as f64 * scale) as usize;
    let diff_steps = (20_000 as f64 * scale) as usize;
    let diff_hidden = if scale < 0.3 { vec![256, 256] } else { vec![512, 512, 512] };
    let inv_steps = (3_000 as f64 * scale) as usize;
    let members = 5usize;

    println!("== scale {scale}: data {data_steps}, diffuser {diff_steps} steps, invdyn {inv_steps} steps");

    let t0 = Instant::now();
    let dataset = datagen::collect(&env, 0.1, data_steps, 9001).unwrap();
    let stats = datagen::norm_stats(&dataset).unwrap();
    println!(
        "dataset: {} steps, {} episodes, {:.1}% collision episodes [{:.0}s]",
        dataset.len(),
        dataset.episode_count(),
        100.0 * dataset.collision_rate(env.max_steps),
        t0.elapsed().as_secs_f64()
    );

    // inverse dynamics ensemble
    let t0 = Instant::now();
    let inv_cfg = InvdynTrainConfig {
        hidden: vec![256, 256],
        train_steps: inv_steps,
        batch_size: 256,
        learning_rate: 1e-3,
    };
    let ensemble = invdyn::train_ensemble(&dataset, &stats, members, 5001, &inv_cfg).unwrap();
    println!(
        "ensemble: train accuracy {:.1}% [{:.0}s]",
        100.0 * ensemble.accuracy(&dataset).unwrap(),
        t0.elapsed().as_secs_f64()
    );

    // diffusion planner
    let t0 = Instant::now();
    let schedule = diffuser::build_schedule(k_steps).unwrap();
    let mut rng = Rng::new(7001);
    let mut init_rng = rng.split(0);
    let mut data_rng = rng.split(1);
    let mut model =
        DenoiserModel::new(horizon, env.obs_dim(), &diff_hidden, 64, stats.clone(), &mut init_rng)
            .unwrap();
    let mut loss_curve = Vec::new();
    diffuser::train_denoiser(
        &mut model,
        &schedule,
        &dataset,
        diff_steps,
        32,
        1e-3,
        &mut data_rng,
        |step, loss| {
            if step % 100 == 0 {
                loss_curve.push(loss);
            }
        },
    )
    .unwrap();
    println!(
        "diffuser: loss first {:.3} mid {:.3} last {:.3} [{:.0}s]",
        loss_curve.first().unwrap(),
        loss_curve[loss_curve.len() / 2],
        loss_curve.last().unwrap(),
        t0.elapsed().as_secs_f64()
    );

    // moment check on sampled plans vs dataset windows (normalized space)
    let t0 = Instant::now();
    let n_plans = 128;
    let all = datagen::all_windows(&dataset, &stats, horizon);
    let wlen = horizon * env.obs_dim();
    let mut sample_rng = Rng::new(333);
    let mut meter = diffuser::NfeMeter::default();
    let mut model_mean = vec![0.0; wlen];
    let mut model_sq = vec![0.0; wlen];
    let mut max_abs: f64 = 0.0;
    for i in 0..n_plans {
        let w = &all[(i * 997) % all.len()];
        let obs = stats.denormalize(w.state(0, env.obs_dim()));
        let plan = diffuser::sample_plan(&model, &schedule, &obs, &mut sample_rng, &mut meter).unwrap();
        for (j, row) in plan.states.iter().enumerate() {
            for (d, &v) in stats.normalize(row).iter().enumerate() {
                let idx = j * env.obs_dim() + d;
                model_mean[idx] += v;
                model_sq[idx] += v * v;
                max_abs = max_abs.max(v.abs());
            }
        }
    }
    println!("max |normalized plan value| = {max_abs:.1}");
    let mut data_mean = vec![0.0; wlen];
    let mut data_sq = vec![0.0; wlen];
    for w in &all {
        for (idx, &v) in w.states.iter().enumerate() {
            data_mean[idx] += v;
            data_sq[idx] += v * v;
        }
    }
    let nd = all.len() as f64;
    let np = n_plans as f64;
    let mut worst_mean_gap = 0.0f64;
    let mut worst_std_gap = 0.0f64;
    let mut bad_cells = 0;
    let mut worst_list: Vec<(f64, usize, f64, f64, f64, f64)> = Vec::new();
    for idx in d_skip(env.obs_dim())..wlen {
        let dm = data_mean[idx] / nd;
        let ds = (data_sq[idx] / nd - dm * dm).max(0.0).sqrt();
        let mm = model_mean[idx] / np;
        let ms = (model_sq[idx] / np - mm * mm).max(0.0).sqrt();
        if ds < 0.05 {
            continue; // near-constant cell
        }
        let mean_gap = (mm - dm).abs() / ds.max(0.05);
        let std_gap = (ms - ds).abs() / ds.max(0.05);
        worst_mean_gap = worst_mean_gap.max(mean_gap);
        worst_std_gap = worst_std_gap.max(std_gap);
        if mean_gap > 0.2 || std_gap > 0.2 {
            bad_cells += 1;
        }
        worst_list.push((mean_gap.max(std_gap), idx, dm, mm, ds, ms));
    }
    worst_list.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!(
        "plan moments: worst mean gap {worst_mean_gap:.3} std gap {worst_std_gap:.3} bad cells {bad_cells}/{} [{:.0}s]",
        worst_list.len(),
        t0.elapsed().as_secs_f64()
    );
    for (gap, idx, dm, mm, ds, ms) in worst_list.iter().take(6) {
        let (row, dim) = (idx / env.obs_dim(), idx % env.obs_dim());
        println!(
            "  cell row {row} dim {dim} (slot {}, feat {}): gap {gap:.2} data {dm:.3}±{ds:.3} model {mm:.3}±{ms:.3}",
            dim / 5, dim % 5
        );
    }

    // calibrate epsilon on no-replan rollouts
    let plans = DiffusionPlanner { model: &model, schedule: &schedule };
    let t0 = Instant::now();
    let (eps, n) = bench::calibrate_epsilon(&env, &plans, &ensemble, 10, 50_000, 0.7).unwrap();
    println!("calibrated eps (70th pct of {n} gate entropies): {eps:.4} nats [{:.0}s]", t0.elapsed().as_secs_f64());

    // three-mode comparison on shared seeds
    let episodes = 15;
    let base_seed = 1000;
    for (label, pcfg) in [
        ("continuous", PlannerConfig::continuous()),
        ("adaptive", PlannerConfig::adaptive(eps)),
        ("no_replan", PlannerConfig::no_replan()),
    ] {
        let t0 = Instant::now();
        let (row, logs) =
            bench::evaluate(&env, &plans, &ensemble, &pcfg, episodes, base_seed, label).unwrap();
        let mean_plans: f64 =
            logs.iter().map(|l| l.plan_count as f64).sum::<f64>() / logs.len() as f64;
        println!
            ("{label:>11}: len {:>5.1}±{:>4.1} collisions {} reward {:>5.1} hs {:.3} savedNFE {:>5.1}% plans/ep {:.1} [{:.0}s]",
            row.mean_len, row.std_len, row.collisions, row.mean_reward,
            row.high_speed_reward, row.saved_nfe_pct, mean_plans,
            t0.elapsed().as_secs_f64()
        );
        let mut hist = [0usize; 5];
        let mut total = 0usize;
        let mut final_speeds = Vec::new();
        for log in &logs {
            for s in &log.steps {
                hist[s.action.id()] += 1;
                total += 1;
            }
            if log.collided() {
                final_speeds.push(log.steps.last().unwrap().speed_frac);
            }
        }
        let pct = |i: usize| 100.0 * hist[i] as f64 / total as f64;
        println!(
            "             actions: L {:.0}% I {:.0}% R {:.0}% F {:.0}% S {:.0}% | crash speed-fracs {:?}",
            pct(0), pct(1), pct(2), pct(3), pct(4),
            final_speeds.iter().map(|x| (x * 10.0).round() / 10.0).collect::<Vec<_>>()
        );
    }
}

fn d_skip(_d: usize) -> usize {
    0
}
