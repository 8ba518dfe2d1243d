//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.

mod common;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use bspf::geometry2d::{self, convex_hull, split_polygon, ConvexPolygon2D, DirectedCutLine2D, Point2};
use bspf::inference::{leaf_posterior, sample_leaf_mean, sample_sigma2, sigma2_posterior, LeafStats};
use bspf::process::{
    calibrate_rate_scale, restrict, simulate, BoxDomain, CutMode, FullPartition, HullPartition, PartitionState,
};
use bspf::stats::{chi_square_two_sample, ks_one_sample, ks_two_sample};
use bspf::tree::{BspTree, DimensionPair, HyperplaneCut};
use bspf::Features;
use common::{brute_force_hull, induced_key, log_sum_exp, oracle_leaf_log_ml, random_convex_polygon, simpson, ThetaCdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P_MIN: f64 = 0.01;

/// Written to the raw stderr handle so the line shows up without `--nocapture`.
fn report(n: usize, pass: bool, detail: &str) {
    use std::io::Write;
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn sorted(mut v: Vec<Point2>) -> Vec<Point2> {
    v.sort_by(|p, q| p.a.total_cmp(&q.a).then(p.b.total_cmp(&q.b)));
    v
}

#[test]
fn criterion_1_geometry_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    let mut hull_mismatch = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..=64);
        let pts: Vec<Point2> = if case % 4 == 0 {
            // lattice points exercise collinear and duplicate inputs
            (0..n)
                .map(|_| Point2::new(rng.random_range(0..6) as f64 / 5.0, rng.random_range(0..6) as f64 / 5.0))
                .collect()
        } else {
            common::random_points(&mut rng, n)
        };
        let got = sorted(convex_hull(&pts).unwrap().vertices().to_vec());
        let mut want = sorted(brute_force_hull(&pts));
        if want.is_empty() {
            want.push(pts[0]);
        }
        let same = got.len() == want.len() && got.iter().zip(&want).all(|(p, q)| p.dist(q) < 1e-12);
        if !same {
            hull_mismatch += 1;
        }
    }

    let mut worst_area: f64 = 0.0;
    for _ in 0..10_000 {
        let poly = random_convex_polygon(&mut rng);
        let cut = geometry2d::sample_cut(&poly, &mut rng).unwrap();
        let (l, r) = match split_polygon(&poly, &cut) {
            Ok(parts) => parts,
            Err(_) => continue,
        };
        let shoelace = |v: &[Point2]| {
            let n = v.len();
            0.5 * (0..n).map(|i| v[i].a * v[(i + 1) % n].b - v[(i + 1) % n].a * v[i].b).sum::<f64>().abs()
        };
        let parent = shoelace(poly.vertices());
        let rel = (shoelace(l.vertices()) + shoelace(r.vertices()) - parent).abs() / parent;
        worst_area = worst_area.max(rel);
    }

    let mut worst_cauchy: f64 = 0.0;
    for _ in 0..100 {
        let poly = random_convex_polygon(&mut rng);
        let integral = simpson(|t| poly.projection(t).length(), 0.0, PI, 20_000);
        worst_cauchy = worst_cauchy.max((integral - poly.perimeter()).abs() / poly.perimeter());
    }

    let secs = start.elapsed().as_secs_f64();
    let pass = hull_mismatch == 0 && worst_area < 1e-9 && worst_cauchy < 1e-4 && secs < 60.0;
    report(
        1,
        pass,
        &format!("hull mismatches {hull_mismatch}/1000, split area rel err {worst_area:.2e}, Cauchy rel err {worst_cauchy:.2e}, {secs:.1}s"),
    );
    assert!(pass);
}

fn pair_features(rng: &mut ChaCha8Rng, n: usize, scales: &[f64]) -> Features {
    let d = scales.len();
    let rows = (0..n * d).map(|i| rng.random::<f64>() * scales[i % d]).collect();
    Features::from_rows(n, d, rows).unwrap()
}

/// Draws (leaf index, pair) pairs through the thinned proposal.
fn thinned_picks(part: &HullPartition<'_>, draws: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, DimensionPair)> {
    let mut out = Vec::with_capacity(draws);
    while out.len() < draws {
        let mut p = part.clone();
        if let Some(cut) = p.propose(0.0, rng).unwrap() {
            let li = part.leaves().iter().position(|l| l.node() == cut.leaf_id).unwrap();
            out.push((li, cut.dims));
        }
    }
    out
}

#[test]
fn criterion_2_cut_laws() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let draws = 100_000;

    let mut polys = vec![ConvexPolygon2D::rectangle(0.0, 1.0, 0.0, 1.0)];
    polys.extend((0..5).map(|_| random_convex_polygon(&mut rng)));
    let mut min_p: f64 = 1.0;
    for poly in &polys {
        let oracle = ThetaCdf::new(poly, 10_000);
        let thetas: Vec<f64> = (0..draws).map(|_| geometry2d::sample_cut_direction(poly, &mut rng).unwrap()).collect();
        min_p = min_p.min(ks_one_sample(&thetas, |t| oracle.eval(t)).p_value);
    }

    // pair frequencies on a single 3-D leaf with unequal pair perimeters
    let x = pair_features(&mut rng, 40, &[1.0, 0.5, 0.2]);
    let part = HullPartition::new(&x, CutMode::Bsp).unwrap();
    let m = part.exact_measures(0);
    let total: f64 = m.iter().sum();
    let mut pair_err: f64 = 0.0;
    let exact_picks: Vec<usize> = (0..draws).map(|_| part.pick_leaf_and_component(&mut rng).unwrap().1).collect();
    let thinned: Vec<usize> = thinned_picks(&part, draws, &mut rng)
        .into_iter()
        .map(|(_, p)| (0..3).find(|&c| part.pair(c) == p).unwrap())
        .collect();
    for picks in [&exact_picks, &thinned] {
        for (c, mc) in m.iter().enumerate() {
            let f = picks.iter().filter(|&&k| k == c).count() as f64 / draws as f64;
            pair_err = pair_err.max((f - mc / total).abs());
        }
    }

    // leaf frequencies on a two-leaf partition
    let pts = [
        (0.0, 0.0), (0.7, 0.0), (0.0, 0.7), (0.7, 0.7), (0.3, 0.4),
        (0.8, 0.8), (1.0, 0.8), (0.8, 1.0), (1.0, 1.0),
    ];
    let x2 = Features::from_row_vecs(&pts.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap();
    let mut two = HullPartition::new(&x2, CutMode::Bsp).unwrap();
    let line = DirectedCutLine2D::at_position(PI, -0.75).unwrap();
    two.apply_cut(HyperplaneCut { leaf_id: 0, dims: DimensionPair::new(0, 1).unwrap(), line, time: 0.1 }).unwrap();
    let w: Vec<f64> = (0..2).map(|li| two.exact_measures(li).iter().sum()).collect();
    let want0 = w[0] / (w[0] + w[1]);
    let exact0 = (0..draws).filter(|_| two.pick_leaf_and_component(&mut rng).unwrap().0 == 0).count() as f64 / draws as f64;
    let thin0 = thinned_picks(&two, draws, &mut rng).iter().filter(|p| p.0 == 0).count() as f64 / draws as f64;
    let leaf_err = (exact0 - want0).abs().max((thin0 - want0).abs());

    let secs = start.elapsed().as_secs_f64();
    let pass = min_p > P_MIN && pair_err <= 0.01 && leaf_err <= 0.01 && secs < 120.0;
    report(
        2,
        pass,
        &format!("min theta KS p {min_p:.3}, pair freq err {pair_err:.4}, leaf freq err {leaf_err:.4} (target {want0:.3}), {secs:.1}s"),
    );
    assert!(pass);
}

fn first_time(t: &BspTree) -> Option<f64> {
    t.cuts().map(|c| c.time).min_by(f64::total_cmp)
}

#[test]
fn criterion_3_restriction() {
    let start = Instant::now();
    let sims = 20_000;
    let budget = 0.7;
    let big = BoxDomain::unit(3);
    let sub = BoxDomain::cube(3, 0.5);
    let rate_scale = calibrate_rate_scale(12.0, 0.25).unwrap();

    let run = |domain: &BoxDomain, seed: u64| -> Vec<BspTree> {
        use rayon::prelude::*;
        (0..sims)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64);
                let p = FullPartition::new(domain.clone(), CutMode::Bsp).unwrap();
                simulate(p, budget, rate_scale, &mut rng).unwrap().into_tree()
            })
            .collect()
    };
    let restricted: Vec<BspTree> = run(&big, 303).iter().map(|t| restrict(t, &big, &sub).unwrap()).collect();
    let direct = run(&sub, 304);

    let hist = |ts: &[BspTree]| {
        let mut h = vec![0u64; 16];
        for t in ts {
            h[t.n_cuts().min(15)] += 1;
        }
        h
    };
    let chi = chi_square_two_sample(&hist(&restricted), &hist(&direct), 5.0);
    let ta: Vec<f64> = restricted.iter().filter_map(first_time).collect();
    let tb: Vec<f64> = direct.iter().filter_map(first_time).collect();
    let ks = ks_two_sample(&ta, &tb);
    let mean = |ts: &[BspTree]| ts.iter().map(|t| t.n_cuts() as f64).sum::<f64>() / ts.len() as f64;

    let secs = start.elapsed().as_secs_f64();
    let pass = chi.p_value > P_MIN && ks.p_value > P_MIN && secs < 300.0;
    report(
        3,
        pass,
        &format!(
            "cut-count chi-square p {:.3}, first-cut KS p {:.3}, mean cuts {:.3} vs {:.3}, {secs:.1}s",
            chi.p_value,
            ks.p_value,
            mean(&restricted),
            mean(&direct)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_hull_full_equivalence() {
    use rayon::prelude::*;
    let start = Instant::now();
    let sims = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let x = pair_features(&mut rng, 30, &[1.0, 1.0, 1.0]);
    let rate_scale = 1.0;
    let budget = 0.12;

    let full: Vec<String> = (0..sims)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(405);
            rng.set_stream(s as u64);
            let p = FullPartition::new(BoxDomain::unit(3), CutMode::Bsp).unwrap();
            induced_key(&simulate(p, budget, rate_scale, &mut rng).unwrap().into_tree(), &x)
        })
        .collect();
    let hull: Vec<String> = (0..sims)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(406);
            rng.set_stream(s as u64);
            let p = HullPartition::new(&x, CutMode::Bsp).unwrap();
            induced_key(&simulate(p, budget, rate_scale, &mut rng).unwrap().into_tree(), &x)
        })
        .collect();

    let mut keys: HashMap<&str, (u64, u64)> = HashMap::new();
    for k in &full {
        keys.entry(k).or_default().0 += 1;
    }
    for k in &hull {
        keys.entry(k).or_default().1 += 1;
    }
    let mut cells: Vec<(u64, u64)> = keys.into_values().collect();
    cells.sort();
    let (a, b): (Vec<u64>, Vec<u64>) = cells.iter().copied().unzip();
    let chi = chi_square_two_sample(&a, &b, 5.0);
    let single = full.iter().filter(|k| !k.contains('|')).count() as f64 / sims as f64;

    // coarser view with better power: the multiset of block sizes
    let shape_of = |k: &str| {
        let mut s: Vec<usize> = k.split('|').map(|b| b.split(',').count()).collect();
        s.sort_unstable();
        format!("{s:?}")
    };
    let mut shapes: HashMap<String, (u64, u64)> = HashMap::new();
    for k in &full {
        shapes.entry(shape_of(k)).or_default().0 += 1;
    }
    for k in &hull {
        shapes.entry(shape_of(k)).or_default().1 += 1;
    }
    let (sa, sb): (Vec<u64>, Vec<u64>) = shapes.into_values().unzip();
    let chi_shape = chi_square_two_sample(&sa, &sb, 5.0);

    let secs = start.elapsed().as_secs_f64();
    let pass = chi.p_value > P_MIN && chi_shape.p_value > P_MIN && secs < 300.0;
    report(
        4,
        pass,
        &format!(
            "partition chi-square p {:.3} over {} cells, block-size chi-square p {:.3}, P(single leaf) {single:.3}, {secs:.1}s",
            chi.p_value,
            a.len(),
            chi_shape.p_value
        ),
    );
    assert!(pass);
}

/// CDF on a log grid of a density known up to a constant.
fn tabulated_cdf(log_density: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> impl Fn(f64) -> f64 {
    let h = (hi - lo) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let logs: Vec<f64> = grid.iter().map(|&g| log_density(g)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let mut cdf = vec![0.0];
    for i in 0..n {
        let c = cdf[i] + 0.5 * h * (dens[i] + dens[i + 1]);
        cdf.push(c);
    }
    let total = cdf[n];
    move |x: f64| {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let i = ((x - lo) / h).floor() as usize;
        let w = (x - grid[i]) / h;
        // trapezoid on the partial cell
        let part = h * w * (dens[i] + 0.5 * w * (dens[i + 1] - dens[i]));
        (cdf[i] + part) / total
    }
}

#[test]
fn criterion_5_conjugacy() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let draws = 100_000;

    let (ess, n, lambda) = (50.0, 100usize, 0.2215);
    let (shape, scale) = sigma2_posterior(ess, n, lambda);
    let s2: Vec<f64> = (0..draws).map(|_| sample_sigma2(ess, n, lambda, &mut rng)).collect();
    // density of log sigma^2 from the inverse-gamma kernel
    let ig_cdf = tabulated_cdf(|l: f64| -shape * l - scale * (-l).exp(), -3.0, 1.5, 200_000);
    let logs: Vec<f64> = s2.iter().map(|v| v.ln()).collect();
    let ks_sigma = ks_one_sample(&logs, &ig_cdf);

    let data: Vec<f64> = (0..10).map(|i| 0.3 * (i as f64 - 4.0)).collect();
    let stats = LeafStats::from_values(&data);
    let (sigma2, sigma_mu) = (0.7, 0.3);
    let mus: Vec<f64> = (0..draws).map(|_| sample_leaf_mean(stats, sigma2, sigma_mu, &mut rng)).collect();
    let log_post = |mu: f64| {
        -mu * mu / (2.0 * sigma_mu * sigma_mu) - data.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / (2.0 * sigma2)
    };
    let mu_cdf = tabulated_cdf(log_post, -2.0, 2.0, 200_000);
    let ks_mu = ks_one_sample(&mus, &mu_cdf);
    let post = leaf_posterior(stats, sigma2, sigma_mu);

    let secs = start.elapsed().as_secs_f64();
    let pass = ks_sigma.p_value > P_MIN && ks_mu.p_value > P_MIN && secs < 60.0;
    report(
        5,
        pass,
        &format!(
            "sigma2 KS p {:.3}, leaf mean KS p {:.3} (posterior mean {:.4}), {secs:.1}s",
            ks_sigma.p_value, ks_mu.p_value, post.mean
        ),
    );
    assert!(pass);
}

/// Three tight clusters with distinct label levels.
fn cluster_data(rng: &mut ChaCha8Rng) -> (Features, Vec<f64>) {
    let centers = [(0.15, 0.2, -1.0), (0.5, 0.85, 0.1), (0.85, 0.25, 0.4)];
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..30 {
        let (a, b, level) = centers[i % 3];
        rows.push(vec![a + 0.08 * (rng.random::<f64>() - 0.5), b + 0.08 * (rng.random::<f64>() - 0.5)]);
        y.push(level + 0.8 * (rng.random::<f64>() - 0.5));
    }
    (Features::from_row_vecs(&rows).unwrap(), y)
}

#[test]
fn criterion_6_small_posterior() {
    use bspf::inference::{Sampler, SamplerConfig};
    use rayon::prelude::*;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (x, y) = cluster_data(&mut rng);
    let cfg = SamplerConfig {
        trees: 1,
        budget: 0.35,
        particles: 10,
        segments: 3,
        iterations: 20_000,
        seed: 607,
        ..SamplerConfig::default()
    };
    let burnin = 1000;
    let mut sampler = Sampler::new(&x, &y, cfg.clone()).unwrap();
    let z = sampler.standardized_labels().to_vec();
    let rate_scale = sampler.rate_scale();
    let (sigma_mu, lambda) = (sampler.state().forest.sigma_mu, sampler.state().forest.lambda_ig);

    let mut chain: HashMap<String, f64> = HashMap::new();
    let mut cuts = 0.0;
    for it in 0..cfg.iterations {
        sampler.step().unwrap();
        if it >= burnin {
            let tree = &sampler.state().forest.trees[0];
            cuts += tree.n_cuts() as f64;
            *chain.entry(induced_key(tree, &x)).or_default() += 1.0;
        }
    }
    let kept = (cfg.iterations - burnin) as f64;
    chain.values_mut().for_each(|v| *v /= kept);

    // prior over induced partitions by forward simulation
    let prior_sims = 400_000;
    let prior_keys: Vec<String> = (0..prior_sims)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(608);
            rng.set_stream(s as u64);
            let p = HullPartition::new(&x, CutMode::Bsp).unwrap();
            induced_key(&simulate(p, cfg.budget, rate_scale, &mut rng).unwrap().into_tree(), &x)
        })
        .collect();
    let mut prior: HashMap<String, f64> = HashMap::new();
    for k in prior_keys {
        *prior.entry(k).or_default() += 1.0;
    }

    // marginal likelihood of each partition with sigma^2 integrated out
    let shape = 1.5;
    let log_ig = |s2: f64| shape * lambda.ln() - statrs::function::gamma::ln_gamma(shape) - (shape + 1.0) * s2.ln() - lambda / s2;
    let grid: Vec<f64> = (0..6000).map(|i| -14.0 + i as f64 * 0.004).collect();
    let v0 = sigma_mu * sigma_mu;
    let mut log_post: Vec<(String, f64)> = prior
        .iter()
        .map(|(k, &count)| {
            let blocks: Vec<Vec<f64>> = k
                .split('|')
                .map(|b| b.split(',').map(|i| z[i.parse::<usize>().unwrap()]).collect())
                .collect();
            let terms: Vec<f64> = grid
                .iter()
                .map(|&u| {
                    let s2 = u.exp();
                    blocks.iter().map(|b| oracle_leaf_log_ml(b, s2, v0)).sum::<f64>() + log_ig(s2) + u
                })
                .collect();
            (k.clone(), count.ln() + log_sum_exp(&terms))
        })
        .collect();
    let norm = log_sum_exp(&log_post.iter().map(|p| p.1).collect::<Vec<_>>());
    log_post.iter_mut().for_each(|p| p.1 = (p.1 - norm).exp());
    let oracle: HashMap<String, f64> = log_post.into_iter().collect();

    let mut tv = 0.0;
    for (k, p) in &oracle {
        tv += (p - chain.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, q) in &chain {
        if !oracle.contains_key(k) {
            tv += q;
        }
    }
    tv *= 0.5;
    let top = oracle.values().cloned().fold(0.0, f64::max);

    let secs = start.elapsed().as_secs_f64();
    let pass = tv <= 0.05 && secs < 600.0;
    report(
        6,
        pass,
        &format!(
            "posterior TV {tv:.4} over {} partitions (top oracle mass {top:.3}, chain mean cuts {:.2}), {secs:.1}s",
            oracle.len(),
            cuts / kept
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_friedman() {
    use bspf::bench::{dimension_usage, friedman_generate, partial_dependence};
    use bspf::inference::{gibbs_run, SamplerConfig};
    let start = Instant::now();
    let (train, f_train) = friedman_generate(300, 10, 1.0, 700).unwrap();
    let (test, f_test) = friedman_generate(200, 10, 1.0, 701).unwrap();
    let cfg = SamplerConfig {
        trees: 50,
        budget: 0.7,
        iterations: 500,
        seed: 702,
        ..SamplerConfig::default()
    };
    let out = gibbs_run(&train.x, &train.y, cfg.clone()).unwrap();
    let fit = out.samples.predict_mean(&train.x);
    let corr = bspf::stats::pearson(&fit, &f_train);
    let covered = (0..test.n())
        .filter(|&i| {
            let (lo, hi) = out.samples.interval(test.x.row(i), 0.05, 0.95);
            lo <= f_test[i] && f_test[i] <= hi
        })
        .count() as f64
        / test.n() as f64;

    let pdp: Vec<f64> = (0..5)
        .map(|k| partial_dependence(&out.samples.forests, &train.x, k, 11).unwrap().range())
        .collect();
    let noise_pdp = (5..10)
        .map(|k| partial_dependence(&out.samples.forests, &train.x, k, 11).unwrap().range())
        .fold(0.0, f64::max);
    let slope4 = partial_dependence(&out.samples.forests, &train.x, 3, 11).unwrap().slope();

    let small = gibbs_run(&train.x, &train.y, SamplerConfig { trees: 10, seed: 703, ..cfg }).unwrap();
    let usage = dimension_usage(&small.samples.forests, 10);
    let relevant: f64 = usage[..5].iter().sum();

    let secs = start.elapsed().as_secs_f64();
    let pdp_ok = noise_pdp < 0.2 * pdp[3] && (slope4 - 10.0).abs() <= 3.0;
    let fit_ok = corr > 0.95 && covered >= 0.8 && pdp_ok;
    let pass = fit_ok && relevant > 0.7 && secs < 1800.0;
    report(
        7,
        pass,
        &format!(
            "train corr {corr:.4}, 90% coverage {covered:.3}, usage on x1-x5 {relevant:.3} (m=10), \
             PDP ranges x1-x5 {pdp:.2?} vs max noise {noise_pdp:.2}, x4 slope {slope4:.2}, {secs:.1}s"
        ),
    );
    // the usage share is reported but not gated; see README
    assert!(fit_ok);
}

#[test]
fn criterion_8_budget_sweep() {
    use bspf::bench::experiment::summarize_sweep;
    use bspf::bench::{budget_sweep, friedman_generate, RmaeVariant, DEFAULT_BUDGETS};
    use bspf::inference::SamplerConfig;
    let start = Instant::now();
    let (ds, _) = friedman_generate(300, 10, 1.0, 800).unwrap();
    let cfg = SamplerConfig {
        trees: 50,
        iterations: 100,
        seed: 801,
        ..SamplerConfig::default()
    };
    let rows = budget_sweep(&ds, &DEFAULT_BUDGETS, 2, &cfg, RmaeVariant::SqrtMae).unwrap();
    assert_eq!(rows.len(), DEFAULT_BUDGETS.len() * 2 * 2);
    let summary = summarize_sweep(&rows);
    let get = |b: f64, m: CutMode| summary.iter().find(|s| s.budget == b && s.mode == m).unwrap();

    let mut in_band = 0;
    let mut fewer_cuts = 0;
    let mut better = 0;
    let mut table = Vec::new();
    for &b in &DEFAULT_BUDGETS {
        let (bsp, axis) = (get(b, CutMode::Bsp), get(b, CutMode::AxisAligned));
        in_band += (3.0..=6.0).contains(&bsp.cuts_mean) as usize;
        fewer_cuts += (bsp.cuts_mean <= axis.cuts_mean) as usize;
        better += (bsp.rmae_mean <= axis.rmae_mean) as usize;
        table.push(format!(
            "{b}: cuts {:.1}/{:.1} rmae {:.3}/{:.3}",
            bsp.cuts_mean, axis.cuts_mean, bsp.rmae_mean, axis.rmae_mean
        ));
    }
    let n = DEFAULT_BUDGETS.len();
    let secs = start.elapsed().as_secs_f64();
    let pass = in_band == n && fewer_cuts == n && better >= 5 && secs < 3600.0;
    report(
        8,
        pass,
        &format!(
            "BSP cuts in [3,6] at {in_band}/{n}, BSP cuts <= axis at {fewer_cuts}/{n}, BSP RMAE <= axis at {better}/{n} \
             [bsp/axis {}], {secs:.1}s",
            table.join("; ")
        ),
    );
}

fn data_dir() -> std::path::PathBuf {
    std::env::var_os("BSPF_DATA_DIR")
        .map(Into::into)
        .unwrap_or_else(|| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

#[test]
fn criterion_9_datasets() {
    use bspf::bench::{cv_evaluate, ingest_csv, LabelColumn, RmaeVariant};
    use bspf::inference::SamplerConfig;
    let start = Instant::now();
    let dir = data_dir();
    let cfg = SamplerConfig {
        trees: 50,
        budget: 0.7,
        iterations: 200,
        seed: 900,
        ..SamplerConfig::default()
    };

    let mut notes = Vec::new();
    let mut gated_ok = true;
    for (name, target, tol) in [("servo", 0.23, 0.10), ("concrete", 3.07, 0.60)] {
        let path = dir.join(format!("{name}.csv"));
        if !path.exists() {
            gated_ok = false;
            notes.push(format!("{name}: data unavailable at {}", path.display()));
            continue;
        }
        let ds = ingest_csv(&path, &LabelColumn::Last, true).unwrap();
        let rep = cv_evaluate(&ds, 5, 10, &cfg, RmaeVariant::SqrtMae).unwrap();
        let ok = (rep.rmae - target).abs() <= tol;
        gated_ok &= ok;
        notes.push(format!("{name}: RMAE {:.3} +- {:.3} (target {target} +- {tol})", rep.rmae, rep.rmae_std));
    }

    let diamonds = dir.join("diamonds.csv");
    if diamonds.exists() {
        let ds = ingest_csv(&diamonds, &LabelColumn::Name("price".into()), true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(901);
        let idx = rand::seq::index::sample(&mut rng, ds.n(), 1000.min(ds.n())).into_vec();
        let sub = ds.subset(&idx);
        let run = |mode| cv_evaluate(&sub, 5, 1, &SamplerConfig { mode, ..cfg.clone() }, RmaeVariant::SqrtMae).unwrap();
        let (bsp, axis) = (run(CutMode::Bsp), run(CutMode::AxisAligned));
        let ok = bsp.rmae <= axis.rmae;
        gated_ok &= ok;
        notes.push(format!(
            "diamonds (1000-row subsample, T=200): BSP RMAE {:.3} vs axis {:.3}",
            bsp.rmae, axis.rmae
        ));
    } else {
        gated_ok = false;
        notes.push("diamonds: data unavailable".into());
    }

    let secs = start.elapsed().as_secs_f64();
    report(9, gated_ok, &format!("{}, {secs:.1}s", notes.join("; ")));
}
