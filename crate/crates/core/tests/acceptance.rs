//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report lines always reach stdout.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wmrmr::dataset::{generate_synthetic, stratified_kfold, train_test_split, SyntheticRecipe};
use wmrmr::metrics::{eta, kappa, roc_auc, Confusion};
use wmrmr::mrmr::incremental_rank;
use wmrmr::mutinfo::mutual_information;
use wmrmr::pca::pca_fit;
use wmrmr::pipeline::{default_alphas, emit_curves, evaluate_report, select_features};
use wmrmr::svm::{coarse_grid, cross_validated_accuracy, grid_search, train};
use wmrmr::{Class, Dataset, MiMatrix, MrmrConfig, PipelineConfig, SvmConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("eta arithmetic", c1_eta),
        ("mutual information oracle", c2_mutual_information),
        ("greedy fidelity", c3_greedy),
        ("redundancy suppression", c4_redundancy),
        ("svm soundness", c5_svm),
        ("metric oracles", c6_metrics),
        ("pca baseline", c7_pca),
        ("pipeline determinism and shape", c8_pipeline),
        ("peak before all features", c9_peak),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} {} {name} ({:.1?}): {}", i + 1, t.elapsed(), o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn c1_eta() -> Outcome {
    let t = Instant::now();
    // (a_test, kappa, auc, printed eta) for datasets A, A1, A2, B, B1, B2, B3
    let rows = [
        (0.9650, 0.929, 0.9615, 0.9518),
        (0.99, 0.98, 0.9918, 0.9873),
        (0.96, 0.918, 0.9708, 0.9496),
        (0.95, 0.897, 0.9466, 0.9312),
        (0.965, 0.929, 0.9619, 0.952),
        (0.945, 0.889, 0.9499, 0.928),
        (0.95, 0.898, 0.9481, 0.932),
    ];
    let worst = rows
        .iter()
        .map(|&(a, k, r, printed)| (eta::<f64>(a, k, r) - printed).abs())
        .fold(0.0, f64::max);
    let secs = t.elapsed();
    outcome(
        worst <= 5e-4 && secs < Duration::from_secs(1),
        format!("{} triples, max |eta - printed| = {worst:.2e}", rows.len()),
    )
}

fn entropy_oracle<K: std::hash::Hash + Eq>(xs: impl Iterator<Item = K>) -> f64 {
    let mut counts: HashMap<K, usize> = HashMap::new();
    let mut n = 0;
    for x in xs {
        *counts.entry(x).or_default() += 1;
        n += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

fn c2_mutual_information() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_err, mut min_mi) = (0.0f64, f64::INFINITY);
    let mut asymmetric = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..300);
        let (ka, kb) = (rng.random_range(1..8u32), rng.random_range(1..8u32));
        let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<u32> = (0..n)
            .map(|i| {
                // mix dependent and independent draws
                if rng.random_bool(0.5) {
                    a[i] % kb
                } else {
                    rng.random_range(0..kb)
                }
            })
            .collect();
        let mi: f64 = mutual_information(&a, &b).unwrap();
        let back: f64 = mutual_information(&b, &a).unwrap();
        let oracle = entropy_oracle(a.iter()) + entropy_oracle(b.iter())
            - entropy_oracle(a.iter().zip(&b));
        worst_err = worst_err.max((mi - oracle).abs());
        min_mi = min_mi.min(mi);
        asymmetric += usize::from(mi.to_bits() != back.to_bits());
    }
    outcome(
        worst_err <= 1e-10 && asymmetric == 0 && min_mi >= -1e-12,
        format!("200 tables, max |I - oracle| = {worst_err:.2e}, asymmetric pairs = {asymmetric}, min I = {min_mi:.2e}"),
    )
}

fn random_mi(rng: &mut ChaCha8Rng) -> MiMatrix<f64> {
    let n = rng.random_range(1..=12);
    let mut pair = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        pair[[i, i]] = rng.random_range(1.0..3.0);
        for j in 0..i {
            let v = rng.random_range(0.0..1.0);
            pair[[i, j]] = v;
            pair[[j, i]] = v;
        }
    }
    let rel = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    MiMatrix::from_parts(pair, rel).unwrap()
}

/// Brute-force greedy order: at every step evaluate the objective of every
/// remaining feature from scratch and take the first maximum.
fn brute_force_order(mi: &MiMatrix<f64>, objective: impl Fn(f64, f64) -> f64) -> Vec<usize> {
    let n = mi.n_features();
    let rel = mi.class_relevance();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|j| !chosen.contains(j)) {
            let score = if chosen.is_empty() {
                rel[j]
            } else {
                let red = chosen.iter().map(|&i| mi.pair(i, j)).sum::<f64>() / chosen.len() as f64;
                objective(rel[j], red)
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}

fn c3_greedy() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut step_mismatch, mut mid_mismatch, mut rel_mismatch, mut checked) = (0, 0, 0, 0);
    for _ in 0..50 {
        let mi = random_mi(&mut rng);
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let order = incremental_rank(&mi, &MrmrConfig::new(alpha).unwrap()).unwrap().order;
            let oracle = brute_force_order(&mi, |d, r| alpha * d - (1.0 - alpha) * r);
            // compare the choice at every step given the library's own prefix
            for m in 0..order.len() {
                let remaining: Vec<usize> = (0..mi.n_features()).filter(|j| !order[..m].contains(j)).collect();
                let score = |j: usize| {
                    if m == 0 {
                        mi.class_relevance()[j]
                    } else {
                        let red = order[..m].iter().map(|&i| mi.pair(i, j)).sum::<f64>() / m as f64;
                        alpha * mi.class_relevance()[j] - (1.0 - alpha) * red
                    }
                };
                let mut best = remaining[0];
                for &j in &remaining[1..] {
                    if score(j) > score(best) {
                        best = j;
                    }
                }
                step_mismatch += usize::from(best != order[m]);
                checked += 1;
            }
            step_mismatch += usize::from(order != oracle);
            if alpha == 0.5 {
                mid_mismatch += usize::from(order != brute_force_order(&mi, |d, r| d - r));
            }
            if alpha == 1.0 {
                let mut by_rel: Vec<usize> = (0..mi.n_features()).collect();
                by_rel.sort_by(|&a, &b| mi.class_relevance()[b].total_cmp(&mi.class_relevance()[a]).then(a.cmp(&b)));
                rel_mismatch += usize::from(order != by_rel);
            }
        }
    }
    let secs = t.elapsed();
    outcome(
        step_mismatch == 0 && mid_mismatch == 0 && rel_mismatch == 0 && secs < Duration::from_secs(10),
        format!(
            "{checked} steps, step mismatches = {step_mismatch}, alpha=0.5 vs unweighted = {mid_mismatch}, alpha=1 vs relevance sort = {rel_mismatch}"
        ),
    )
}

const DEMO_SEED: u64 = 7;

fn demo_data() -> Dataset<f64> {
    generate_synthetic(400, &SyntheticRecipe::redundancy_demo(), DEMO_SEED).unwrap()
}

fn c4_redundancy() -> Outcome {
    let t = Instant::now();
    let d = demo_data();
    let config = PipelineConfig::default();
    let report = select_features(&d, &default_alphas(), &config).unwrap();
    // columns: inf1, inf2, red1 (copy of inf1), red2 (copy of inf2), noise...
    let groups = [[0usize, 2], [1, 3]];

    let half = report.alpha_results.iter().find(|r| r.alpha == 0.5).unwrap();
    let pos = |f: usize| half.ranking.order.iter().position(|&x| x == f).unwrap();
    let informative_first = pos(0).max(pos(1)) < pos(2).min(pos(3));

    let f_star = &report.global_best.indices;
    let one_per_group = groups.iter().all(|g| g.iter().filter(|f| f_star.contains(f)).count() <= 1);

    let folds = stratified_kfold(&d, config.folds, config.seed).unwrap();
    let grid = coarse_grid();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut f_star_exhaustive = None;
    let mut sorted_f_star = f_star.clone();
    sorted_f_star.sort_unstable();
    for mask in 1u32..(1 << d.n_features()) {
        let subset: Vec<usize> = (0..d.n_features()).filter(|&j| mask >> j & 1 == 1).collect();
        let score = grid_search(&d, &subset, &grid, &folds).unwrap().j_score;
        if subset == sorted_f_star {
            f_star_exhaustive = Some(score);
        }
        if score > best.0 {
            best = (score, subset);
        }
    }
    let consistent = f_star_exhaustive == Some(report.global_best.score);
    let gap = best.0 - report.global_best.score;
    let secs = t.elapsed();
    outcome(
        informative_first && one_per_group && consistent && gap <= 0.01 && secs < Duration::from_secs(300),
        format!(
            "alpha=0.5 order {:?}, F* = {:?} J = {:.4}, exhaustive best {:?} J = {:.4}, gap = {gap:.4}",
            half.ranking.order, f_star, report.global_best.score, best.1, best.0
        ),
    )
}

fn c5_svm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut models, mut box_bad, mut eq_worst, mut trace_bad) = (0, 0, 0.0f64, 0);
    for _ in 0..40 {
        let n = rng.random_range(10..80);
        let p = rng.random_range(1..5);
        let overlap = rng.random_range(0.0..2.0);
        let y: Vec<Class> = (0..n).map(|i| if i % 2 == 0 { Class::Stable } else { Class::Unstable }).collect();
        let x = Array2::from_shape_fn((n, p), |(i, j)| {
            let shift = if j == 0 { y[i].sign::<f64>() } else { 0.0 };
            shift + overlap * rng.random_range(-1.0..1.0)
        });
        for (c, g) in [(0.1, 0.5), (1.0, 1.0), (10.0, 0.1), (1000.0, 4.0)] {
            let m = train(x.view(), &y, &SvmConfig::new(c, g).unwrap()).unwrap();
            models += 1;
            box_bad += m.training_alphas.iter().filter(|&&a| !(0.0..=c).contains(&a)).count();
            let eq: f64 = m.training_alphas.iter().zip(&y).map(|(&a, l)| a * l.sign::<f64>()).sum();
            eq_worst = eq_worst.max(eq.abs());
            trace_bad += m.diagnostics.objective_trace.windows(2).filter(|w| w[1] < w[0]).count();
        }
    }

    let xor = ndarray::array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
    let xor_y = [Class::Stable, Class::Stable, Class::Unstable, Class::Unstable];
    let m = train(xor.view(), &xor_y, &SvmConfig::new(100.0, 2.0).unwrap()).unwrap();
    let xor_acc = xor
        .rows()
        .into_iter()
        .zip(&xor_y)
        .filter(|(r, &l)| m.predict(r.as_slice().unwrap()).unwrap() == l)
        .count() as f64
        / 4.0;

    let labels: Vec<Class> = (0..60).map(|i| if i % 2 == 0 { Class::Stable } else { Class::Unstable }).collect();
    let sep = Array2::from_shape_fn((60, 2), |(i, j)| {
        if j == 0 {
            2.0 * labels[i].sign::<f64>() + rng.random_range(-0.5..0.5)
        } else {
            rng.random_range(-1.0..1.0)
        }
    });
    let sep = Dataset::new(sep, labels, vec!["a".into(), "b".into()]).unwrap();
    let folds = stratified_kfold(&sep, 5, 42).unwrap();
    let cv = cross_validated_accuracy(&sep, &[0, 1], &SvmConfig::new(1.0, 0.5).unwrap(), &folds)
        .unwrap()
        .j_score;

    outcome(
        box_bad == 0 && eq_worst <= 1e-6 && trace_bad == 0 && xor_acc == 1.0 && cv == 1.0,
        format!(
            "{models} models, box violations = {box_bad}, max |sum a y| = {eq_worst:.2e}, objective decreases = {trace_bad}, XOR accuracy = {xor_acc}, separable CV = {cv}"
        ),
    )
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Exact fraction, normalized with a positive denominator.
#[derive(Clone, Copy)]
struct Frac(i128, i128);

impl Frac {
    fn new(n: i128, d: i128) -> Frac {
        let g = gcd(n, d).max(1) * d.signum();
        Frac(n / g, d / g)
    }
    fn sub(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 - o.0 * self.1, self.1 * o.1)
    }
    fn add(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn mul(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.0, self.1 * o.1)
    }
    fn div(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1, self.1 * o.0)
    }
    fn to_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

fn c6_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut kappa_mismatch = 0;
    for _ in 0..100 {
        let c = Confusion {
            tp: rng.random_range(0..500),
            tn: rng.random_range(0..500),
            fp: rng.random_range(0..100),
            fn_: rng.random_range(1..100),
        };
        let mut pred = Vec::new();
        let mut act = Vec::new();
        for (count, p, a) in [
            (c.tp, Class::Unstable, Class::Unstable),
            (c.tn, Class::Stable, Class::Stable),
            (c.fp, Class::Unstable, Class::Stable),
            (c.fn_, Class::Stable, Class::Unstable),
        ] {
            pred.extend(std::iter::repeat_n(p, count));
            act.extend(std::iter::repeat_n(a, count));
        }
        let got: f64 = kappa(&pred, &act).unwrap();
        let n = c.total() as i128;
        let ratio = |k: usize| Frac::new(k as i128, n);
        let p_o = ratio(c.tp + c.tn);
        let p_e = ratio(c.tp + c.fp)
            .mul(ratio(c.tp + c.fn_))
            .add(ratio(c.tn + c.fn_).mul(ratio(c.tn + c.fp)));
        let one = Frac::new(1, 1);
        let expected = if p_e.0 == p_e.1 { 0.0 } else { p_o.sub(p_e).div(one.sub(p_e)).to_f64() };
        kappa_mismatch += usize::from(got.to_bits() != expected.to_bits());
    }

    let mut auc_worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..200);
        let levels = rng.random_range(2..50);
        let mut labels: Vec<Class> = (0..n).map(|_| if rng.random_bool(0.4) { Class::Unstable } else { Class::Stable }).collect();
        labels[0] = Class::Stable;
        labels[1] = Class::Unstable;
        // coarse levels force ties
        let scores: Vec<f64> = (0..n)
            .map(|i| {
                let shift = if labels[i] == Class::Unstable { 0.3 } else { 0.0 };
                ((rng.random_range(0.0..1.0) + shift) * levels as f64).floor()
            })
            .collect();
        let got: f64 = roc_auc(&scores, &labels).unwrap();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in (0..n).filter(|&i| labels[i] == Class::Unstable) {
            for j in (0..n).filter(|&j| labels[j] == Class::Stable) {
                pairs += 1.0;
                wins += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        auc_worst = auc_worst.max((got - wins / pairs).abs());
    }
    outcome(
        kappa_mismatch == 0 && auc_worst <= 1e-12,
        format!("kappa mismatches = {kappa_mismatch}/100, max |auc - pairwise| = {auc_worst:.2e}"),
    )
}

fn c7_pca() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut cum_bad, mut ortho_worst, mut recon_bad, mut recon_worst) = (0, 0.0f64, 0, 0.0f64);
    for _ in 0..20 {
        let n = rng.random_range(20..120);
        let p = rng.random_range(2..15);
        let latent = rng.random_range(1..=p);
        let mix = Array2::<f64>::from_shape_fn((latent, p), |_| rng.random_range(-1.0..1.0));
        let z = Array2::from_shape_fn((n, latent), |_| rng.random_range(-1.0..1.0));
        let noise = Array2::from_shape_fn((n, p), |_| 0.05 * rng.random_range(-1.0..1.0));
        let x = z.dot(&mix) + noise;
        let labels = (0..n).map(|i| if i % 2 == 0 { Class::Stable } else { Class::Unstable }).collect();
        let names = (0..p).map(|j| format!("f{j}")).collect();
        let d = Dataset::new(x.clone(), labels, names).unwrap();
        let fit = pca_fit(&d, 0.95).unwrap();
        cum_bad += usize::from(fit.cumulative_ratio() < 0.95);

        let v = &fit.component_matrix;
        let gram = v.t().dot(v);
        for ((i, j), &g) in gram.indexed_iter() {
            let target: f64 = if i == j { 1.0 } else { 0.0 };
            ortho_worst = ortho_worst.max((g - target).abs());
        }

        // squared error in the standardized space equals the discarded variance
        let recon = fit.reconstruct(&fit.project(&x).unwrap());
        let mut err = 0.0;
        for (((_, j), &a), &b) in x.indexed_iter().zip(recon.iter()) {
            let s = fit.scale_vector[j];
            err += ((a - b) / s).powi(2);
        }
        let err = err / (n - 1) as f64;
        let total: f64 = fit.eigenvalues.iter().sum();
        let discarded: f64 = fit.eigenvalues[fit.retained_k..].iter().sum();
        let tol = 1e-8 * total;
        recon_worst = recon_worst.max((err - discarded).abs() / total);
        recon_bad += usize::from(err > (1.0 - 0.95) * total + tol || (err - discarded).abs() > tol);
    }
    outcome(
        cum_bad == 0 && ortho_worst <= 1e-8 && recon_bad == 0,
        format!(
            "20 datasets, below 95% = {cum_bad}, max |V'V - I| = {ortho_worst:.2e}, bound violations = {recon_bad}, max relative |err - discarded| = {recon_worst:.2e}"
        ),
    )
}

fn run_default_select(d: &Dataset<f64>) -> String {
    let config = PipelineConfig::default();
    let (train, test) = train_test_split(d, 1.0 / 3.0, config.seed).unwrap();
    let mut report = select_features(&train, &default_alphas(), &config).unwrap();
    evaluate_report(&mut report, &train, &test, &config).unwrap();
    let curves = emit_curves(&report);
    let mut sizes: Vec<usize> = Vec::new();
    for r in &report.alpha_results {
        sizes.push(curves.iter().filter(|c| c.alpha == r.alpha).count());
    }
    format!(
        "{sizes:?}\n{}",
        serde_json::to_string(&report).unwrap()
    )
}

fn c8_pipeline() -> Outcome {
    let t = Instant::now();
    let d: Dataset<f64> = generate_synthetic(600, &SyntheticRecipe::tz_default(), 42).unwrap();
    let shape_ok = d.n_samples() == 600 && d.n_features() == 33;
    let first = run_default_select(&d);
    let secs = t.elapsed();
    let second = run_default_select(&d);
    let sizes = first.lines().next().unwrap().to_string();
    let shape_ok = shape_ok && sizes == "[33, 33, 33, 33, 33]";
    let identical = first == second;
    outcome(
        shape_ok && identical && secs < Duration::from_secs(600),
        format!("600x33, points per curve {sizes}, single run {secs:.1?}, reruns identical = {identical}"),
    )
}

fn c9_peak() -> Outcome {
    let d = demo_data();
    let report = select_features(&d, &default_alphas(), &PipelineConfig::default()).unwrap();
    let n = d.n_features();
    let e_star = report.global_best.score;
    let mut details = Vec::new();
    let mut pass = true;
    for r in &report.alpha_results {
        let full = r.curve[n - 1];
        pass &= r.best_size < n && full <= e_star;
        details.push(format!("a={} best m={} J(S_N)={:.4}", r.alpha, r.best_size, full));
    }
    outcome(pass, format!("e* = {e_star:.4}; {}", details.join(", ")))
}
