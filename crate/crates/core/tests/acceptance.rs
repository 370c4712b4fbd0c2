//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! `cargo test --test acceptance -- 3 5` runs only criteria 3 and 5.

mod common;

use std::time::{Duration, Instant};

use otgof::calibration::asymptotic::{asymptotic_null_distribution, AsymptoticPlan};
use otgof::calibration::{mc_null_distribution, pipeline_null_distribution, AsymptoticConfig};
use otgof::distributions::{
    chisq_quantile, sample_mvnormal, sample_mvt, sample_uniform_box, MvNormalParams, MvTParams, Sampler, UniformBox,
};
use otgof::hypotests::{
    warp_speed_study, CompositeCalibration, CompositeTest, CompositeTestSpec, NormalFamily, NullReference,
    ReferenceMode, SimpleCalibration, SimpleTest, SimpleTestSpec,
};
use otgof::ks;
use otgof::lowdisc::{rectangular_grid, spherical_grid};
use otgof::rng::{stream, Purpose};
use otgof::stats::{block_mean_contrast, block_mean_contrast_from_total, statistic_d, statistic_energy};
use otgof::transport::{ranks, solve_to_targets, PooledSample};
use otgof::{Execution, GridKind, Kernel, PointSet};
use rand::seq::SliceRandom;
use rand::Rng;

const EXEC: Execution = Execution::Parallel;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn random_points(rng: &mut impl Rng, count: usize, dim: usize) -> PointSet {
    PointSet::new(dim, (0..count * dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
}

fn c1_block_identity() -> Verdict {
    let mut rng = stream(101, Purpose::Study, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let big_n = rng.random_range(2..=50);
        let n = rng.random_range(1..big_n);
        let f: Vec<f64> = (0..big_n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let mut perm: Vec<usize> = (0..big_n).collect();
        perm.shuffle(&mut rng);
        let head = perm[..n].iter().map(|&i| f[i]).sum::<f64>() / n as f64;
        let tail = perm[n..].iter().map(|&i| f[i]).sum::<f64>() / (big_n - n) as f64;
        let direct = head - tail;
        let lib_left = block_mean_contrast(&f, &perm, n);
        let lib_right = block_mean_contrast_from_total(&f, &perm, n);
        worst = worst.max((direct - lib_right).abs()).max((lib_left - lib_right).abs());
    }
    verdict(
        worst <= 1e-12,
        format!("max |lhs - rhs| = {worst:.2e} over 200 draws (tol 1e-12)"),
    )
}

fn c2_assignment_optimality() -> Verdict {
    let mut rng = stream(102, Purpose::Study, 0);
    let mut mismatches = 0;
    for k in 0..500 {
        let big_n = rng.random_range(1..=7);
        let dim = rng.random_range(1..=3);
        let points = random_points(&mut rng, big_n, dim);
        let targets = if k % 2 == 0 && dim >= 2 {
            spherical_grid(dim, big_n).unwrap().points().clone()
        } else {
            random_points(&mut rng, big_n, dim)
        };
        let solved = solve_to_targets(&points, &targets).unwrap();
        let mut seen = vec![false; big_n];
        solved.sigma.iter().for_each(|&j| seen[j] = true);
        let best = common::brute_force_min_cost(&points, &targets);
        if solved.cost != best || seen.contains(&false) {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} of 500 instances differ from the exhaustive minimum"),
    )
}

fn c3_quadrature() -> Verdict {
    let mut rng = stream(103, Purpose::Study, 0);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let big_n = rng.random_range(2..=10);
        let n = rng.random_range(1..big_n);
        let a = [0.5, 1.0, 2.0][k % 3];
        let grid = spherical_grid(2, big_n).unwrap();
        let pooled = PooledSample::new(random_points(&mut rng, n, 2), random_points(&mut rng, big_n - n, 2)).unwrap();
        let (dr, rr) = ranks(&pooled, &grid).unwrap();
        let closed = statistic_d(&dr, &rr, &Kernel::gaussian(a).unwrap()).unwrap().value;
        let quad = common::quadrature_statistic(&dr, &rr, a, 61);
        worst = worst.max((closed - quad).abs());
    }
    verdict(
        worst <= 1e-4,
        format!("max |closed form - quadrature| = {worst:.2e} on 20 instances (tol 1e-4)"),
    )
}

fn c4_distribution_free() -> Verdict {
    let grid = spherical_grid(2, 220).unwrap();
    let k = Kernel::gaussian(2.0).unwrap();
    let normal = pipeline_null_distribution(&MvNormalParams::standard(2), &grid, 20, 200, &k, 2000, 104, EXEC).unwrap();
    let uniform = UniformBox::new(0.0, 1.0, 2).unwrap();
    let unif = pipeline_null_distribution(&uniform, &grid, 20, 200, &k, 2000, 105, EXEC).unwrap();
    let d = ks::two_sample(normal.values(), unif.values());
    let band = ks::critical_value_two_sample(0.01, 2000, 2000);
    verdict(d < band, format!("KS distance {d:.4} vs 1% critical value {band:.4}"))
}

const TABLE_SPHERICAL_A2: [(usize, usize, f64); 6] = [
    (20, 200, 1.3784),
    (50, 200, 1.3803),
    (80, 200, 1.3794),
    (20, 500, 1.3725),
    (50, 500, 1.3717),
    (80, 500, 1.3616),
];

fn c5_critical_values() -> Verdict {
    let k = Kernel::gaussian(2.0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &(n, m, printed)) in TABLE_SPHERICAL_A2.iter().enumerate() {
        let grid = spherical_grid(2, n + m).unwrap();
        let c = mc_null_distribution(&grid, n, m, &k, 2000, 500 + i as u64, EXEC)
            .unwrap()
            .quantile(0.05);
        ok &= (c - printed).abs() <= 0.05;
        parts.push(format!("n={n},m={m}: {c:.4} ({printed})"));
    }
    let cfg = AsymptoticConfig::default();
    for (kind, a, printed) in [(GridKind::Spherical, 2.0, 1.3844), (GridKind::Rectangular, 0.5, 0.2270)] {
        let kern = Kernel::gaussian(a).unwrap();
        let c = asymptotic_null_distribution(kind, 2, &kern, &cfg, 510, EXEC)
            .unwrap()
            .quantile(0.05);
        ok &= (c - printed).abs() <= 0.05;
        parts.push(format!("asymptotic {kind} a={a}: {c:.4} ({printed})"));
    }
    verdict(ok, parts.join("; "))
}

fn simple_spec<'a>(null: &'a dyn Sampler) -> SimpleTestSpec<'a> {
    SimpleTestSpec {
        null: NullReference::Sample(null),
        n: 50,
        m: 200,
        grid: GridKind::Spherical,
        kernel: Kernel::gaussian(2.0).unwrap(),
        alpha: 0.05,
        calibration: SimpleCalibration::OnTheFly { reps: 10_000 },
    }
}

fn c6_simple_level() -> Verdict {
    let null = MvNormalParams::standard(2);
    let test = SimpleTest::prepare(simple_spec(&null), 106, EXEC).unwrap();
    let level = test.rejection_rate(&null, 1000, 107, EXEC).unwrap();
    verdict(
        (0.035..=0.065).contains(&level),
        format!(
            "level {:.1}% (band 3.5-6.5%, published 5.6%), critical value {:.4}",
            100.0 * level,
            test.critical_value()
        ),
    )
}

fn c7_simple_power() -> Verdict {
    let null = MvNormalParams::standard(2);
    let test = SimpleTest::prepare(simple_spec(&null), 106, EXEC).unwrap();
    let alt = UniformBox::new(-1.0, 1.0, 2).unwrap();
    let power = test.rejection_rate(&alt, 200, 108, EXEC).unwrap();
    verdict(
        power >= 0.95,
        format!("power {:.1}% (need >= 95%, published 100.0%)", 100.0 * power),
    )
}

fn composite_spec(family: &NormalFamily, n: usize, m: usize) -> CompositeTestSpec<'_, NormalFamily> {
    CompositeTestSpec {
        family,
        n,
        m,
        grid: GridKind::Spherical,
        kernel: Kernel::gaussian(2.0).unwrap(),
        alpha: 0.05,
        reps: 100,
        reference: ReferenceMode::GridPoints,
        calibration: CompositeCalibration::Bootstrap,
    }
}

fn sigma21() -> MvNormalParams {
    MvNormalParams::new(vec![1.0, 1.0], vec![2.0, 1.0, 1.0, 1.0]).unwrap()
}

fn c8_warp_speed() -> Verdict {
    let fam = NormalFamily;
    let spec = composite_spec(&fam, 80, 1000);
    let alt = UniformBox::new(-1.0, 1.0, 2).unwrap();
    let power = warp_speed_study(&alt, spec, 500, 109, EXEC).unwrap().rate;
    let level = warp_speed_study(&sigma21(), spec, 500, 110, EXEC).unwrap().rate;
    verdict(
        (0.90..=1.0).contains(&power) && (0.02..=0.09).contains(&level),
        format!(
            "U(-1,1)^2 rate {:.1}% (band 90-100%, published 96.1%); N2(1,S21) rate {:.1}% (band 2-9%, published 7.0)",
            100.0 * power,
            100.0 * level
        ),
    )
}

fn c9_properties() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        if !ok {
            failures.push(format!("{name}: {detail}"));
        }
    };

    // Grids.
    let sph = spherical_grid(2, 10_000).unwrap();
    check(
        "grid determinism",
        sph == spherical_grid(2, 10_000).unwrap(),
        String::new(),
    );
    let radii: Vec<f64> = sph
        .points()
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let gap = (1..10)
        .map(|k| {
            let r = k as f64 / 10.0;
            (radii.iter().filter(|&&x| x <= r).count() as f64 / radii.len() as f64 - r).abs()
        })
        .fold(0.0, f64::max);
    check("spherical radius gap", gap < 0.02, format!("{gap:.4}"));
    let rect = rectangular_grid(3, 10_000).unwrap();
    for j in 0..3 {
        let col: Vec<f64> = rect.points().rows().map(|r| r[j]).collect();
        let d = ks::one_sample(&col, |x| x.clamp(0.0, 1.0));
        check("rectangular marginal gap", d < 0.02, format!("coordinate {j}: {d:.4}"));
    }

    // Kernels and statistics.
    let mut rng = stream(111, Purpose::Study, 0);
    let kernels = [
        Kernel::gaussian(1.5).unwrap(),
        Kernel::new(otgof::KernelFamily::Stable, 0.7, 1.0).unwrap(),
        Kernel::new(otgof::KernelFamily::Laplace, 2.0, 1.5).unwrap(),
    ];
    let mut min_d = f64::INFINITY;
    let mut asym: f64 = 0.0;
    for _ in 0..100 {
        let (n, m) = (rng.random_range(1..12), rng.random_range(1..12));
        let x = random_points(&mut rng, n, 2);
        let y = random_points(&mut rng, m, 2);
        for k in &kernels {
            let v = k.eval(x.row(0));
            check(
                "kernel range",
                v > 0.0 && v <= 1.0 && v == k.eval(&[-x.row(0)[0], -x.row(0)[1]]),
                format!("{v}"),
            );
            let d = statistic_d(&x, &y, k).unwrap().value;
            min_d = min_d.min(d);
            asym = asym.max((d - statistic_d(&y, &x, k).unwrap().value).abs());
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let permuted = statistic_d(&x.select(&order), &y, k).unwrap().value;
            check(
                "permutation invariance",
                (d - permuted).abs() < 1e-12,
                format!("{d} vs {permuted}"),
            );
        }
    }
    check("statistic nonnegativity", min_d >= -1e-10, format!("min {min_d:e}"));
    check("block swap symmetry", asym < 1e-12, format!("{asym:e}"));
    let (mut dv, mut ev) = (Vec::new(), Vec::new());
    let small = Kernel::new(otgof::KernelFamily::Stable, 0.05, 1.0).unwrap();
    for _ in 0..50 {
        let x = random_points(&mut rng, 8, 2);
        let y = random_points(&mut rng, 12, 2);
        dv.push(statistic_d(&x, &y, &small).unwrap().value);
        ev.push(statistic_energy(&x, &y, 1.0).unwrap());
    }
    let rho = common::spearman(&dv, &ev);
    check("small-scale energy ordering", rho > 0.95, format!("spearman {rho:.4}"));

    // Calibration.
    let k2 = Kernel::gaussian(2.0).unwrap();
    let cfg = AsymptoticConfig::default();
    let plan = AsymptoticPlan::new(GridKind::Spherical, 2, &k2, &cfg).unwrap();
    // Both sides are compared as quantities, so each is estimated with enough
    // replications that simulation error stays well inside the 0.05 band.
    let c_inf = plan.simulate(40_000, 112, EXEC).quantile(0.05);
    for &(n, m, _) in TABLE_SPHERICAL_A2.iter().filter(|t| t.0 >= 50) {
        let grid = spherical_grid(2, n + m).unwrap();
        let c = mc_null_distribution(&grid, n, m, &k2, 20_000, 113, EXEC)
            .unwrap()
            .quantile(0.05);
        check(
            "asymptotic vs finite-sample",
            (c - c_inf).abs() <= 0.05,
            format!("n={n} m={m}: {c:.4} vs {c_inf:.4}"),
        );
    }
    let eig = nalgebra::SymmetricEigen::new(plan.covariance().clone());
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    check("covariance eigenvalues", lo >= -1e-8 * hi, format!("[{lo:e}, {hi:e}]"));
    let grid = spherical_grid(2, 220).unwrap();
    let shortcut = mc_null_distribution(&grid, 20, 200, &k2, 2000, 114, EXEC).unwrap();
    let pipeline =
        pipeline_null_distribution(&MvNormalParams::standard(2), &grid, 20, 200, &k2, 2000, 115, EXEC).unwrap();
    let d = ks::two_sample(shortcut.values(), pipeline.values());
    check(
        "subset shortcut",
        d < ks::critical_value_two_sample(0.01, 2000, 2000),
        format!("KS {d:.4}"),
    );

    // Simple-test level under two nulls and p-value uniformity.
    let normal = MvNormalParams::standard(2);
    let uniform = UniformBox::new(0.0, 1.0, 2).unwrap();
    let mut spec = simple_spec(&normal);
    spec.n = 20;
    spec.m = 100;
    let t_normal = SimpleTest::prepare(spec, 116, EXEC).unwrap();
    let t_uniform = SimpleTest::prepare(
        SimpleTestSpec {
            null: NullReference::Sample(&uniform),
            ..spec
        },
        116,
        EXEC,
    )
    .unwrap();
    let l1 = t_normal.rejection_rate(&normal, 1000, 117, EXEC).unwrap();
    let l2 = t_uniform.rejection_rate(&uniform, 1000, 117, EXEC).unwrap();
    check(
        "level under two nulls",
        (l1 - 0.05).abs() <= 0.015 && (l2 - 0.05).abs() <= 0.015,
        format!("{l1} and {l2}"),
    );
    let p = t_normal.p_values(&normal, 500, 118, EXEC).unwrap();
    let dp = ks::one_sample(&p, |x| x.clamp(0.0, 1.0));
    check(
        "p-value uniformity",
        dp < ks::critical_value_one_sample(0.05, 500),
        format!("KS {dp:.4}"),
    );

    // Composite level under an affine image of the null. The symmetric root
    // of A S A^T is not A S^{1/2}, and OT ranks are not affine equivariant,
    // so the grid reference is only approximately invariant.
    let fam = NormalFamily;
    let mut cspec = composite_spec(&fam, 50, 200);
    cspec.calibration = CompositeCalibration::Standard;
    cspec.reps = 2000;
    let ctest = CompositeTest::new(cspec, 2).unwrap();
    let critical = ctest.standard_null(119, EXEC).unwrap().quantile(0.05);
    let base = ctest.rejection_rate_at(&normal, critical, 4000, 119, EXEC).unwrap();
    let shifted = ctest.rejection_rate_at(&sigma21(), critical, 4000, 119, EXEC).unwrap();
    check(
        "affine composite level",
        (base - shifted).abs() <= 0.02 && (base - 0.05).abs() <= 0.02,
        format!("{base} vs {shifted} at {critical:.4}"),
    );

    // Distributions: chi-square round trip and marginal KS checks. Six
    // marginals share one 5% band through a Bonferroni split.
    let mut worst: f64 = 0.0;
    for dof in [1.0, 2.0, 3.0, 5.0] {
        for i in 0..=100 {
            let u = 0.001 + 0.998 * i as f64 / 100.0;
            let q = chisq_quantile(u, dof).unwrap();
            worst = worst.max((common::chisq_cdf_by_quadrature(q, dof) - u).abs());
        }
    }
    check("chi-square round trip", worst <= 1e-8, format!("{worst:e}"));
    let band = ks::critical_value_one_sample(0.05 / 6.0, 10_000);
    let s = sample_mvnormal(
        &MvNormalParams::new(vec![0.5, -1.0], vec![4.0, 1.0, 1.0, 1.0]).unwrap(),
        10_000,
        120,
    );
    let n0 = statrs::distribution::Normal::new(0.5, 2.0).unwrap();
    let n1 = statrs::distribution::Normal::new(-1.0, 1.0).unwrap();
    let t = sample_mvt(
        &MvTParams::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0], 3.0).unwrap(),
        10_000,
        120,
    );
    let tm = statrs::distribution::StudentsT::new(0.0, 1.0, 3.0).unwrap();
    let u = sample_uniform_box(-1.0, 1.0, 2, 10_000, 120).unwrap();
    use statrs::distribution::ContinuousCDF;
    let col = |p: &PointSet, j: usize| -> Vec<f64> { p.rows().map(|r| r[j]).collect() };
    let dists = [
        ks::one_sample(&col(&s, 0), |x| n0.cdf(x)),
        ks::one_sample(&col(&s, 1), |x| n1.cdf(x)),
        ks::one_sample(&col(&t, 0), |x| tm.cdf(x)),
        ks::one_sample(&col(&t, 1), |x| tm.cdf(x)),
        ks::one_sample(&col(&u, 0), |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0)),
        ks::one_sample(&col(&u, 1), |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0)),
    ];
    let dmax = dists.iter().copied().fold(0.0, f64::max);
    check(
        "sampler marginals",
        dmax < band,
        format!("max KS {dmax:.4} vs {band:.4}"),
    );

    if failures.is_empty() {
        verdict(true, "grids, kernels, statistics, calibration, tests and samplers")
    } else {
        verdict(false, failures.join("; "))
    }
}

type Criterion = (u32, &'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "block-mean identity", Duration::from_secs(1), c1_block_identity),
        (
            2,
            "assignment optimality",
            Duration::from_secs(30),
            c2_assignment_optimality,
        ),
        (3, "closed form vs quadrature", Duration::from_secs(120), c3_quadrature),
        (
            4,
            "distribution-freeness",
            Duration::from_secs(600),
            c4_distribution_free,
        ),
        (5, "critical values", Duration::from_secs(900), c5_critical_values),
        (6, "simple-test level", Duration::from_secs(300), c6_simple_level),
        (7, "simple-test power", Duration::from_secs(120), c7_simple_power),
        (8, "warp-speed composite", Duration::from_secs(1800), c8_warp_speed),
        (9, "property suite", Duration::from_secs(1800), c9_properties),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.1} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
