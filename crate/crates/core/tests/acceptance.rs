//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uavmimo::geometry::Bounds2;
use uavmimo::mimo::{synthesize_channel, ArrayConfig, Channel};
use uavmimo::propagation::{enumerate_paths, rssi, Coverage, SumMode, TraceSettings};
use uavmimo::rankanalysis::{apply_threshold, singular_values, RankCriterion, SingularSpectrum, SiteResult};
use uavmimo::sweep::{self, Execution};
use uavmimo::{wavelength, Material, Scene, SceneBuilder, Vec3};

const FREQ: f64 = 3.4e9;
const P_TX_W: f64 = 10.0;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn friis() -> Verdict {
    let t = Instant::now();
    let settings = TraceSettings::new(2, FREQ).unwrap();
    let ps = enumerate_paths(&Vec3::new(0., 0., 10.), &Vec3::new(100., 0., 10.), &Scene::free_space(), &settings).unwrap();
    let p = rssi(&ps, P_TX_W, SumMode::Coherent).unwrap();
    let el = t.elapsed();
    let pass = ps.paths.len() == 1 && (p + 43.08).abs() <= 0.01 && (-55.0..=-40.0).contains(&p) && within(el, 1.0);
    verdict(pass, format!("RSSI {p:.4} dBm, {} path(s), {el:.2?}", ps.paths.len()))
}

/// Closed-form two-ray power over a perfectly conducting plane.
fn two_ray_dbm(d: f64, ht: f64, hr: f64) -> f64 {
    let lambda = wavelength(FREQ);
    let k = 2.0 * PI / lambda;
    let d1 = (d * d + (ht - hr).powi(2)).sqrt();
    let d2 = (d * d + (ht + hr).powi(2)).sqrt();
    let field = Complex64::from_polar(1.0 / d1, -k * d1) - Complex64::from_polar(1.0 / d2, -k * d2);
    10.0 * (P_TX_W * (lambda / (4.0 * PI)).powi(2) * field.norm_sqr() * 1e3).log10()
}

fn two_ray() -> Verdict {
    let t = Instant::now();
    let scene = SceneBuilder::new(Bounds2::centered(6000., 6000.).unwrap())
        .ground(Material::perfect_reflector())
        .build()
        .unwrap();
    let settings = TraceSettings::new(2, FREQ).unwrap();
    let (ht, n) = (10.0, 200);
    let mut worst: f64 = 0.0;
    let mut bad_paths = 0;
    for hr in [3.0, 30.0, 70.0, 110.0] {
        for i in 0..n {
            let d = 50.0 * (2000.0f64 / 50.0).powf(i as f64 / (n - 1) as f64);
            let ps = enumerate_paths(&Vec3::new(0., 0., ht), &Vec3::new(d, 0., hr), &scene, &settings).unwrap();
            bad_paths += usize::from(ps.paths.len() != 2);
            let p = rssi(&ps, P_TX_W, SumMode::Coherent).unwrap();
            worst = worst.max((p - two_ray_dbm(d, ht, hr)).abs());
        }
    }
    let el = t.elapsed();
    verdict(
        worst <= 0.01 && bad_paths == 0 && within(el, 5.0),
        format!("max |error| {worst:.2e} dB over {} links, {el:.2?}", 4 * n),
    )
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 * a.norm_squared() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn svd_oracle() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let h = DMatrix::from_fn(4, 4, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let sigma = singular_values(&Channel { h: h.clone() }).unwrap();
        // Hermitian Gram G = A + jB embeds as the real symmetric [[A, -B], [B, A]],
        // whose spectrum is that of G with every eigenvalue doubled.
        let g = h.adjoint() * &h;
        let real = DMatrix::from_fn(8, 8, |i, j| {
            let z = g[(i % 4, j % 4)];
            match (i < 4, j < 4) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let ev = jacobi_eigenvalues(real);
        let lambda: Vec<f64> = (0..4).map(|i| 0.5 * (ev[2 * i] + ev[2 * i + 1])).collect();
        for (s, l) in sigma.sigma().iter().zip(&lambda) {
            worst = worst.max((s * s - l).abs() / lambda[0]);
        }
    }
    let el = t.elapsed();
    verdict(worst < 1e-10 && within(el, 5.0), format!("max relative error {worst:.2e}, {el:.2?}"))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn rank_one_law() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let settings = TraceSettings::new(2, FREQ).unwrap();
    let scene = Scene::free_space();
    let criteria = [10.0, 1e2, 1e4].map(|k| RankCriterion::relative(k).unwrap());
    let (mut worst_raw, mut failures): (f64, usize) = (0.0, 0);
    for _ in 0..500 {
        let tx = Vec3::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), rng.random_range(1.0..50.0));
        let rx = Vec3::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), rng.random_range(1.0..150.0));
        let tx_arr = ArrayConfig::new(4, rng.random_range(0.25..2.0), random_unit(&mut rng), tx).unwrap();
        let rx_arr = ArrayConfig::new(4, rng.random_range(0.25..2.0), random_unit(&mut rng), rx).unwrap();
        let ps = enumerate_paths(&tx, &rx, &scene, &settings).unwrap();
        let ch = synthesize_channel(&ps, &tx_arr, &rx_arr);
        // unflushed ratio straight from the decomposition
        let raw = ch.h.clone().svd(false, false).singular_values;
        let mut raw: Vec<f64> = raw.iter().copied().collect();
        raw.sort_by(|a, b| b.total_cmp(a));
        worst_raw = worst_raw.max(raw[1] / raw[0]);
        let sigma = singular_values(&ch).unwrap();
        let ratio = sigma.sigma()[1] / sigma.sigma()[0];
        let ranks_ok = criteria.iter().all(|c| apply_threshold(&sigma, c).rank == 1);
        failures += usize::from(ps.paths.len() != 1 || ratio.is_nan() || ratio >= 1e-12 || !ranks_ok);
    }
    verdict(
        failures == 0 && worst_raw < 1e-12,
        format!("{failures} failures in 500, worst unflushed sigma2/sigma1 {worst_raw:.2e}"),
    )
}

fn threshold_monotonicity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ks = [10.0, 1e2, 1e4];
    let (mut non_monotone, mut mismatches) = (0, 0);
    for _ in 0..10_000 {
        let mut s: Vec<f64> = (0..4)
            .map(|_| if rng.random_bool(0.1) { 0.0 } else { 10f64.powf(rng.random_range(-6.0..1.0)) })
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let spectrum = SingularSpectrum::new(s.clone()).unwrap();
        let ranks: Vec<usize> = ks
            .iter()
            .map(|&k| {
                let t = apply_threshold(&spectrum, &RankCriterion::relative(k).unwrap());
                let thr = s[0] / k;
                let expect: Vec<f64> = s.iter().map(|&x| if x > 0.0 && x >= thr { x } else { 0.0 }).collect();
                mismatches += usize::from(t.sigma != expect || t.rank != expect.iter().filter(|&&x| x > 0.0).count());
                t.rank
            })
            .collect();
        non_monotone += usize::from(!(ranks[0] <= ranks[1] && ranks[1] <= ranks[2]));

        let mut means: Vec<f64> = (0..4).map(|_| 10f64.powf(rng.random_range(-6.0..1.0))).collect();
        means.sort_by(|a, b| b.total_cmp(a));
        let t = apply_threshold(&spectrum, &RankCriterion::population_mean(means.clone()).unwrap());
        let expect: Vec<f64> = s.iter().zip(&means).map(|(&x, &m)| if x > 0.0 && x >= m { x } else { 0.0 }).collect();
        mismatches += usize::from(t.sigma != expect || t.rank != expect.iter().filter(|&&x| x > 0.0).count());
    }
    verdict(
        non_monotone == 0 && mismatches == 0,
        format!("{non_monotone} non-monotone, {mismatches} survivor mismatches over 10000 spectra"),
    )
}

fn covered(layer: &[SiteResult]) -> Vec<&SiteResult> {
    layer.iter().filter(|s| s.coverage == Coverage::Covered).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn altitude_trend() -> Verdict {
    let out = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let run = sweep::run_sweep(&scenario("urban_canyon.toml"), out.path(), Execution::default()).unwrap();
    let el = t.elapsed();
    let res = &run.result;
    let k100 = res.criteria.iter().position(|c| c.label() == "k100").expect("k:100 configured");
    let layer = |alt: f64| res.layers.iter().find(|l| l.altitude_m == alt).expect("altitude configured");
    let stats = |alt: f64| {
        let c = covered(&layer(alt).sites);
        let frac = c.iter().filter(|s| s.outcomes[k100].rank >= 2).count() as f64 / c.len() as f64;
        // undefined CN means sigma2 = 0, i.e. an infinitely ill-conditioned channel
        let cn = median(c.iter().map(|s| s.cn_db.unwrap_or(f64::INFINITY)).collect());
        (frac, cn)
    };
    let (f30, cn30) = stats(30.0);
    let (f110, cn110) = stats(110.0);
    let sites = res.layers.iter().map(|l| l.sites.len()).sum::<usize>();
    verdict(
        f110 <= f30 && cn110 >= cn30 && within(el, 60.0) && sites == 720 * 4,
        format!(
            "rank>=2 (K=100) {f30:.3} @30 m vs {f110:.3} @110 m; median CN {cn30:.2} dB @30 m vs {cn110:.2} dB @110 m; {sites} sites, {el:.2?}"
        ),
    )
}

fn high_rank_rarity() -> Verdict {
    let out = tempfile::tempdir().unwrap();
    let run = sweep::run_sweep(&scenario("rural_open_field.toml"), out.path(), Execution::default()).unwrap();
    let res = &run.result;
    let mean = res.criteria.iter().position(|c| c.label() == "mean").expect("mean configured");
    let worst = res
        .layers
        .iter()
        .map(|l| {
            let c = covered(&l.sites);
            c.iter().filter(|s| s.outcomes[mean].rank >= 3).count() as f64 / c.len() as f64
        })
        .fold(0.0, f64::max);
    verdict(
        worst < 0.05 && res.layers.len() == 4,
        format!("max P(rank>=3) under mean thresholds {worst:.4} across {} altitudes", res.layers.len()),
    )
}

fn conservation() -> Verdict {
    let mut checked = 0;
    let mut problems = Vec::new();
    for name in ["urban_canyon.toml", "rural_open_field.toml", "small_empty.toml", "cc1.toml", "lw1.toml"] {
        let prepared = sweep::prepare(&scenario(name)).unwrap();
        let res = sweep::sweep(&prepared.loaded.config, &prepared.scene, Execution::default()).unwrap();
        for l in &res.layers {
            let s = &l.stats;
            for (c, counts) in s.rank_counts.iter().enumerate() {
                if s.n_z + s.n_b + counts.iter().sum::<usize>() != s.n_total || !s.is_conserved() {
                    problems.push(format!("{name} z={} criterion {c}", l.altitude_m));
                }
            }
            for site in &l.sites {
                checked += 1;
                if (site.coverage == Coverage::InBuilding) != prepared.scene.is_inside_building(&site.position) {
                    problems.push(format!("{name} B flag at {:?}", site.position));
                }
            }
        }
    }
    verdict(problems.is_empty(), format!("{checked} sites checked, problems: {problems:?}"))
}

fn determinism() -> Verdict {
    let config = scenario("urban_canyon.toml");
    let runs: Vec<(String, Vec<u8>, Vec<u8>)> = [Execution::Sequential, Execution::Parallel { workers: 2 }, Execution::Parallel { workers: 7 }]
        .into_iter()
        .map(|exec| {
            let out = tempfile::tempdir().unwrap();
            sweep::run_sweep(&config, out.path(), exec).unwrap();
            let read = |f: &str| std::fs::read(out.path().join(f)).unwrap();
            (format!("{} worker(s)", exec.workers()), read("sites.csv"), read("cdf.csv"))
        })
        .collect();
    let same = runs.windows(2).all(|w| w[0].1 == w[1].1 && w[0].2 == w[1].2);
    let labels: Vec<&str> = runs.iter().map(|r| r.0.as_str()).collect();
    verdict(same && !runs[0].1.is_empty(), format!("sites.csv and cdf.csv identical across {labels:?}: {same}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Friis free-space oracle", friis),
        ("two-ray PEC ground oracle", two_ray),
        ("SVD vs Gram eigenvalue oracle", svd_oracle),
        ("rank-1 law for single-path links", rank_one_law),
        ("threshold monotonicity and survivors", threshold_monotonicity),
        ("altitude trend on the urban canyon", altitude_trend),
        ("rarity of rank >= 3 in the rural field", high_rank_rarity),
        ("bookkeeping conservation", conservation),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!("[{}] criterion {}: {name} -- {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
