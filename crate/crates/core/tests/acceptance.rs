//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use gblobs::cloud::PointCloud;
use gblobs::descriptors::{
    decode_feature_set, eig_sym3, encode_cloud, encode_feature_set, encode_voxels, gaussian_blob, neighborhood_cov,
    read_feature_set, write_feature_set, BlobAux, DMode, EncoderSpec, FeatureSet, GBlob, Mat3,
};
use gblobs::genbench::{
    bench_cloud, objective, run_bench, run_dg_experiment, run_sparsity_sweep, run_voxel_sweep, ExperimentConfig, Report,
    IN_DOMAIN,
};
use gblobs::io::{load_kitti_bin, load_xyz_csv, parse_kitti_bin, write_kitti_bin};
use gblobs::rng;
use gblobs::synthetic::{apply_domain, generate_scene};
use gblobs::voxel::{voxelize, GridSpec};
use gblobs::Error;
use rand::Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: "1", title: "feature width", limit: None, run: width_contract },
        Criterion { id: "2", title: "invariance suite", limit: Some(secs(5)), run: invariance_suite },
        Criterion { id: "3", title: "literal d degeneracy", limit: Some(secs(1)), run: literal_d },
        Criterion { id: "4", title: "oracle equivalence", limit: Some(secs(10)), run: oracles },
        Criterion { id: "5", title: "z-shift domain generalization", limit: Some(secs(300)), run: zshift_dg },
        Criterion { id: "6", title: "sigma under co-shifted grid", limit: Some(secs(60)), run: coshifted_sigma },
        Criterion { id: "7", title: "sparsity sweep", limit: Some(secs(300)), run: sparsity_sweep },
        Criterion { id: "8", title: "voxel-size sweep", limit: Some(secs(300)), run: voxel_sweep },
        Criterion { id: "9", title: "throughput and determinism", limit: None, run: throughput },
        Criterion { id: "10", title: "format round trips", limit: None, run: round_trips },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == c.id) {
            continue;
        }
        let t0 = Instant::now();
        let mut outcome = (c.run)();
        let took = t0.elapsed();
        if let (Ok(msg), Some(limit)) = (&outcome, c.limit) {
            if took > limit {
                outcome = Err(format!("{msg}; took {:.1} s, limit {} s", took.as_secs_f64(), limit.as_secs()));
            }
        }
        match outcome {
            Ok(msg) => println!("PASS criterion {:>2} ({}): {msg} [{:.2} s]", c.id, c.title, took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({}): {msg} [{:.2} s]", c.id, c.title, took.as_secs_f64());
            }
        }
    }
    println!("{failed} criterion(s) failed");
    if failed > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn fmt_seeds(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

// ---------------------------------------------------------------------------
// Neighborhoods and oracles

/// Random local neighborhoods: 1 to 64 points spread over 2 cm to 2 m around a
/// center anywhere in the ±75.2 m range.
fn neighborhoods(count: usize, seed: u64) -> Vec<Vec<[f64; 3]>> {
    let mut r = rng::seeded(seed);
    (0..count)
        .map(|_| {
            let n = r.random_range(1..=64);
            let c: [f64; 3] = std::array::from_fn(|_| r.random_range(-74.0..74.0));
            let spread = r.random_range(0.02..2.0);
            (0..n)
                .map(|_| std::array::from_fn(|a| c[a] + spread * r.random_range(-0.5..0.5)))
                .collect()
        })
        .collect()
}

/// Population covariance from all ordered pairs:
/// `Σ = 1/(2N²) Σ_i Σ_j (p_i − p_j)(p_i − p_j)ᵀ`.
fn pairwise_cov(pts: &[[f64; 3]]) -> Mat3 {
    let n = pts.len() as f64;
    let mut s = [[0.0; 3]; 3];
    for p in pts {
        for q in pts {
            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            for a in 0..3 {
                for b in 0..3 {
                    s[a][b] += d[a] * d[b];
                }
            }
        }
    }
    s.map(|row| row.map(|v| v / (2.0 * n * n)))
}

fn max_abs(m: &Mat3) -> f64 {
    m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn max_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut d = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

fn rotation(axis: [f64; 3], angle: f64) -> Mat3 {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / norm);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn transpose(a: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

fn apply(r: &Mat3, p: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|k| r[i][k] * p[k]).sum())
}

fn sigma(pts: &[[f64; 3]]) -> Mat3 {
    neighborhood_cov(pts).expect("non-empty neighborhood")
}

// ---------------------------------------------------------------------------
// 1

fn width_contract() -> Outcome {
    ensure(GBlob::<3>::WIDTH == 12 && GBlob::<4>::WIDTH == 20, || "GBlob widths".into())?;
    let xyz = EncoderSpec::gblobs();
    let xyzi = EncoderSpec::gblobs().with_intensity(true);
    ensure(xyz.width() == 12 && xyzi.width() == 20, || format!("spec widths {} / {}", xyz.width(), xyzi.width()))?;

    let pts = vec![[1.01, 1.02, 0.01], [1.04, 1.06, 0.05], [-3.0, 2.0, 1.0]];
    let cloud = PointCloud::new(pts, Some(vec![0.1, 0.7, 0.3]), "t").map_err(|e| e.to_string())?;
    let grid = GridSpec::waymo(5);
    let a = encode_cloud(&cloud, &grid, &xyz).map_err(|e| e.to_string())?;
    let b = encode_cloud(&cloud, &grid, &xyzi).map_err(|e| e.to_string())?;
    ensure(a.rows().all(|r| r.len() == 12) && b.rows().all(|r| r.len() == 20), || "row lengths".into())?;
    Ok(format!("M=3 rows have {} values, M=4 rows have {}", a.width(), b.width()))
}

// ---------------------------------------------------------------------------
// 2

fn invariance_suite() -> Outcome {
    let hoods = neighborhoods(1000, 20);
    let mut r = rng::seeded(21);
    let (mut perm, mut trans, mut rot, mut scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut min_eig_ratio = f64::INFINITY;
    for pts in &hoods {
        let s = sigma(pts);

        let mut shuffled = pts.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        perm = perm.max(max_diff(&s, &sigma(&shuffled)));

        let len = r.random_range(0.0..200.0);
        let dir: [f64; 3] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let t = dir.map(|v| v / norm * len);
        let moved: Vec<[f64; 3]> = pts.iter().map(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]]).collect();
        trans = trans.max(max_diff(&s, &sigma(&moved)));

        let axis: [f64; 3] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        let rm = rotation(axis, r.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let turned: Vec<[f64; 3]> = pts.iter().map(|p| apply(&rm, *p)).collect();
        let want = mat_mul(&mat_mul(&rm, &s), &transpose(&rm));
        rot = rot.max(max_diff(&sigma(&turned), &want));

        let k = r.random_range(0.1..10.0);
        let scaled: Vec<[f64; 3]> = pts.iter().map(|p| p.map(|v| v * k)).collect();
        let want = s.map(|row| row.map(|v| v * k * k));
        let denom = max_abs(&want);
        if denom > 0.0 {
            scale = scale.max(max_diff(&sigma(&scaled), &want) / denom);
        }

        let trace = s[0][0] + s[1][1] + s[2][2];
        let e = eig_sym3(&s).map_err(|e| e.to_string())?;
        if trace > 0.0 {
            min_eig_ratio = min_eig_ratio.min(e.values[0] / trace);
        } else {
            ensure(e.values[0] >= 0.0, || "negative eigenvalue of a zero-trace covariance".into())?;
        }
    }
    ensure(perm <= 1e-12, || format!("permutation residual {perm:e}"))?;
    ensure(trans <= 1e-9, || format!("translation residual {trans:e}"))?;
    ensure(rot <= 1e-9, || format!("rotation residual {rot:e}"))?;
    ensure(scale <= 1e-9, || format!("scale residual {scale:e}"))?;
    ensure(min_eig_ratio >= -1e-9, || format!("min eigenvalue / trace {min_eig_ratio:e}"))?;

    for p in [[0.0; 3], [75.2, -75.2, 3.9], [1e-3, 12.5, -1.99]] {
        ensure(sigma(&[p]) == [[0.0; 3]; 3], || format!("single point {p:?} gives non-zero covariance"))?;
    }
    Ok(format!(
        "1000 neighborhoods: permutation {perm:.1e}, translation {trans:.1e}, rotation {rot:.1e}, scale {scale:.1e} rel, min eig/trace {min_eig_ratio:.1e}, N=1 gives 0"
    ))
}

// ---------------------------------------------------------------------------
// 3

fn literal_d() -> Outcome {
    let mut worst = 0.0f64;
    for pts in neighborhoods(1000, 30) {
        let b = gaussian_blob(&pts, DMode::Literal, BlobAux::default()).map_err(|e| e.to_string())?;
        worst = worst.max(b.d.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    }
    ensure(worst <= 1e-6, || format!("max |d| = {worst:e}"))?;
    Ok(format!("max |d| over 1000 neighborhoods = {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 4

fn oracles() -> Outcome {
    let mut cov_rel = 0.0f64;
    for pts in neighborhoods(200, 40) {
        let got = sigma(&pts);
        let want = pairwise_cov(&pts);
        let denom = max_abs(&want);
        let err = max_diff(&got, &want);
        let rel = if denom > 0.0 { err / denom } else { err };
        cov_rel = cov_rel.max(rel);
    }
    ensure(cov_rel <= 1e-10, || format!("covariance vs pairwise oracle {cov_rel:e} relative"))?;

    let mut r = rng::seeded(41);
    let mut recon = 0.0f64;
    for _ in 0..200 {
        let [a, b, c, d, e, f]: [f64; 6] = std::array::from_fn(|_| r.random_range(-10.0..10.0));
        let m = [[a, b, c], [b, d, e], [c, e, f]];
        let e = eig_sym3(&m).map_err(|e| e.to_string())?;
        recon = recon.max(max_diff(&e.reconstruct(), &m));
    }
    ensure(recon <= 1e-7, || format!("eigen reconstruction {recon:e}"))?;

    let (width, classes, n) = (5, 3, 30);
    let x: Vec<f64> = (0..n * width).map(|_| r.random_range(-2.0..2.0)).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let w: Vec<f64> = (0..classes * (width + 1)).map(|_| r.random_range(-0.5..0.5)).collect();
    let l2 = 0.01;
    let (_, grad) = objective(&w, &x, &labels, classes, l2);
    let h = 1e-5;
    let mut grad_rel = 0.0f64;
    for k in 0..w.len() {
        let mut up = w.clone();
        let mut down = w.clone();
        up[k] += h;
        down[k] -= h;
        let fd = (objective(&up, &x, &labels, classes, l2).0 - objective(&down, &x, &labels, classes, l2).0) / (2.0 * h);
        let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-8);
        grad_rel = grad_rel.max(rel);
    }
    ensure(grad_rel <= 1e-5, || format!("gradient vs finite differences {grad_rel:e} relative"))?;
    Ok(format!(
        "covariance {cov_rel:.1e} rel over 200 cases, eigen reconstruction {recon:.1e}, gradient {grad_rel:.1e} rel"
    ))
}

// ---------------------------------------------------------------------------
// 5

fn zshift_dg() -> Outcome {
    let cfg = config("zshift.toml");
    ensure(!cfg.realign_grid, || "zshift.toml must leave the grid in place".into())?;
    let report = run_dg_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure(report.failures.is_empty(), || format!("seed failures {:?}", report.failures))?;
    let shifted = cfg.test_domains.first().ok_or("no test domain")?.clone();
    let get = |domain: &str, fs: &str| {
        report
            .cell(domain, fs, None)
            .map(|c| c.per_seed.clone())
            .ok_or_else(|| format!("missing cell {domain}/{fs}"))
    };
    let g_in = get(IN_DOMAIN, "global")?;
    let b_in = get(IN_DOMAIN, "gblobs")?;
    let g_sh = get(&shifted, "global")?;
    let b_sh = get(&shifted, "gblobs")?;
    ensure(g_in.len() == 5, || format!("{} seeds, expected 5", g_in.len()))?;
    let mut problems = Vec::new();
    for s in 0..g_in.len() {
        let gap = (g_in[s] - b_in[s]).abs() * 100.0;
        let margin = (b_sh[s] - g_sh[s]) * 100.0;
        let drop = (b_in[s] - b_sh[s]) * 100.0;
        if gap > 5.0 {
            problems.push(format!("seed {s}: in-domain gap {gap:.1}"));
        }
        if margin < 15.0 {
            problems.push(format!("seed {s}: shifted margin {margin:.1}"));
        }
        if drop > 3.0 {
            problems.push(format!("seed {s}: gblobs drop {drop:.1}"));
        }
    }
    let detail = format!(
        "in-domain global {} gblobs {}; {shifted} global {} gblobs {}",
        fmt_seeds(&g_in),
        fmt_seeds(&b_in),
        fmt_seeds(&g_sh),
        fmt_seeds(&b_sh)
    );
    ensure(problems.is_empty(), || format!("{}; {detail}", problems.join(", ")))?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 6

fn coshifted_sigma() -> Outcome {
    let cfg = config("zshift_realigned.toml");
    ensure(cfg.realign_grid, || "zshift_realigned.toml must realign the grid".into())?;
    let spec = cfg.scene_spec().map_err(|e| e.to_string())?;
    let grid = cfg.grid().map_err(|e| e.to_string())?;
    let (_, dom) = cfg.test_domains().map_err(|e| e.to_string())?.into_iter().next().ok_or("no test domain")?;
    let moved_grid = grid.shifted([0.0, 0.0, dom.z_offset]).map_err(|e| e.to_string())?;
    let enc: EncoderSpec = "sigma".parse().map_err(|e: Error| e.to_string())?;

    let mut worst = 0.0f64;
    let mut rows = 0;
    for k in 0..20u64 {
        let base = generate_scene(&spec, rng::derive(600, k)).map_err(|e| e.to_string())?;
        let moved = apply_domain(&base, &dom, rng::derive(601, k)).map_err(|e| e.to_string())?;
        let a = encode_voxels(&base.cloud, &voxelize(&base.cloud, &grid), &enc).map_err(|e| e.to_string())?;
        let b = encode_voxels(&moved.cloud, &voxelize(&moved.cloud, &moved_grid), &enc).map_err(|e| e.to_string())?;
        ensure(a.coords() == b.coords(), || format!("scene {k}: voxel layouts differ"))?;
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max((x - y).abs());
        }
        rows += a.len();
    }
    ensure(worst <= 1e-6, || format!("max sigma difference {worst:e}"))?;

    let report = run_dg_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure(report.failures.is_empty(), || format!("seed failures {:?}", report.failures))?;
    let mut compared = 0;
    for c in report.cells.iter().filter(|c| c.domain != IN_DOMAIN) {
        let base = report.cell(IN_DOMAIN, &c.feature_set, None).ok_or("missing in-domain cell")?;
        ensure(base.per_seed == c.per_seed, || {
            format!("{}: in-domain {} vs {} {}", c.feature_set, fmt_seeds(&base.per_seed), c.domain, fmt_seeds(&c.per_seed))
        })?;
        compared += 1;
    }
    ensure(compared > 0, || "no shifted cells".into())?;
    let sig = report.cell(IN_DOMAIN, "sigma", None).map(|c| fmt_seeds(&c.per_seed)).unwrap_or_default();
    Ok(format!("{rows} voxel rows, max difference {worst:.1e}; accuracies identical {sig}"))
}

// ---------------------------------------------------------------------------
// 7

fn curve_non_increasing(report: &Report) -> Vec<String> {
    let mut bad = Vec::new();
    for c in &report.curves {
        for k in 1..c.x.len() {
            let tol = 2.0 * c.std[k].max(c.std[k - 1]);
            if c.mean[k] > c.mean[k - 1] + tol {
                bad.push(format!("{} rises {:.3} -> {:.3} at {}", c.feature_set, c.mean[k - 1], c.mean[k], c.x[k]));
            }
        }
    }
    bad
}

fn sparsity_sweep() -> Outcome {
    let cfg = config("zshift.toml");
    let report = run_sparsity_sweep(&cfg).map_err(|e| e.to_string())?;
    ensure(report.failures.is_empty(), || format!("seed failures {:?}", report.failures))?;
    ensure(report.seeds.len() == 5, || "expected 5 seeds".into())?;
    let bad = curve_non_increasing(&report);
    ensure(bad.is_empty(), || bad.join("; "))?;

    let occ: Vec<f64> = report.occupancy.iter().map(|o| o.fraction_at_most_2).collect();
    ensure(occ.len() == cfg.keep_fractions.len(), || "missing occupancy histograms".into())?;
    ensure(occ.windows(2).all(|w| w[1] > w[0]), || format!("fraction of <=2-point voxels not increasing: {occ:?}"))?;

    let curves: Vec<String> = report
        .curves
        .iter()
        .map(|c| format!("{} {}", c.feature_set, fmt_seeds(&c.mean)))
        .collect();
    Ok(format!("{}; <=2-point voxel fraction {}", curves.join(", "), fmt_seeds(&occ)))
}

// ---------------------------------------------------------------------------
// 8

fn voxel_sweep() -> Outcome {
    let cfg = config("zshift.toml");
    let report = run_voxel_sweep(&cfg).map_err(|e| e.to_string())?;
    ensure(report.failures.is_empty(), || format!("seed failures {:?}", report.failures))?;
    let lo = cfg.voxel_sizes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cfg.voxel_sizes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cell = |fs: &str, x: f64| {
        report
            .cells
            .iter()
            .find(|c| c.feature_set == fs && c.x == Some(x))
            .ok_or_else(|| format!("missing cell {fs} at {x}"))
    };
    let mut problems = Vec::new();
    let g_hi = cell("global", hi)?;
    let b_hi = cell("gblobs", hi)?;
    let losing: Vec<usize> = (0..b_hi.per_seed.len()).filter(|&s| b_hi.per_seed[s] < g_hi.per_seed[s]).collect();
    if !losing.is_empty() {
        problems.push(format!(
            "at {hi} m gblobs < global on seeds {losing:?} (gblobs {}, global {})",
            fmt_seeds(&b_hi.per_seed),
            fmt_seeds(&g_hi.per_seed)
        ));
    }
    let mut trend = Vec::new();
    for fs in ["global", "gblobs"] {
        let (a, b) = (cell(fs, lo)?, cell(fs, hi)?);
        if b.mean > a.mean + 2.0 * a.std {
            problems.push(format!("{fs} at {hi} m {:.3} > {:.3} + 2 x {:.3}", b.mean, a.mean, a.std));
        }
        trend.push(format!("{fs} {:.3} -> {:.3}", a.mean, b.mean));
    }
    let detail = format!("{lo} m -> {hi} m: {}", trend.join(", "));
    ensure(problems.is_empty(), || format!("{}; {detail}", problems.join("; ")))?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 9

fn throughput() -> Outcome {
    let cloud = bench_cloud(160_000, 0).map_err(|e| e.to_string())?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let r = run_bench(&cloud, &GridSpec::waymo(5), &EncoderSpec::gblobs(), 4, 3).map_err(|e| e.to_string())?;
    let detail = format!(
        "{} points, {} rows: 1 thread {:.3} s, 4 threads {:.3} s, speedup {:.2}x on {cores} core(s), identical {}",
        r.points, r.rows, r.secs_single, r.secs_multi, r.speedup, r.identical
    );
    let mut problems = Vec::new();
    if r.secs_single >= 1.0 {
        problems.push("single-threaded run over 1 s".to_string());
    }
    if !r.identical {
        problems.push("outputs differ between thread counts".to_string());
    }
    if r.speedup < 2.0 {
        problems.push(format!("speedup {:.2}x below 2x", r.speedup));
    }
    ensure(problems.is_empty(), || format!("{}; {detail}", problems.join(", ")))?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 10

fn expect_malformed(what: &str, r: gblobs::Result<impl std::fmt::Debug>) -> Result<(), String> {
    match r {
        Err(Error::MalformedFile { .. }) => Ok(()),
        other => Err(format!("{what}: expected MalformedFile, got {other:?}")),
    }
}

fn round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let at = |name: &str| -> PathBuf { dir.path().join(name) };
    let mut r = rng::seeded(100);

    // KITTI: a file of valid f32 records reads and writes back byte for byte.
    let bytes: Vec<u8> = (0..4000)
        .flat_map(|_| (r.random_range(-80.0f32..80.0)).to_le_bytes())
        .collect();
    std::fs::write(at("a.bin"), &bytes).map_err(|e| e.to_string())?;
    let cloud = load_kitti_bin(at("a.bin")).map_err(|e| e.to_string())?;
    write_kitti_bin(&cloud, at("b.bin")).map_err(|e| e.to_string())?;
    let back = std::fs::read(at("b.bin")).map_err(|e| e.to_string())?;
    ensure(back == bytes && cloud.len() == 1000, || "KITTI write(read(file)) differs".into())?;

    // Feature container: write(read(file)) is the identity.
    let fs = encode_cloud(&cloud, &GridSpec::waymo(5), &EncoderSpec::gblobs()).map_err(|e| e.to_string())?;
    write_feature_set(&fs, at("a.gblf")).map_err(|e| e.to_string())?;
    let first = std::fs::read(at("a.gblf")).map_err(|e| e.to_string())?;
    let read: FeatureSet = read_feature_set(at("a.gblf")).map_err(|e| e.to_string())?;
    ensure(encode_feature_set(&read) == first, || "container write(read(file)) differs".into())?;

    // Malformed inputs.
    let origin = Path::new("mem");
    expect_malformed("KITTI length not a multiple of 16", parse_kitti_bin(&bytes[..bytes.len() - 5], origin))?;
    let mut nan = bytes.clone();
    nan[..4].copy_from_slice(&f32::NAN.to_le_bytes());
    expect_malformed("KITTI NaN coordinate", parse_kitti_bin(&nan, origin))?;
    expect_malformed("container truncated", decode_feature_set(&first[..first.len() - 3], origin))?;
    let mut extra = first.clone();
    extra.extend_from_slice(&[0; 12]);
    expect_malformed("container trailing bytes", decode_feature_set(&extra, origin))?;
    let mut magic = first.clone();
    magic[0] = b'X';
    expect_malformed("container magic", decode_feature_set(&magic, origin))?;
    let mut version = first.clone();
    version[4] = 9;
    expect_malformed("container version", decode_feature_set(&version, origin))?;
    std::fs::write(at("bad.csv"), "0,0,0\n1,2,x\n").map_err(|e| e.to_string())?;
    match load_xyz_csv(at("bad.csv")) {
        Err(Error::MalformedFile { location: Some(2), .. }) => {}
        other => return Err(format!("CSV bad number: expected MalformedFile at line 2, got {other:?}")),
    }
    match load_kitti_bin(at("missing.bin")) {
        Err(Error::Io { .. }) => {}
        other => return Err(format!("missing file: expected Io, got {other:?}")),
    }
    Ok(format!("KITTI and container identities hold ({} rows); 8 bad inputs rejected with the expected error class", fs.len()))
}
