//! Acceptance run: every criterion prints one PASS/FAIL line, and the
//! process exits non-zero if any of them fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use zscan::classify::svm::{train_svm, Kernel, SvmParams};
use zscan::classify::{row_of, Classifier, ClassifierKind, TrainerConfig};
use zscan::cmos::{
    gate_impedance, parasitic_capacitance, r_effective, r_linear, r_saturation, synthesize_dataset,
    CapacitanceParams, GateBranch, MosfetParams, Polarity, SimulatorConfig,
};
use zscan::features::fit_pca;
use zscan::metrics::{
    accuracy_overall, confusion, f1_macro, precision_macro, recall_macro, specificity_macro,
};
use zscan::pipeline::{self, PipelineConfig};
use zscan::rf::{
    feature_matrix_subset, impedance_to_reflection, parse_touchstone, reflection_to_impedance, LabeledDataset,
    ReflectionCoefficient, RfError,
};
use zscan::{io, seed};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn conversion_round_trip() -> Outcome {
    let mut rng = seed::rng(1);
    let taus: Vec<Complex64> = (0..10_000)
        .map(|_| {
            // uniform over the disk of radius 0.99
            let r = 0.99 * rng.random::<f64>().sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, th)
        })
        .collect();
    let t = Instant::now();
    let mut worst = 0.0f64;
    for &tau in &taus {
        let z = reflection_to_impedance(ReflectionCoefficient(tau), 50.0).unwrap();
        let back = impedance_to_reflection(z, 50.0).unwrap().0;
        worst = worst.max((back - tau).norm() / tau.norm());
    }
    let el = t.elapsed();
    outcome(worst <= 1e-12 && el < Duration::from_secs(1), format!("max relative error {worst:.2e}, {}", secs(el)))
}

fn touchstone_conformance() -> Outcome {
    let freqs = [1.0e6, 2.5e7, 3.0e8, 1.2e9, 3.9e9];
    let gamma = [
        Complex64::new(0.2, -0.1),
        Complex64::new(-0.5, 0.3),
        Complex64::new(0.01, 0.9),
        Complex64::new(-0.7, -0.6),
        Complex64::new(0.4, 0.0),
    ];
    let units = [("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)];
    let mut worst = 0.0f64;
    let mut parsed = 0;
    for (unit, scale) in units {
        for fmt in ["RI", "MA", "DB"] {
            let mut text = format!("! fixture {fmt} {unit}\n# {unit} S {fmt} R 50\n");
            for (f, g) in freqs.iter().zip(&gamma) {
                let (a, b) = match fmt {
                    "RI" => (g.re, g.im),
                    "MA" => (g.norm(), g.arg().to_degrees()),
                    _ => (20.0 * g.norm().log10(), g.arg().to_degrees()),
                };
                text.push_str(&format!("{} {a} {b}\n", f / scale));
            }
            let trace = match parse_touchstone(text.as_bytes()) {
                Ok(t) => t,
                Err(e) => return outcome(false, format!("{fmt}/{unit} failed to parse: {e}")),
            };
            for (i, (f, g)) in freqs.iter().zip(&gamma).enumerate() {
                worst = worst.max(rel(trace.frequencies()[i], *f));
                worst = worst.max((trace.gamma()[i] - g).norm());
            }
            parsed += 1;
        }
    }

    let malformed = [
        "1e9 0.1 0.0\n",
        "# GHz S RI R 50\n1.0 0.1 0.0\n0.5 0.1 0.0\n",
        "# GHz S RI R 50\n1.0 0.1 0.0 0.3\n",
        "# GHz S RI R 50\n1.0 0.1 0.0 0.2 0.0 0.2 0.0 0.1 0.0\n",
    ];
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for m in malformed {
        let kind = match parse_touchstone(m.as_bytes()) {
            Err(RfError::MalformedHeader(_)) => "MalformedHeader",
            Err(RfError::NonMonotoneFrequencies { .. }) => "NonMonotoneFrequencies",
            Err(RfError::ArityError { .. }) => "ArityError",
            Err(RfError::UnsupportedFormat(_)) => "UnsupportedFormat",
            other => return outcome(false, format!("unexpected result {other:?}")),
        };
        *seen.entry(kind).or_default() += 1;
    }
    let each_once = seen.len() == 4 && seen.values().all(|&c| c == 1);
    outcome(
        worst <= 1e-9 && each_once,
        format!("{parsed} encodings agree within {worst:.2e}; errors {seen:?}"),
    )
}

fn cmos_oracle() -> Outcome {
    let p = MosfetParams {
        transconductance: 100e-6,
        aspect_ratio: 10.0,
        v_threshold: 0.5,
        v_drain: 1.5,
        v_source: 0.0,
        polarity: Polarity::Nmos,
    };
    let rl = r_linear(&p).unwrap();
    let rs = r_saturation(&p).unwrap();
    let re = r_effective(rl, rs);
    let gd = parasitic_capacitance(&CapacitanceParams { c_overlap: 1e-9, width: 2e-6, ..Default::default() })
        .unwrap()
        .c_gd;
    let db = parasitic_capacitance(&CapacitanceParams {
        k_bottom: 1.0,
        area_drain: 1e-12,
        cj_bottom: 1e-3,
        ..Default::default()
    })
    .unwrap()
    .c_db;
    let z = gate_impedance(&GateBranch::new(200.0, 1e-12).unwrap(), 1e9).0;
    let checks = [
        ("r_linear", rl, 0.5 / (0.375 * 1e-3)),
        ("r_saturation", rs, 1.5 / (0.5 * 1e-3)),
        ("r_effective", re, 0.5 * (0.5 / (0.375 * 1e-3) + 3000.0)),
        ("c_gd", gd, 4e-15),
        ("c_db", db, 1e-15),
        ("gate re", z.re, 200.0),
        ("gate im", z.im, -1000.0),
    ];
    let worst = checks.iter().map(|(_, got, want)| rel(*got, *want)).fold(0.0, f64::max);
    let bad: Vec<&str> = checks.iter().filter(|(_, g, w)| rel(*g, *w) > 1e-9).map(|(n, _, _)| *n).collect();
    outcome(bad.is_empty(), format!("worst relative error {worst:.2e}; failing {bad:?}"))
}

/// Two-pass Pearson written independently of the library.
fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

fn selection_invariant(ds: &LabeledDataset) -> Outcome {
    let t = Instant::now();
    let labels = ds.label_indices().unwrap();
    let cfg = PipelineConfig::default();
    let sel = match pipeline::select(ds, &labels, None, &cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("selection failed: {e}")),
    };
    let el = t.elapsed();
    let rows: Vec<usize> = (0..ds.len()).collect();
    let x = feature_matrix_subset(ds, cfg.representation, cfg.open_circuit_cap, &rows, &sel.kept_indices).values;
    let cols: Vec<Vec<f64>> = (0..x.ncols()).map(|j| x.column(j).iter().copied().collect()).collect();
    let mut worst = 0.0f64;
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            worst = worst.max(oracle_pearson(&cols[a], &cols[b]).abs());
        }
    }
    outcome(
        worst < 0.90 && el < Duration::from_secs(60),
        format!(
            "kept {} of {} (stage 1: {}), max kept-pair |r| {worst:.4}, {}",
            sel.stage2_count,
            sel.n_columns,
            sel.stage1_count,
            secs(el)
        ),
    )
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn pca_oracle() -> Outcome {
    let (n, d) = (200, 50);
    let mut rng = seed::rng(5);
    let latent = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mix = DMatrix::from_fn(d, d, |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        z * 0.8f64.powi(j as i32) + if i == j { 0.05 } else { 0.0 }
    });
    let x = &latent * mix.transpose();
    let model = fit_pca(&x, 0.95).unwrap();

    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..n).map(|i| (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect();
    let ev = jacobi_eigenvalues(cov);
    let total: f64 = ev.iter().map(|v| v.max(0.0)).sum();
    let worst = model
        .explained_variance_ratio
        .iter()
        .zip(&ev)
        .map(|(got, e)| rel(*got, e / total))
        .fold(0.0, f64::max);
    let cum = model.cumulative_ratio();
    outcome(
        worst <= 1e-6 && cum >= 0.95,
        format!("{} components, cumulative {cum:.4}, worst relative error {worst:.2e}", model.n_components()),
    )
}

fn metric_oracle() -> Outcome {
    let classes = vec!["A".to_string(), "B".to_string()];
    let cm = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], &classes).unwrap();
    let p = precision_macro(&cm).value;
    let r = recall_macro(&cm).unwrap();
    let s = specificity_macro(&cm).unwrap().value;
    let a = accuracy_overall(&cm);
    let f = f1_macro(p, r);
    let r4 = |v: f64| (v * 1e4).round() as i64;
    let got = [r4(p), r4(r), r4(s), r4(a), r4(f)];
    outcome(
        got == [8333, 7500, 7500, 7500, 7895],
        format!("precision {p:.4}, recall {r:.4}, specificity {s:.4}, accuracy {a:.4}, f1 {f:.4}"),
    )
}

/// KKT residuals recomputed from the stored machine: points that are not
/// support vectors have zero dual coefficient.
fn recomputed_kkt(x: &DMatrix<f64>, y: &[usize], m: &zscan::classify::SvmModel) -> f64 {
    let mut worst = 0.0f64;
    for mach in &m.machines {
        for i in 0..x.nrows() {
            if y[i] != mach.positive && y[i] != mach.negative {
                continue;
            }
            let row = row_of(x, i);
            let yi = if y[i] == mach.positive { 1.0 } else { -1.0 };
            let alpha: f64 = mach
                .support_vectors
                .iter()
                .zip(&mach.alpha)
                .zip(&mach.y)
                .filter(|((sv, _), &sy)| **sv == row && sy == yi)
                .map(|((_, &a), _)| a)
                .sum();
            let margin = yi * mach.decision(&m.kernel, &row);
            let v = if alpha <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if alpha >= m.c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
    }
    worst
}

fn svm_correctness() -> Outcome {
    let mut rng = seed::rng(7);
    let n = 30;
    let x = DMatrix::from_fn(2 * n, 2, |i, j| {
        let c = if i < n { [-2.0, -1.0] } else { [2.0, 1.5] };
        c[j] + 0.4 * rng.sample::<f64, _>(StandardNormal)
    });
    let y: Vec<usize> = (0..2 * n).map(|i| usize::from(i >= n)).collect();
    let p = SvmParams { kernel: Kernel::Polynomial { degree: 2, coef0: 1.0 }, c: 1.0, tol: 1e-3, max_iter: 1_000_000 };
    let m = train_svm(&x, &y, 2, &p).unwrap();
    let acc_sep = m.predict(&x).unwrap().iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
    let kkt = recomputed_kkt(&x, &y, &m).max(m.machines[0].kkt_residual);

    let xor = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    let yx = [0, 0, 1, 1];
    let px = SvmParams { kernel: Kernel::Gaussian { gamma: 1.0 }, c: 10.0, tol: 1e-3, max_iter: 1_000_000 };
    let mx = train_svm(&xor, &yx, 2, &px).unwrap();
    let acc_xor = mx.predict(&xor).unwrap().iter().zip(&yx).filter(|(a, b)| a == b).count() as f64 / 4.0;
    outcome(
        acc_sep == 1.0 && kkt <= 1e-3 && acc_xor == 1.0,
        format!("separable accuracy {acc_sep}, max KKT residual {kkt:.2e}, XOR accuracy {acc_xor}"),
    )
}

fn end_to_end(ds: &LabeledDataset) -> Outcome {
    let t = Instant::now();
    let mut best: Option<(ClassifierKind, f64, f64)> = None;
    let mut rows = Vec::new();
    for kind in ClassifierKind::ALL {
        let cfg = PipelineConfig { model: TrainerConfig::with_kind(kind), ..Default::default() };
        match pipeline::train(ds, &cfg, None) {
            Ok((_, r)) => {
                rows.push(format!("{kind} f1 {:.3} spec {:.3}", r.test.f1, r.test.specificity));
                if r.test.f1 >= 0.90 && r.test.specificity >= 0.95 && best.is_none_or(|b| r.test.f1 > b.1) {
                    best = Some((kind, r.test.f1, r.test.specificity));
                }
            }
            Err(e) => rows.push(format!("{kind} error {e}")),
        }
    }
    let el = t.elapsed();
    outcome(
        best.is_some() && el < Duration::from_secs(300),
        format!("{}; {}", rows.join(", "), secs(el)),
    )
}

fn determinism(ds: &LabeledDataset) -> Outcome {
    let cfg = PipelineConfig::default();
    let first = io::to_json_string(&pipeline::train(ds, &cfg, None).unwrap().1);
    let fresh = synthesize_dataset(&SimulatorConfig::default()).unwrap();
    let second = io::to_json_string(&pipeline::train(&fresh, &cfg, None).unwrap().1);
    outcome(first == second, format!("{} report bytes, identical: {}", first.len(), first == second))
}

fn chance_level(ds: &LabeledDataset) -> Outcome {
    let mut labels = ds.label_indices().unwrap();
    labels.shuffle(&mut seed::rng(seed::derive(0, seed::streams::SHUFFLE)));
    let cfg = PipelineConfig { model: TrainerConfig::with_kind(ClassifierKind::SvmGauss), ..Default::default() };
    match pipeline::train_with_labels(ds, &labels, &cfg, None) {
        Ok((_, r)) => {
            let acc = r.test.accuracy_overall;
            outcome((0.15..=0.35).contains(&acc), format!("held-out accuracy {acc:.4} with shuffled labels"))
        }
        Err(e) => outcome(false, format!("training failed: {e}")),
    }
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, o: Outcome| {
        eprintln!("[acceptance] {n:>2} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    record(1, "conversion round trip", conversion_round_trip());
    record(2, "touchstone conformance", touchstone_conformance());
    record(3, "cmos model oracle", cmos_oracle());

    let t = Instant::now();
    let corpus = synthesize_dataset(&SimulatorConfig::default()).unwrap();
    eprintln!("[acceptance]    default corpus: {} traces x {} points in {}", corpus.len(), corpus.grid().len(), secs(t.elapsed()));

    record(4, "selection invariant", selection_invariant(&corpus));
    record(5, "pca oracle", pca_oracle());
    record(6, "metric oracle", metric_oracle());
    record(7, "svm correctness", svm_correctness());
    record(8, "end-to-end mirror", end_to_end(&corpus));
    record(9, "determinism", determinism(&corpus));
    record(10, "chance-level sanity", chance_level(&corpus));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    eprintln!("[acceptance] {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("[acceptance] failing: {failed:?}");
        std::process::exit(1);
    }
}
