//! Soft-margin kernel SVM trained by SMO, combined one-vs-one.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{row_of, Classifier, ClassifyError};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-γ‖x − y‖²)`
    Gaussian { gamma: f64 },
    /// `(x·y + coef0)^degree`
    Polynomial { degree: u32, coef0: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Polynomial { degree, coef0 } => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot + coef0).powi(degree as i32)
            }
        }
    }
}

/// `1 / (d · var(X))` over every entry of the training matrix.
pub fn default_gamma(x: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

/// One binary machine separating `positive` (+1) from `negative` (−1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub positive: usize,
    pub negative: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficient of each support vector, in `(0, C]`.
    pub alpha: Vec<f64>,
    /// Label of each support vector, ±1.
    pub y: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Largest KKT violation over the training points after convergence.
    pub kkt_residual: f64,
}

impl BinarySvm {
    /// `Σ α_i y_i K(x_i, x) + b`; positive means `positive`.
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        let mut s = self.bias;
        for ((sv, a), y) in self.support_vectors.iter().zip(&self.alpha).zip(&self.y) {
            s += a * y * kernel.eval(sv, x);
        }
        s
    }
}

/// KKT violation of every training point given its dual coefficient and
/// decision value. Zero means the condition holds exactly.
pub fn kkt_residuals(alpha: &[f64], y: &[f64], decision: &[f64], c: f64, bound_eps: f64) -> Vec<f64> {
    alpha
        .iter()
        .zip(y)
        .zip(decision)
        .map(|((&a, &yi), &f)| {
            let m = yi * f;
            if a <= bound_eps {
                (1.0 - m).max(0.0)
            } else if a >= c - bound_eps {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            }
        })
        .collect()
}

struct Solution {
    alpha: Vec<f64>,
    bias: f64,
    iterations: usize,
}

/// Dual SMO with second-order working set selection. Stops when the maximal
/// violating pair gap drops to `tol`.
fn smo(k: &DMatrix<f64>, y: &[f64], p: &SvmParams) -> Result<Solution, ClassifyError> {
    let n = y.len();
    let c = p.c;
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let is_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iter = 0;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if is_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                if -y[t] * grad[t] > gmax || i == usize::MAX {
                    i = t;
                }
                gmax = -y[t] * grad[t];
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let mut a = k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -b * b / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin <= p.tol {
            break;
        }
        if iter >= p.max_iter {
            return Err(ClassifyError::NonConvergence { iterations: iter, residual: gmax - gmin });
        }
        iter += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    Ok(Solution { alpha, bias: -rho, iterations: iter })
}

fn train_binary(
    rows: &[Vec<f64>],
    y: &[f64],
    positive: usize,
    negative: usize,
    p: &SvmParams,
) -> Result<BinarySvm, ClassifyError> {
    let n = rows.len();
    let k = DMatrix::from_fn(n, n, |i, j| p.kernel.eval(&rows[i], &rows[j]));
    let sol = smo(&k, y, p)?;
    let decision: Vec<f64> = (0..n)
        .map(|i| sol.bias + (0..n).map(|j| sol.alpha[j] * y[j] * k[(j, i)]).sum::<f64>())
        .collect();
    let kkt_residual = kkt_residuals(&sol.alpha, y, &decision, p.c, 0.0).into_iter().fold(0.0, f64::max);

    let mut m = BinarySvm {
        positive,
        negative,
        support_vectors: Vec::new(),
        alpha: Vec::new(),
        y: Vec::new(),
        bias: sol.bias,
        iterations: sol.iterations,
        kkt_residual,
    };
    for i in 0..n {
        if sol.alpha[i] > 0.0 {
            m.support_vectors.push(rows[i].clone());
            m.alpha.push(sol.alpha[i]);
            m.y.push(y[i]);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub n_classes: usize,
    pub n_features: usize,
    /// One machine per class pair `(a, b)` with `a < b`, in lexicographic order.
    pub machines: Vec<BinarySvm>,
}

/// Trains `K(K − 1)/2` binary machines, one per class pair.
pub fn train_svm(x: &DMatrix<f64>, y: &[usize], n_classes: usize, p: &SvmParams) -> Result<SvmModel, ClassifyError> {
    if !(p.c > 0.0) || !(p.tol > 0.0) {
        return Err(ClassifyError::Config(format!("SVM needs C > 0 and tol > 0, got C={} tol={}", p.c, p.tol)));
    }
    if let Kernel::Gaussian { gamma } = p.kernel {
        if !(gamma > 0.0) {
            return Err(ClassifyError::Config(format!("gaussian gamma must be positive, got {gamma}")));
        }
    }
    let mut counts = vec![0usize; n_classes];
    y.iter().for_each(|&l| counts[l] += 1);
    if let Some((k, &c)) = counts.iter().enumerate().find(|(_, &c)| c == 0) {
        return Err(ClassifyError::TooFewPerClass { class: k, count: c, needed: 1 });
    }
    let pairs: Vec<(usize, usize)> =
        (0..n_classes).flat_map(|a| (a + 1..n_classes).map(move |b| (a, b))).collect();
    let machines = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (i, &l) in y.iter().enumerate() {
                if l == a || l == b {
                    rows.push(row_of(x, i));
                    labels.push(if l == a { 1.0 } else { -1.0 });
                }
            }
            train_binary(&rows, &labels, a, b, p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SvmModel { kernel: p.kernel, c: p.c, tol: p.tol, n_classes, n_features: x.ncols(), machines })
}

impl SvmModel {
    /// Per-class vote counts and summed signed decision values.
    pub fn votes(&self, x: &[f64]) -> (Vec<u32>, Vec<f64>) {
        let mut votes = vec![0u32; self.n_classes];
        let mut conf = vec![0.0; self.n_classes];
        for m in &self.machines {
            let d = m.decision(&self.kernel, x);
            if d > 0.0 {
                votes[m.positive] += 1;
            } else {
                votes[m.negative] += 1;
            }
            conf[m.positive] += d;
            conf[m.negative] -= d;
        }
        (votes, conf)
    }
}

impl Classifier for SvmModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> usize {
        let (votes, conf) = self.votes(x);
        let mut best = 0;
        for k in 1..self.n_classes {
            if votes[k] > votes[best] || (votes[k] == votes[best] && conf[k] > conf[best]) {
                best = k;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn params(kernel: Kernel) -> SvmParams {
        SvmParams { kernel, c: DEFAULT_C, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }

    fn blobs(seed: u64, n: usize, centers: &[[f64; 2]], spread: f64) -> (DMatrix<f64>, Vec<usize>) {
        let mut rng = crate::seed::rng(seed);
        let x = DMatrix::from_fn(n * centers.len(), 2, |i, j| {
            centers[i / n][j] + spread * rng.sample::<f64, _>(StandardNormal)
        });
        (x, (0..n * centers.len()).map(|i| i / n).collect())
    }

    #[test]
    fn kernel_values() {
        let g = Kernel::Gaussian { gamma: 0.5 };
        assert_eq!(g.eval(&[1.0, 2.0], &[1.0, 2.0]), 1.0);
        assert!((g.eval(&[0.0, 0.0], &[1.0, 1.0]) - (-1.0f64).exp()).abs() < 1e-15);
        let p2 = Kernel::Polynomial { degree: 2, coef0: 1.0 };
        assert_eq!(p2.eval(&[1.0, 2.0], &[3.0, -1.0]), 4.0);
        let p3 = Kernel::Polynomial { degree: 3, coef0: 1.0 };
        assert_eq!(p3.eval(&[1.0, 2.0], &[3.0, -1.0]), 8.0);
    }

    #[test]
    fn linearly_separable_pair_has_zero_training_error() {
        let (x, y) = blobs(1, 40, &[[-3.0, 0.0], [3.0, 0.0]], 0.5);
        let m = train_svm(&x, &y, 2, &params(Kernel::Polynomial { degree: 2, coef0: 1.0 })).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
        assert!(m.machines[0].kkt_residual <= DEFAULT_TOL);
    }

    #[test]
    fn dual_constraints_hold() {
        let (x, y) = blobs(2, 60, &[[0.0, 0.0], [1.5, 1.0], [0.0, 2.0]], 1.0);
        for kernel in [
            Kernel::Gaussian { gamma: default_gamma(&x) },
            Kernel::Polynomial { degree: 2, coef0: 1.0 },
            Kernel::Polynomial { degree: 3, coef0: 1.0 },
        ] {
            let m = train_svm(&x, &y, 3, &params(kernel)).unwrap();
            assert_eq!(m.machines.len(), 3);
            for mach in &m.machines {
                assert!(mach.alpha.iter().all(|&a| a > 0.0 && a <= m.c));
                let s: f64 = mach.alpha.iter().zip(&mach.y).map(|(a, y)| a * y).sum();
                assert!(s.abs() < 1e-9, "{s}");
                assert!(mach.kkt_residual <= m.tol, "{}", mach.kkt_residual);
            }
        }
    }

    #[test]
    fn xor_with_gaussian_kernel() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let y = [0, 0, 1, 1];
        let p = SvmParams { c: 10.0, ..params(Kernel::Gaussian { gamma: 1.0 }) };
        let m = train_svm(&x, &y, 2, &p).unwrap();
        for i in 0..4 {
            let d = m.machines[0].decision(&m.kernel, &row_of(&x, i));
            assert_eq!(d > 0.0, y[i] == 0, "row {i}: {d}");
        }
        assert!(m.machines[0].kkt_residual <= m.tol);
    }

    #[test]
    fn contradictory_duplicates_hit_the_box_bound() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 5.0, -5.0]);
        let m = train_svm(&x, &[0, 1, 0, 1], 2, &params(Kernel::Gaussian { gamma: 1.0 })).unwrap();
        let mach = &m.machines[0];
        let at_origin: Vec<f64> = mach
            .support_vectors
            .iter()
            .zip(&mach.alpha)
            .filter(|(sv, _)| sv[0] == 0.0)
            .map(|(_, &a)| a)
            .collect();
        assert_eq!(at_origin.len(), 2);
        assert!(at_origin.iter().all(|&a| (a - m.c).abs() < 1e-12));
    }

    #[test]
    fn one_vs_one_pair_count() {
        let (x, y) = blobs(3, 20, &[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0]], 0.5);
        let m = train_svm(&x, &y, 4, &params(Kernel::Gaussian { gamma: 0.5 })).unwrap();
        let pairs: Vec<(usize, usize)> = m.machines.iter().map(|b| (b.positive, b.negative)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let acc = m.predict(&x).unwrap().iter().zip(&y).filter(|(a, b)| a == b).count();
        assert_eq!(acc, 80);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let (x, y) = blobs(4, 30, &[[0.0, 0.0], [0.5, 0.0]], 1.0);
        let p = SvmParams { max_iter: 2, ..params(Kernel::Gaussian { gamma: 1.0 }) };
        assert!(matches!(train_svm(&x, &y, 2, &p), Err(ClassifyError::NonConvergence { .. })));
    }

    #[test]
    fn residuals_oracle() {
        let r = kkt_residuals(&[0.0, 1.0, 0.5], &[1.0, -1.0, 1.0], &[0.5, 2.0, 1.2], 1.0, 0.0);
        // free point with y·f = 1.2 is off the margin by 0.2
        assert_eq!(r, vec![0.5, 0.0, 0.19999999999999996]);
    }
}
