use super::MlError;

const TOLERANCE: f64 = 1e-8;
const MAX_ITERS: usize = 10_000;

/// Two-component PCA fitted on one reference window.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
    pub eigenvalues: [f64; 2],
}

impl Pca {
    /// Power iteration with deflation on the sample covariance.
    pub fn fit(xs: &[Vec<f64>]) -> Result<Self, MlError> {
        let n = xs.len();
        let dims = xs.first().map(Vec::len).ok_or(MlError::NoSamples)?;
        if let Some(x) = xs.iter().find(|x| x.len() != dims) {
            return Err(MlError::DimensionMismatch { expected: dims, found: x.len() });
        }
        if n < 3 {
            return Err(MlError::Degenerate(format!("{n} samples cannot span two components")));
        }
        let mut mean = vec![0.0; dims];
        for x in xs {
            mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n as f64);
        }
        let mut cov = vec![vec![0.0; dims]; dims];
        for x in xs {
            let d: Vec<f64> = x.iter().zip(&mean).map(|(v, m)| v - m).collect();
            for i in 0..dims {
                if d[i] == 0.0 {
                    continue;
                }
                for j in i..dims {
                    cov[i][j] += d[i] * d[j];
                }
            }
        }
        for i in 0..dims {
            for j in i..dims {
                cov[i][j] /= (n - 1) as f64;
                cov[j][i] = cov[i][j];
            }
        }
        let trace: f64 = (0..dims).map(|i| cov[i][i]).sum();
        let floor = 1e-12 * trace.max(f64::MIN_POSITIVE);

        let (v1, l1) = dominant(&cov, &[]);
        if l1 <= floor || trace <= 0.0 {
            return Err(MlError::Degenerate("covariance is zero".into()));
        }
        for i in 0..dims {
            for j in 0..dims {
                cov[i][j] -= l1 * v1[i] * v1[j];
            }
        }
        let (v2, l2) = dominant(&cov, std::slice::from_ref(&v1));
        if l2 <= floor {
            return Err(MlError::Degenerate("covariance has rank < 2".into()));
        }
        Ok(Pca { mean, components: [v1, v2], eigenvalues: [l1, l2] })
    }

    pub fn project(&self, x: &[f64]) -> [f64; 2] {
        let score = |c: &[f64]| x.iter().zip(&self.mean).zip(c).map(|((v, m), c)| (v - m) * c).sum();
        [score(&self.components[0]), score(&self.components[1])]
    }
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
    }
}

fn unit(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    n
}

/// Leading eigenpair of a symmetric PSD matrix, orthogonal to `against`.
/// The sign is fixed so the largest-magnitude coordinate is positive.
fn dominant(m: &[Vec<f64>], against: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let dims = m.len();
    // deterministic, non-symmetric start so no eigenvector is missed by accident
    let mut v: Vec<f64> = (0..dims).map(|i| 1.0 + (i as f64 * 0.618_033_988_7).fract()).collect();
    orthogonalize(&mut v, against);
    unit(&mut v);
    for _ in 0..MAX_ITERS {
        let mut next = mat_vec(m, &v);
        orthogonalize(&mut next, against);
        if unit(&mut next) == 0.0 {
            return (v, 0.0);
        }
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < TOLERANCE {
            break;
        }
    }
    let lambda: f64 = mat_vec(m, &v).iter().zip(&v).map(|(a, b)| a * b).sum();
    let lead = v.iter().copied().fold(0.0f64, |acc, a| if a.abs() > acc.abs() { a } else { acc });
    if lead < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
    (v, lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub pca: Pca,
    /// Per-window centroid in principal-component scores.
    pub raw: Vec<[f64; 2]>,
    /// `raw` scaled per component by the largest magnitude, into `[-1, 1]`.
    pub normalized: Vec<[f64; 2]>,
}

/// Fits PCA on the first window and tracks every window's centroid.
pub fn drift_diagnostic(windows: &[Vec<Vec<f64>>]) -> Result<Diagnostic, MlError> {
    let first = windows.first().ok_or(MlError::NoSamples)?;
    let pca = Pca::fit(first)?;
    let mut raw = Vec::with_capacity(windows.len());
    for w in windows {
        if w.is_empty() {
            return Err(MlError::NoSamples);
        }
        let mut c = [0.0; 2];
        for x in w {
            let p = pca.project(x);
            c[0] += p[0] / w.len() as f64;
            c[1] += p[1] / w.len() as f64;
        }
        raw.push(c);
    }
    let scale = [0, 1].map(|k| raw.iter().map(|c| c[k].abs()).fold(0.0, f64::max));
    let normalized = raw
        .iter()
        .map(|c| [0, 1].map(|k| if scale[k] > 0.0 { c[k] / scale[k] } else { 0.0 }))
        .collect();
    Ok(Diagnostic { pca, raw, normalized })
}
