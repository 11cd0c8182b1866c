use serde::Serialize;

use crate::linalg::ComplexPoint;
use crate::precision::ExtendedReal;
use crate::problems::Spectrum;

use super::AnalysisError;

const MAX_EXCHANGES: usize = 200;
const CERTIFICATE_TOL: f64 = 1e-13;

/// `2((√κ − 1)/(√κ + 1))^k`.
pub fn kappa_bound(kappa: f64, k: usize) -> f64 {
    let s = kappa.sqrt();
    2.0 * ((s - 1.0) / (s + 1.0)).powi(k as i32)
}

/// Solution of the discrete min-max problem over `p ∈ P_k(0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinmaxSolution {
    pub value: f64,
    /// The `k + 1` reference eigenvalues on which the optimum equioscillates.
    pub active: Vec<f64>,
    /// The same nodes at full stored precision.
    #[serde(skip)]
    pub active_ext: Vec<ExtendedReal>,
    pub exchanges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub k: usize,
    pub kappa_bound: f64,
    pub minmax_bound: f64,
    pub active_eigenvalues: Vec<f64>,
    pub worstcase_formula_value: f64,
}

/// `κ`-bound, min-max value, active set and the closed-form value on it.
pub fn bound_report(spec: &Spectrum, k: usize) -> Result<BoundReport, AnalysisError> {
    let mm = minmax_bound(spec, k)?;
    let formula = if mm.active.len() >= 2 { worstcase_formula_ext(&mm.active_ext)? } else { mm.value };
    Ok(BoundReport {
        k,
        kappa_bound: kappa_bound(spec.condition_number(), k),
        minmax_bound: mm.value,
        active_eigenvalues: mm.active,
        worstcase_formula_value: formula,
    })
}

/// `(Σ_i Π_{j≠i} λ_j/|λ_j − λ_i|)⁻¹`, the levelled error of the optimal
/// polynomial on `k + 1` points.
pub fn worstcase_formula(active: &[f64]) -> Result<f64, AnalysisError> {
    let pts: Vec<ExtendedReal> = active.iter().map(|&v| v.into()).collect();
    worstcase_formula_ext(&pts)
}

/// [`worstcase_formula`] on extended-precision nodes.
pub fn worstcase_formula_ext(active: &[ExtendedReal]) -> Result<f64, AnalysisError> {
    if active.iter().any(|&v| !(v > ExtendedReal::ZERO)) {
        return Err(AnalysisError::NotPositive);
    }
    let mut sorted = active.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(AnalysisError::DuplicatePoints);
    }
    Ok(levelled_error(active).hi())
}

fn levelled_error(pts: &[ExtendedReal]) -> ExtendedReal {
    let mut sum = ExtendedReal::ZERO;
    for (i, &xi) in pts.iter().enumerate() {
        // Interleave factors above and below one so partial products stay
        // in range.
        let mut big = Vec::new();
        let mut small = Vec::new();
        for (j, &xj) in pts.iter().enumerate() {
            if j != i {
                let f = xj / (xj - xi).abs();
                if f >= ExtendedReal::ONE {
                    big.push(f)
                } else {
                    small.push(f)
                }
            }
        }
        let mut term = ExtendedReal::ONE;
        while !(big.is_empty() && small.is_empty()) {
            let from_small = if term >= ExtendedReal::ONE { !small.is_empty() } else { big.is_empty() };
            let f = if from_small { small.pop() } else { big.pop() };
            term *= f.expect("nonempty");
        }
        sum += term;
    }
    if sum.is_finite() {
        ExtendedReal::ONE / sum
    } else {
        ExtendedReal::ZERO
    }
}

/// Levelled polynomial on a reference set in barycentric form, evaluated in
/// extended precision: `p(x_i) = (−1)^i h`, `p(0) = 1`.
struct Levelled {
    nodes: Vec<ExtendedReal>,
    weights: Vec<ExtendedReal>,
    h: ExtendedReal,
}

impl Levelled {
    fn new(nodes: Vec<ExtendedReal>) -> Self {
        let cap = (*nodes.last().expect("nonempty") - nodes[0]).mul_f64(0.25);
        let weights = (0..nodes.len())
            .map(|i| {
                let mut w = ExtendedReal::ONE;
                for j in 0..nodes.len() {
                    if j != i {
                        w *= (nodes[i] - nodes[j]) / cap;
                    }
                }
                ExtendedReal::ONE / w
            })
            .collect();
        let h = levelled_error(&nodes);
        Self { nodes, weights, h }
    }

    fn eval(&self, x: ExtendedReal) -> ExtendedReal {
        let (mut num, mut den) = (ExtendedReal::ZERO, ExtendedReal::ZERO);
        for (i, (&xi, &wi)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let d = x - xi;
            let y = if i % 2 == 0 { self.h } else { -self.h };
            if d == ExtendedReal::ZERO {
                return y;
            }
            let t = wi / d;
            num += t * y;
            den += t;
        }
        num / den
    }
}

/// `min_{p ∈ P_k(0)} max_i |p(λ_i)|` over the distinct eigenvalues, by
/// single-point Remez exchange on the discrete set.
pub fn minmax_bound(spec: &Spectrum, k: usize) -> Result<MinmaxSolution, AnalysisError> {
    if !spec.is_positive() {
        return Err(AnalysisError::NotPositive);
    }
    let pts = spec.distinct();
    let m = pts.len();
    if k == 0 {
        return Ok(MinmaxSolution { value: 1.0, active: vec![], active_ext: vec![], exchanges: 0 });
    }
    if k >= m {
        return Ok(MinmaxSolution { value: 0.0, active: vec![], active_ext: vec![], exchanges: 0 });
    }
    let mut reference = initial_reference(&pts, k);
    let mut best = ExtendedReal::ZERO;
    let mut seen = std::collections::HashSet::new();
    for exchanges in 0..=MAX_EXCHANGES {
        let lev = Levelled::new(reference.iter().map(|&i| pts[i]).collect());
        let h = lev.h;
        if h == ExtendedReal::ZERO {
            return Ok(solution(0.0, &pts, &reference, exchanges));
        }
        let (mut worst, mut at, mut sign) = (ExtendedReal::ZERO, 0, false);
        for (i, &x) in pts.iter().enumerate() {
            let v = lev.eval(x);
            if v.abs() > worst {
                (worst, at, sign) = (v.abs(), i, v.is_negative());
            }
        }
        let gap = ((worst - h) / h).hi();
        if gap <= CERTIFICATE_TOL {
            return Ok(solution(h.hi(), &pts, &reference, exchanges));
        }
        let stalled = h < best * ExtendedReal::from(1.0 - CERTIFICATE_TOL) || !seen.insert(reference.clone());
        if stalled || exchanges == MAX_EXCHANGES {
            let value = if h > best { h } else { best };
            return Err(AnalysisError::RemezStagnation { value: value.hi(), gap, exchanges });
        }
        if h > best {
            best = h;
        }
        exchange(&mut reference, at, sign);
    }
    unreachable!("loop returns")
}

fn solution(value: f64, pts: &[ExtendedReal], idx: &[usize], exchanges: usize) -> MinmaxSolution {
    let active_ext: Vec<ExtendedReal> = idx.iter().map(|&i| pts[i]).collect();
    MinmaxSolution { value, active: active_ext.iter().map(|v| v.hi()).collect(), active_ext, exchanges }
}

/// Node signs alternate `+, −, +, …`; `negative` is the sign of `p` at the
/// new point.
fn exchange(reference: &mut Vec<usize>, new: usize, negative: bool) {
    let node_negative = |pos: usize| pos % 2 == 1;
    let last = reference.len() - 1;
    if new < reference[0] {
        if node_negative(0) == negative {
            reference[0] = new;
        } else {
            reference.pop();
            reference.insert(0, new);
        }
    } else if new > reference[last] {
        if node_negative(last) == negative {
            reference[last] = new;
        } else {
            reference.remove(0);
            reference.push(new);
        }
    } else {
        let pos = reference.partition_point(|&r| r < new);
        // `new` lies strictly between nodes pos − 1 and pos.
        if node_negative(pos) == negative {
            reference[pos] = new;
        } else {
            reference[pos - 1] = new;
        }
    }
}

/// Points nearest the Chebyshev extrema of degree `k` on `[λ_min, λ_max]`.
fn initial_reference(pts: &[ExtendedReal], k: usize) -> Vec<usize> {
    let (a, b) = (pts[0].hi(), pts[pts.len() - 1].hi());
    let mut used = vec![false; pts.len()];
    let mut out = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let t = -(std::f64::consts::PI * i as f64 / k as f64).cos();
        let target = 0.5 * (a + b) + 0.5 * (b - a) * t;
        let best = (0..pts.len())
            .filter(|&j| !used[j])
            .min_by(|&x, &y| (pts[x].hi() - target).abs().total_cmp(&(pts[y].hi() - target).abs()))
            .expect("k < number of points");
        used[best] = true;
        out.push(best);
    }
    out.sort_unstable();
    out
}

/// `(ρ/|c|)^k` for eigenvalues in the disk of radius `ρ` around `c`.
pub fn disk_bound(center: ComplexPoint, radius: f64, k: usize) -> Result<f64, AnalysisError> {
    let c = center.abs();
    if !(radius < c) {
        return Err(AnalysisError::OriginInDisk { radius, center: c });
    }
    Ok((radius / c).powi(k as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralBound {
    /// `κ(X)` times the discrete real min-max value.
    RealMinmax { value: f64 },
    /// `κ(X)` times the disk bound for the disk centered at the eigenvalue
    /// centroid with radius reaching the farthest eigenvalue.
    Disk { value: f64, center: ComplexPoint, radius: f64 },
}

impl SpectralBound {
    pub fn value(&self) -> f64 {
        match self {
            Self::RealMinmax { value } | Self::Disk { value, .. } => *value,
        }
    }
}

/// `κ(X) · min_p max_i |p(λ_i)|`, solved for real spectra of one sign and
/// replaced by an enclosing-disk estimate otherwise.
pub fn gmres_spectral_bound(eigens: &[ComplexPoint], kappa_x: f64, k: usize) -> Result<SpectralBound, AnalysisError> {
    if eigens.is_empty() || eigens.iter().any(|z| z.re == 0.0 && z.im == 0.0) {
        return Err(AnalysisError::ZeroEigenvalue);
    }
    let real = eigens.iter().all(|z| z.im == 0.0);
    let positive = eigens.iter().all(|z| z.re > 0.0);
    let negative = eigens.iter().all(|z| z.re < 0.0);
    if real && (positive || negative) {
        let mut v: Vec<f64> = eigens.iter().map(|z| z.re.abs()).collect();
        v.sort_by(f64::total_cmp);
        let spec = Spectrum::from_f64(&v)?;
        return Ok(SpectralBound::RealMinmax { value: kappa_x * minmax_bound(&spec, k)?.value });
    }
    let n = eigens.len() as f64;
    let center =
        ComplexPoint::new(eigens.iter().map(|z| z.re).sum::<f64>() / n, eigens.iter().map(|z| z.im).sum::<f64>() / n);
    let radius = eigens.iter().map(|z| z.distance(center)).fold(0.0, f64::max);
    let value = kappa_x * disk_bound(center, radius, k)?;
    Ok(SpectralBound::Disk { value, center, radius })
}
