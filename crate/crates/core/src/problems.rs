//! Analytical benchmark problems: objective values, Jacobians and reference fronts.
//!
//! Decision vectors live in the unit box `[0, 1]^d`. LZLZK is natively defined on
//! `[-1, 1]^d`; it is evaluated at `z = 2x - 1`.
//!
//! | problem | m | default d | front |
//! |---------|---|-----------|-------|
//! | ZDT3    | 2 | 30        | five disconnected arcs |
//! | LZLZK   | 2 | 20        | connected, non-convex curve |
//! | DTLZ4   | 3 | 7         | unit-sphere octant, biased density |
//! | DTLZ5   | 3 | 7         | degenerate curve on the unit sphere |
//! | DTLZ7   | 3 | 22        | four disconnected patches |

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Row `i` holds `d f_i / d x_j` for every `j`.
pub type Jacobian = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProblemKind {
    Zdt3,
    Lzlzk,
    Dtlz4,
    Dtlz5,
    Dtlz7,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::Zdt3,
        ProblemKind::Lzlzk,
        ProblemKind::Dtlz4,
        ProblemKind::Dtlz5,
        ProblemKind::Dtlz7,
    ];

    pub fn objectives(self) -> usize {
        match self {
            ProblemKind::Zdt3 | ProblemKind::Lzlzk => 2,
            _ => 3,
        }
    }

    pub fn default_dim(self) -> usize {
        match self {
            ProblemKind::Zdt3 => 30,
            ProblemKind::Lzlzk => 20,
            ProblemKind::Dtlz4 | ProblemKind::Dtlz5 => 7,
            ProblemKind::Dtlz7 => 22,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Zdt3 => "ZDT3",
            ProblemKind::Lzlzk => "LZLZK",
            ProblemKind::Dtlz4 => "DTLZ4",
            ProblemKind::Dtlz5 => "DTLZ5",
            ProblemKind::Dtlz7 => "DTLZ7",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown problem '{s}'")))
    }
}

/// A benchmark problem with its decision-space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub d: usize,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Self {
        Self {
            kind,
            d: kind.default_dim(),
        }
    }

    pub fn with_dim(kind: ProblemKind, d: usize) -> Result<Self> {
        if d < kind.objectives() || (kind == ProblemKind::Zdt3 && d < 2) {
            return Err(Error::InvalidParameter(format!(
                "{kind} needs d >= {}, got {d}",
                kind.objectives()
            )));
        }
        Ok(Self { kind, d })
    }

    pub fn m(&self) -> usize {
        self.kind.objectives()
    }

    /// Hypervolume reference point used for this problem.
    pub fn reference_point(&self) -> Vec<f64> {
        match self.kind {
            ProblemKind::Zdt3 | ProblemKind::Lzlzk => vec![2.0, 2.0],
            ProblemKind::Dtlz4 | ProblemKind::Dtlz5 => vec![2.0, 2.0, 2.0],
            ProblemKind::Dtlz7 => vec![2.0, 2.0, 7.0],
        }
    }

    /// Componentwise minimum of the Pareto front.
    pub fn ideal_point(&self) -> Vec<f64> {
        match self.kind {
            ProblemKind::Zdt3 => {
                let (a, b) = ZDT3_SEGMENTS[4];
                let min = (0..=20_000)
                    .map(|k| zdt3_front_f2(a + (b - a) * k as f64 / 20_000.0))
                    .fold(f64::INFINITY, f64::min);
                vec![0.0, min]
            }
            ProblemKind::Dtlz7 => {
                let peak = dtlz7_intervals()
                    .iter()
                    .map(|&(_, hi)| dtlz7_phi(hi))
                    .fold(0.0, f64::max);
                vec![0.0, 0.0, 6.0 - 2.0 * peak]
            }
            _ => vec![0.0; self.m()],
        }
    }

    fn check_box(&self, x: &[f64]) -> Result<()> {
        check_dim(self.d, x.len())?;
        match x
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
        {
            Some((index, &value)) => Err(Error::OutOfBox { index, value }),
            None => Ok(()),
        }
    }

    /// Objective vector at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_box(x)?;
        Ok(match self.kind {
            ProblemKind::Zdt3 => zdt3(x, false).0,
            ProblemKind::Lzlzk => lzlzk(x, false).0,
            ProblemKind::Dtlz4 | ProblemKind::Dtlz5 => dtlz_sphere(self.kind, 3, x, false).0,
            ProblemKind::Dtlz7 => dtlz7(3, x, false).0,
        })
    }

    /// Objective vector and its `m x d` Jacobian at `x`.
    ///
    /// ZDT3's `d f2 / d x1` is `-inf` at `x1 = 0`.
    pub fn evaluate_with_gradient(&self, x: &[f64]) -> Result<(Vec<f64>, Jacobian)> {
        self.check_box(x)?;
        let (f, j) = match self.kind {
            ProblemKind::Zdt3 => zdt3(x, true),
            ProblemKind::Lzlzk => lzlzk(x, true),
            ProblemKind::Dtlz4 | ProblemKind::Dtlz5 => dtlz_sphere(self.kind, 3, x, true),
            ProblemKind::Dtlz7 => dtlz7(3, x, true),
        };
        Ok((f, j.expect("jacobian requested")))
    }

    /// Deterministic, evenly spread points on the Pareto front.
    ///
    /// Two-objective fronts and DTLZ5 return `n` points before the dominance
    /// filter; DTLZ4 returns the smallest simplex lattice with at least `n`
    /// points projected onto the sphere, DTLZ7 a `ceil(sqrt(n))^2` product grid
    /// over its non-dominated intervals.
    pub fn true_front(&self, n: usize) -> Vec<Vec<f64>> {
        let n = n.max(2);
        match self.kind {
            ProblemKind::Zdt3 => zdt3_front(n),
            ProblemKind::Lzlzk => linspace(-1.0, 1.0, n)
                .map(|s| {
                    vec![
                        1.0 - (-(s - 1.0).powi(2)).exp(),
                        1.0 - (-(s + 1.0).powi(2)).exp(),
                    ]
                })
                .collect(),
            ProblemKind::Dtlz4 => {
                let mut h = 1;
                while (h + 1) * (h + 2) / 2 < n {
                    h += 1;
                }
                crate::simplex::simplex_lattice(3, h)
                    .into_iter()
                    .map(|p| {
                        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                        p.iter().map(|v| v / norm).collect()
                    })
                    .collect()
            }
            ProblemKind::Dtlz5 => linspace(0.0, FRAC_PI_2, n)
                .map(|t| {
                    let c = t.cos() * FRAC_PI_4.cos();
                    vec![c, c, t.sin()]
                })
                .collect(),
            ProblemKind::Dtlz7 => {
                let q = (n as f64).sqrt().ceil() as usize;
                let axis = spread_over(dtlz7_intervals(), q);
                let mut out = Vec::with_capacity(q * q);
                for &a in &axis {
                    for &b in &axis {
                        out.push(vec![a, b, 6.0 - dtlz7_phi(a) - dtlz7_phi(b)]);
                    }
                }
                out
            }
        }
    }

    /// Default reference-front size: 1000 points for two objectives, 10000 for three.
    pub fn default_front_size(&self) -> usize {
        if self.m() == 2 {
            1000
        } else {
            10_000
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
}

/// `n` points over a union of intervals, allotted by interval length, endpoints included.
fn spread_over(intervals: &[(f64, f64)], n: usize) -> Vec<f64> {
    let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    let mut counts: Vec<usize> = intervals
        .iter()
        .map(|(a, b)| (((b - a) / total) * n as f64).round().max(2.0) as usize)
        .collect();
    // absorb rounding drift in the longest interval
    let longest = (0..intervals.len())
        .max_by(|&i, &j| {
            let li = intervals[i].1 - intervals[i].0;
            let lj = intervals[j].1 - intervals[j].0;
            li.total_cmp(&lj)
        })
        .unwrap_or(0);
    let assigned: usize = counts.iter().sum();
    if assigned > n {
        counts[longest] = counts[longest].saturating_sub(assigned - n).max(2);
    } else {
        counts[longest] += n - assigned;
    }
    intervals
        .iter()
        .zip(counts)
        .flat_map(|(&(a, b), c)| linspace(a, b, c))
        .collect()
}

/// Non-dominated `x1` intervals of ZDT3.
pub const ZDT3_SEGMENTS: [(f64, f64); 5] = [
    (0.0, 0.083_001_534_9),
    (0.182_228_728_0, 0.257_762_363_4),
    (0.409_313_674_8, 0.453_882_104_1),
    (0.618_396_794_4, 0.652_511_703_8),
    (0.823_331_798_3, 0.851_832_865_4),
];

fn zdt3_front_f2(f1: f64) -> f64 {
    1.0 - f1.sqrt() - f1 * (10.0 * PI * f1).sin()
}

fn zdt3_front(n: usize) -> Vec<Vec<f64>> {
    let pts: Vec<Vec<f64>> = spread_over(&ZDT3_SEGMENTS, n)
        .into_iter()
        .map(|f1| vec![f1, zdt3_front_f2(f1)])
        .collect();
    // segment start points can tie with the previous segment's end within rounding
    let mut best = f64::INFINITY;
    pts.into_iter()
        .filter(|p| {
            if p[1] < best {
                best = p[1];
                true
            } else {
                false
            }
        })
        .collect()
}

fn zdt3(x: &[f64], grad: bool) -> (Vec<f64>, Option<Jacobian>) {
    let d = x.len();
    let c = 9.0 / (d - 1) as f64;
    let f1 = x[0];
    let g = 1.0 + c * x[1..].iter().sum::<f64>();
    let s = (10.0 * PI * f1).sin();
    let f2 = g - (f1 * g).sqrt() - f1 * s;
    let jac = grad.then(|| {
        let mut j1 = vec![0.0; d];
        j1[0] = 1.0;
        let mut j2 = vec![c * (1.0 - 0.5 * (f1 / g).sqrt()); d];
        j2[0] = if f1 > 0.0 {
            -0.5 * (g / f1).sqrt() - s - 10.0 * PI * f1 * (10.0 * PI * f1).cos()
        } else {
            f64::NEG_INFINITY
        };
        vec![j1, j2]
    });
    (vec![f1, f2], jac)
}

fn lzlzk(x: &[f64], grad: bool) -> (Vec<f64>, Option<Jacobian>) {
    let d = x.len();
    let c = 1.0 / (d as f64).sqrt();
    let z: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
    let a1: f64 = z.iter().map(|v| (v - c).powi(2)).sum();
    let a2: f64 = z.iter().map(|v| (v + c).powi(2)).sum();
    let (e1, e2) = ((-a1).exp(), (-a2).exp());
    let jac = grad.then(|| {
        // d/dx = 2 d/dz
        vec![
            z.iter().map(|v| 4.0 * (v - c) * e1).collect(),
            z.iter().map(|v| 4.0 * (v + c) * e2).collect(),
        ]
    });
    (vec![1.0 - e1, 1.0 - e2], jac)
}

/// Sphere-type DTLZ objectives from angles `theta` and distance `g`.
/// Returns `f` and `d f_i / d theta_j`.
fn sphere(theta: &[f64], g: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = theta.len() + 1;
    // f_i (0-based) = (1+g) * prod_{j < m-1-i} cos(theta_j) * [i > 0] sin(theta_{m-1-i})
    let factors = |i: usize| -> Vec<(usize, bool)> {
        let mut fs: Vec<(usize, bool)> = (0..m - 1 - i).map(|j| (j, true)).collect();
        if i > 0 {
            fs.push((m - 1 - i, false));
        }
        fs
    };
    let val = |j: usize, cos: bool| if cos { theta[j].cos() } else { theta[j].sin() };
    let dval = |j: usize, cos: bool| if cos { -theta[j].sin() } else { theta[j].cos() };
    let mut f = vec![0.0; m];
    let mut df = vec![vec![0.0; m - 1]; m];
    for i in 0..m {
        let fs = factors(i);
        f[i] = (1.0 + g) * fs.iter().map(|&(j, c)| val(j, c)).product::<f64>();
        for (k, &(j, c)) in fs.iter().enumerate() {
            let others: f64 = fs
                .iter()
                .enumerate()
                .filter(|(l, _)| *l != k)
                .map(|(_, &(j2, c2))| val(j2, c2))
                .product();
            df[i][j] += (1.0 + g) * others * dval(j, c);
        }
    }
    (f, df)
}

fn dtlz_sphere(kind: ProblemKind, m: usize, x: &[f64], grad: bool) -> (Vec<f64>, Option<Jacobian>) {
    let d = x.len();
    let g: f64 = x[m - 1..].iter().map(|v| (v - 0.5).powi(2)).sum();
    let (theta, dtheta_dx, dtheta_dg): (Vec<f64>, Vec<f64>, Vec<f64>) = match kind {
        ProblemKind::Dtlz4 => (
            x[..m - 1].iter().map(|v| FRAC_PI_2 * v.powi(100)).collect(),
            x[..m - 1]
                .iter()
                .map(|v| FRAC_PI_2 * 100.0 * v.powi(99))
                .collect(),
            vec![0.0; m - 1],
        ),
        _ => {
            let mut t = vec![FRAC_PI_2 * x[0]];
            let mut dt = vec![FRAC_PI_2];
            let mut dg = vec![0.0];
            for &xi in &x[1..m - 1] {
                t.push(PI / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * xi));
                dt.push(PI * g / (2.0 * (1.0 + g)));
                dg.push(FRAC_PI_4 * (2.0 * xi - 1.0) / (1.0 + g).powi(2));
            }
            (t, dt, dg)
        }
    };
    let (f, df) = sphere(&theta, g);
    let jac = grad.then(|| {
        (0..m)
            .map(|i| {
                let mut row = vec![0.0; d];
                for j in 0..m - 1 {
                    row[j] = df[i][j] * dtheta_dx[j];
                }
                let df_dg =
                    f[i] / (1.0 + g) + (0..m - 1).map(|j| df[i][j] * dtheta_dg[j]).sum::<f64>();
                for k in m - 1..d {
                    row[k] = df_dg * 2.0 * (x[k] - 0.5);
                }
                row
            })
            .collect()
    });
    (f, jac)
}

fn dtlz7_phi(t: f64) -> f64 {
    t * (1.0 + (3.0 * PI * t).sin())
}

fn dtlz7(m: usize, x: &[f64], grad: bool) -> (Vec<f64>, Option<Jacobian>) {
    let d = x.len();
    let k = (d - m + 1) as f64;
    let g = 1.0 + 9.0 / k * x[m - 1..].iter().sum::<f64>();
    let mut f: Vec<f64> = x[..m - 1].to_vec();
    let h = m as f64
        - x[..m - 1]
            .iter()
            .map(|v| dtlz7_phi(*v) / (1.0 + g))
            .sum::<f64>();
    f.push((1.0 + g) * h);
    let jac = grad.then(|| {
        let mut rows: Jacobian = (0..m - 1)
            .map(|i| {
                let mut r = vec![0.0; d];
                r[i] = 1.0;
                r
            })
            .collect();
        let mut last = vec![m as f64 * 9.0 / k; d];
        for (i, v) in x[..m - 1].iter().enumerate() {
            last[i] = -(1.0 + (3.0 * PI * v).sin() + 3.0 * PI * v * (3.0 * PI * v).cos());
        }
        rows.push(last);
        rows
    });
    (f, jac)
}

/// Intervals of `t` that stay non-dominated for DTLZ7 with `g = 1`.
///
/// The front is separable: `(f1, f2)` is optimal iff each coordinate is a
/// running maximum of `t (1 + sin 3 pi t)`. Found once on a dense grid.
pub fn dtlz7_intervals() -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    CACHE.get_or_init(|| {
        const STEPS: usize = 1_000_000;
        let mut out = Vec::new();
        let mut best = f64::NEG_INFINITY;
        let mut start: Option<f64> = None;
        let mut last = 0.0;
        for k in 0..=STEPS {
            let t = k as f64 / STEPS as f64;
            let v = dtlz7_phi(t);
            if v > best {
                best = v;
                start.get_or_insert(t);
                last = t;
            } else if let Some(s) = start.take() {
                out.push((s, last));
            }
        }
        if let Some(s) = start {
            out.push((s, last));
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zdt3_hand_values() {
        let p = ProblemSpec::new(ProblemKind::Zdt3);
        assert_eq!(p.evaluate(&vec![0.0; 30]).unwrap(), vec![0.0, 1.0]);
        let mut x = vec![0.0; 30];
        x[0] = 1.0;
        let f = p.evaluate(&x).unwrap();
        assert_abs_diff_eq!(f[0], 1.0);
        assert_abs_diff_eq!(f[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dtlz7_at_origin() {
        let p = ProblemSpec::new(ProblemKind::Dtlz7);
        assert_eq!(p.evaluate(&[0.0; 22]).unwrap(), vec![0.0, 0.0, 6.0]);
    }

    #[test]
    fn dtlz5_center_is_on_sphere() {
        let p = ProblemSpec::new(ProblemKind::Dtlz5);
        let f = p.evaluate(&[0.5; 7]).unwrap();
        assert_abs_diff_eq!(f[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f[2], 2f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn lzlzk_at_domain_center() {
        let p = ProblemSpec::new(ProblemKind::Lzlzk);
        let f = p.evaluate(&[0.5; 20]).unwrap();
        let want = 1.0 - (-1.0f64).exp();
        assert_abs_diff_eq!(f[0], want, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], want, epsilon = 1e-12);
        let (_, j) = p.evaluate_with_gradient(&[0.5; 20]).unwrap();
        for (a, b) in j[0].iter().zip(&j[1]) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-15);
        }
    }

    #[test]
    fn zdt3_f1_gradient_at_origin() {
        let p = ProblemSpec::new(ProblemKind::Zdt3);
        let (_, j) = p.evaluate_with_gradient(&vec![0.0; 30]).unwrap();
        assert_eq!(j[0][0], 1.0);
        assert!(j[0][1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn out_of_box_and_dim_errors() {
        let p = ProblemSpec::new(ProblemKind::Dtlz4);
        let mut x = vec![0.5; 7];
        x[3] = 1.5;
        assert_eq!(
            p.evaluate(&x).unwrap_err(),
            Error::OutOfBox {
                index: 3,
                value: 1.5
            }
        );
        assert!(p.evaluate(&[0.5; 6]).is_err());
        assert!(ProblemSpec::with_dim(ProblemKind::Dtlz7, 2).is_err());
    }

    #[test]
    fn dtlz7_intervals_shape() {
        let iv = dtlz7_intervals();
        assert_eq!(iv.len(), 2);
        assert_abs_diff_eq!(iv[0].0, 0.0);
        assert_abs_diff_eq!(iv[0].1, 0.2514, epsilon = 1e-3);
        assert_abs_diff_eq!(iv[1].0, 0.6316, epsilon = 1e-3);
        assert_abs_diff_eq!(iv[1].1, 0.8594, epsilon = 1e-3);
    }

    #[test]
    fn zdt3_front_has_five_segments() {
        let front = ProblemSpec::new(ProblemKind::Zdt3).true_front(1000);
        let hit: Vec<bool> = ZDT3_SEGMENTS
            .iter()
            .map(|(a, b)| front.iter().any(|p| p[0] >= *a && p[0] <= *b))
            .collect();
        assert_eq!(hit, vec![true; 5]);
        assert!(front
            .iter()
            .all(|p| ZDT3_SEGMENTS.iter().any(|(a, b)| p[0] >= *a && p[0] <= *b)));
    }

    #[test]
    fn ideal_points() {
        let z = ProblemSpec::new(ProblemKind::Zdt3).ideal_point();
        assert_abs_diff_eq!(z[1], -0.7733, epsilon = 1e-3);
        let z = ProblemSpec::new(ProblemKind::Dtlz7).ideal_point();
        assert_abs_diff_eq!(z[2], 2.6138, epsilon = 1e-3);
    }
}
