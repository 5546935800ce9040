//! Pareto dominance, non-dominated sorting, crowding distance and the
//! front-then-crowding subset selector used to pick observations for the
//! sampling-distribution fit.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::simplex::{PreferenceVector, CLAMP_EPS};

/// `a` dominates `b`: no worse in every objective and strictly better in one.
#[inline]
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// `N x m` matrix of objective values, one row per evaluated preference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossMatrix {
    m: usize,
    data: Vec<f64>,
    prefs: Vec<Option<PreferenceVector>>,
}

impl LossMatrix {
    /// An empty matrix with `m` columns.
    pub fn with_dim(m: usize) -> Self {
        Self {
            m,
            data: Vec::new(),
            prefs: Vec::new(),
        }
    }

    /// Builds a matrix from rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut out = Self::with_dim(m);
        for r in rows {
            out.push(r.as_ref(), None)?;
        }
        Ok(out)
    }

    /// Appends a row, optionally tagged with the preference that produced it.
    pub fn push(&mut self, row: &[f64], pref: Option<PreferenceVector>) -> Result<()> {
        check_dim(self.m, row.len())?;
        self.data.extend_from_slice(row);
        self.prefs.push(pref);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn preference(&self, i: usize) -> Option<&PreferenceVector> {
        self.prefs[i].as_ref()
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.m.max(1)).take(self.len())
    }

    /// A new matrix holding rows `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::with_dim(self.m);
        for &i in indices {
            out.data.extend_from_slice(self.row(i));
            out.prefs.push(self.prefs[i].clone());
        }
        out
    }

    /// Subtracts `offset` from every row.
    pub fn shifted(&self, offset: &[f64]) -> Result<Self> {
        check_dim(self.m, offset.len())?;
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.m) {
            for (v, o) in row.iter_mut().zip(offset) {
                *v -= o;
            }
        }
        Ok(out)
    }
}

fn non_empty(points: &LossMatrix) -> Result<()> {
    if points.is_empty() {
        Err(Error::Empty("loss matrix has no rows"))
    } else {
        Ok(())
    }
}

/// For each point, the number of other points that dominate it.
pub fn dominance_rank(points: &LossMatrix) -> Result<Vec<usize>> {
    non_empty(points)?;
    let n = points.len();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && dominates(points.row(j), points.row(i)))
                .count()
        })
        .collect())
}

/// Fast non-dominated sort. Returns the front index (0 = non-dominated) of each point.
pub fn non_dominated_sort(points: &LossMatrix) -> Result<Vec<usize>> {
    non_empty(points)?;
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points.row(i), points.row(j));
            if dominates(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut front_of = vec![usize::MAX; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    let mut front = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            front_of[i] = front;
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        front += 1;
    }
    Ok(front_of)
}

/// Indices of the non-dominated rows, in input order.
pub fn non_dominated_indices<R: AsRef<[f64]>>(points: &[R]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates(q.as_ref(), points[i].as_ref()))
        })
        .collect()
}

/// NSGA-II crowding distance of points assumed to share one front.
///
/// Per objective the points are stably sorted; the first and last get `+inf`,
/// interior points accumulate `(next - prev) / (max - min)`. Objectives with
/// zero range add nothing to interior points.
pub fn crowding_distance(front: &LossMatrix) -> Result<Vec<f64>> {
    non_empty(front)?;
    let idx: Vec<usize> = (0..front.len()).collect();
    Ok(crowding_of(front, &idx))
}

fn crowding_of(points: &LossMatrix, members: &[usize]) -> Vec<f64> {
    let n = members.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..points.dim() {
        let val = |k: usize| points.row(members[k])[obj];
        order.sort_by(|&a, &b| val(a).partial_cmp(&val(b)).unwrap_or(Ordering::Equal));
        let lo = val(order[0]);
        let hi = val(order[n - 1]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range > 0.0 {
            for w in 1..n.saturating_sub(1) {
                dist[order[w]] += (val(order[w + 1]) - val(order[w - 1])) / range;
            }
        }
    }
    dist
}

/// Divides each row by its sum, then clamps into `[1e-6, 1 - 1e-6]` and renormalizes.
///
/// Columns that contain a negative entry are first shifted by their minimum.
pub fn normalize_rows(d: &LossMatrix) -> Result<LossMatrix> {
    let m = d.dim();
    let mut shift = vec![0.0; m];
    for row in d.rows() {
        for (s, v) in shift.iter_mut().zip(row) {
            *s = f64::min(*s, *v);
        }
    }
    let mut out = d.clone();
    for (i, row) in out.data.chunks_exact_mut(m.max(1)).enumerate() {
        for (v, s) in row.iter_mut().zip(&shift) {
            *v -= s;
        }
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::ZeroSumRow { row: i, sum });
        }
        for v in row.iter_mut() {
            *v = (*v / sum).clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        }
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Rows kept by [`nds_cd_select`], in selection-priority order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedSet {
    /// Index of each selected row in the source matrix.
    pub indices: Vec<usize>,
    /// The selected rows.
    pub rows: LossMatrix,
    /// Front index of each selected row.
    pub fronts: Vec<usize>,
}

impl SelectedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `min(max(floor(gamma * epoch * n), 1), n)`.
pub fn selection_size(gamma: f64, epoch: usize, n: usize) -> usize {
    let raw = (gamma * epoch as f64 * n as f64).floor();
    let raw = if raw.is_finite() { raw as usize } else { n };
    raw.max(1).min(n)
}

/// Keeps the best `selection_size(gamma, epoch, N)` rows: whole fronts in
/// ascending order, and the cut front by descending crowding distance, ties
/// broken by row index.
pub fn nds_cd_select(d: &LossMatrix, gamma: f64, epoch: usize) -> Result<SelectedSet> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be in (0, 1), got {gamma}"
        )));
    }
    if epoch == 0 {
        return Err(Error::InvalidParameter("epoch must be >= 1".into()));
    }
    non_empty(d)?;
    let target = selection_size(gamma, epoch, d.len());
    let fronts = non_dominated_sort(d)?;
    let n_fronts = fronts.iter().max().map_or(0, |f| f + 1);
    let mut by_front: Vec<Vec<usize>> = vec![Vec::new(); n_fronts];
    for (i, f) in fronts.iter().enumerate() {
        by_front[*f].push(i);
    }

    let mut indices = Vec::with_capacity(target);
    for members in by_front {
        if indices.len() >= target {
            break;
        }
        let cd = crowding_of(d, &members);
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by(|&a, &b| {
            cd[b]
                .partial_cmp(&cd[a])
                .unwrap_or(Ordering::Equal)
                .then(members[a].cmp(&members[b]))
        });
        let take = (target - indices.len()).min(members.len());
        indices.extend(order[..take].iter().map(|&k| members[k]));
    }
    let rows = d.select(&indices);
    let fronts = indices.iter().map(|&i| fronts[i]).collect();
    Ok(SelectedSet {
        indices,
        rows,
        fronts,
    })
}
