//! Front quality indicators: hypervolume and inverted generational distance.

use crate::error::{Error, Result};

/// Volume dominated by `points` and bounded by `reference`.
///
/// Exact for two objectives (sweep) and three (slices along the last
/// objective, each a two-objective sweep). Points that do not strictly improve
/// on `reference` in every objective add nothing.
pub fn hypervolume<R: AsRef<[f64]>>(points: &[R], reference: &[f64]) -> Result<f64> {
    let m = reference.len();
    if reference.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameter(
            "reference point must be finite".into(),
        ));
    }
    for p in points {
        crate::error::check_dim(m, p.as_ref().len())?;
    }
    let inside: Vec<&[f64]> = points
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| p.iter().zip(reference).all(|(a, z)| a < z))
        .collect();
    match m {
        2 => Ok(hv2(
            inside.iter().map(|p| (p[0], p[1])).collect(),
            reference,
        )),
        3 => Ok(hv3(inside, reference)),
        _ => Err(Error::UnsupportedObjectives(m)),
    }
}

fn hv2(mut pts: Vec<(f64, f64)>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut level = reference[1];
    let mut area = 0.0;
    for (x, y) in pts {
        if y < level {
            area += (reference[0] - x) * (level - y);
            level = y;
        }
    }
    area
}

fn hv3(mut pts: Vec<&[f64]>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut slice = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        slice.push((p[0], p[1]));
        let top = pts.get(i + 1).map_or(reference[2], |q| q[2]);
        let depth = top - p[2];
        if depth > 0.0 {
            volume += depth * hv2(slice.clone(), reference);
        }
    }
    volume
}

/// Mean distance from each reference-front point to its nearest approximation point.
pub fn igd<A: AsRef<[f64]>, B: AsRef<[f64]>>(approx: &[A], reference_front: &[B]) -> Result<f64> {
    if approx.is_empty() {
        return Err(Error::Empty("approximation set"));
    }
    if reference_front.is_empty() {
        return Err(Error::Empty("reference front"));
    }
    let m = reference_front[0].as_ref().len();
    for p in approx {
        crate::error::check_dim(m, p.as_ref().len())?;
    }
    let mut total = 0.0;
    for r in reference_front {
        let r = r.as_ref();
        crate::error::check_dim(m, r.len())?;
        let nearest = approx
            .iter()
            .map(|a| {
                a.as_ref()
                    .iter()
                    .zip(r)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        total += nearest.sqrt();
    }
    Ok(total / reference_front.len() as f64)
}
