use ddps::pareto::{
    crowding_distance, dominance_rank, dominates, nds_cd_select, non_dominated_sort,
    normalize_rows, selection_size, LossMatrix,
};
use proptest::prelude::*;

fn points(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=3).prop_flat_map(move |m| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), 1..=max_n)
    })
}

// small integer grids produce plenty of ties and duplicates
fn gridded(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=3).prop_flat_map(move |m| {
        prop::collection::vec(
            prop::collection::vec((0u8..5).prop_map(f64::from), m),
            1..=max_n,
        )
    })
}

fn brute_dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Front index by repeatedly peeling off the non-dominated remainder.
fn brute_fronts(pts: &[Vec<f64>]) -> Vec<usize> {
    let mut front = vec![usize::MAX; pts.len()];
    let mut level = 0;
    while front.contains(&usize::MAX) {
        let open: Vec<usize> = (0..pts.len()).filter(|&i| front[i] == usize::MAX).collect();
        let layer: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&i| !open.iter().any(|&j| brute_dominates(&pts[j], &pts[i])))
            .collect();
        for i in layer {
            front[i] = level;
        }
        level += 1;
    }
    front
}

/// Crowding distance straight from its definition, for points without ties.
fn direct_crowding(pts: &[Vec<f64>]) -> Vec<f64> {
    let m = pts[0].len();
    (0..pts.len())
        .map(|i| {
            let mut total = 0.0;
            for k in 0..m {
                let v = pts[i][k];
                let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                if v == lo || v == hi {
                    return f64::INFINITY;
                }
                let above = pts
                    .iter()
                    .map(|p| p[k])
                    .filter(|x| *x > v)
                    .fold(f64::INFINITY, f64::min);
                let below = pts
                    .iter()
                    .map(|p| p[k])
                    .filter(|x| *x < v)
                    .fold(f64::NEG_INFINITY, f64::max);
                total += (above - below) / (hi - lo);
            }
            total
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sort_and_rank_match_brute_force(pts in gridded(60)) {
        let lm = LossMatrix::from_rows(&pts).unwrap();
        prop_assert_eq!(non_dominated_sort(&lm).unwrap(), brute_fronts(&pts));
        let ranks: Vec<usize> = pts
            .iter()
            .map(|p| pts.iter().filter(|q| brute_dominates(q, p)).count())
            .collect();
        prop_assert_eq!(dominance_rank(&lm).unwrap(), ranks);
    }

    #[test]
    fn dominance_agrees_with_brute(a in prop::collection::vec(0u8..3, 3), b in prop::collection::vec(0u8..3, 3)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        prop_assert_eq!(dominates(&a, &b), brute_dominates(&a, &b));
        prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
    }

    #[test]
    fn crowding_matches_definition(pts in points(40)) {
        let lm = LossMatrix::from_rows(&pts).unwrap();
        let got = crowding_distance(&lm).unwrap();
        let want = direct_crowding(&pts);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!(g == w || (g - w).abs() < 1e-12, "{} vs {}", g, w);
        }
    }

    #[test]
    fn sort_invariant_under_positive_scaling(pts in points(50), scale in prop::collection::vec(0.1f64..10.0, 3)) {
        let lm = LossMatrix::from_rows(&pts).unwrap();
        let scaled: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| p.iter().zip(&scale).map(|(v, s)| v * s).collect())
            .collect();
        let sm = LossMatrix::from_rows(&scaled).unwrap();
        prop_assert_eq!(non_dominated_sort(&lm).unwrap(), non_dominated_sort(&sm).unwrap());
    }

    #[test]
    fn sort_equivariant_under_permutation(pts in points(50), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let a = non_dominated_sort(&LossMatrix::from_rows(&pts).unwrap()).unwrap();
        let b = non_dominated_sort(&LossMatrix::from_rows(&permuted).unwrap()).unwrap();
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(b[k], a[i]);
        }
    }

    #[test]
    fn normalized_rows_live_on_the_simplex(pts in points(30)) {
        let shifted: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v + 0.01).collect()).collect();
        let n = normalize_rows(&LossMatrix::from_rows(&shifted).unwrap()).unwrap();
        for row in n.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn selection_has_target_size_and_respects_fronts(pts in gridded(80), gamma in 0.01f64..0.99, epoch in 1usize..4) {
        let lm = LossMatrix::from_rows(&pts).unwrap();
        let sel = nds_cd_select(&lm, gamma, epoch).unwrap();
        prop_assert_eq!(sel.len(), selection_size(gamma, epoch, pts.len()));
        let fronts = brute_fronts(&pts);
        let worst_kept = sel.fronts.iter().copied().max().unwrap();
        // every point on a strictly better front than the worst kept one is kept
        for (i, f) in fronts.iter().enumerate() {
            if *f < worst_kept {
                prop_assert!(sel.indices.contains(&i));
            }
        }
        prop_assert!(sel.fronts.windows(2).all(|w| w[0] <= w[1]));
    }
}
