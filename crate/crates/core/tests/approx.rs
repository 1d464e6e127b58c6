use bandinv_core::approx::{best_rank_approx, neumann_bound, neumann_estimate};
use bandinv_core::experiments::tridiagonal;
use bandinv_core::linalg::{invert, operator_norm, singular_values, svd, Matrix};
use bandinv_core::partition::BlockPartition;
use bandinv_core::rng;
use proptest::prelude::*;

#[test]
fn truncation_is_optimal_against_random_rank_p() {
    let c = rng::gaussian(&mut rng::substream(1, 0), 6, 5);
    for p in 1..=3 {
        let best = best_rank_approx(&c, p).unwrap();
        assert_eq!(singular_values(&best.low_rank).unwrap().iter().filter(|&&s| s > 1e-12 * best.low_rank.max_abs()).count(), p);
        let f = svd(&c).unwrap();
        let us = Matrix::from_fn(6, p, |i, j| f.left[(i, j)] * f.values[j]);
        let v = Matrix::from_fn(5, p, |i, j| f.right[(i, j)]);
        for i in 0..100u64 {
            let mut r = rng::substream(2 + p as u64, i);
            // perturbed factors of the optimum: still rank p, sometimes very close
            let delta = 0.01 * (i % 10) as f64;
            let x = &us + &rng::gaussian(&mut r, 6, p).scale(delta);
            let y = &v + &rng::gaussian(&mut r, 5, p).scale(delta);
            let cand = x.matmul(&y.transpose());
            let err = operator_norm(&(&c - &cand)).unwrap();
            assert!(err >= best.error - 1e-12);
        }
    }
}

#[test]
fn banded_fifty_measured_below_bound() {
    let k0 = tridiagonal(50, 4.0, 1.0);
    let part = BlockPartition::new(50, 20, 1).unwrap();
    let g = rng::gaussian(&mut rng::substream(50, 0), part.n, part.trail());
    let b = g.scale(1e-3 / operator_norm(&g).unwrap());
    let rep = neumann_bound(&k0, &b, part).unwrap();
    assert!(rep.valid);
    assert!(rep.measured.unwrap() <= rep.bound.unwrap());
    // the same perturbation embedded in M x M gives the same report
    let full = neumann_bound(&k0, &part.embed_b(&b), part).unwrap();
    assert_eq!(full.epsilon, rep.epsilon);
    assert_eq!(full.bound, rep.bound);
}

#[test]
fn bound_depends_only_on_eps() {
    let k0 = tridiagonal(12, 3.0, 1.0);
    let part = BlockPartition::new(12, 4, 2).unwrap();
    let mut bounds = Vec::new();
    for i in 0..5 {
        let g = rng::gaussian(&mut rng::substream(9, i), part.n, part.trail());
        let b = g.scale(0.05 / operator_norm(&g).unwrap());
        bounds.push(neumann_bound(&k0, &b, part).unwrap().bound.unwrap());
    }
    assert!(bounds.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-15 * w[0]));
    let nk = operator_norm(&invert(&k0).unwrap()).unwrap();
    assert!((bounds[0] - neumann_estimate(nk, 0.05).unwrap()).abs() <= 1e-14 * bounds[0]);
}

proptest! {
    #[test]
    fn bound_is_increasing(nk in 0.1f64..10.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        let e1 = neumann_estimate(nk, lo / nk).unwrap();
        let e2 = neumann_estimate(nk, hi / nk).unwrap();
        prop_assert!(e1 < e2);
    }

    #[test]
    fn truncation_error_matches_spectrum(v in proptest::collection::vec(-4.0f64..4.0, 20), p in 0usize..=4) {
        let c = Matrix::from_row_major(5, 4, v).unwrap();
        let s = singular_values(&c).unwrap();
        let t = best_rank_approx(&c, p).unwrap();
        let resid = operator_norm(&(&c - &t.low_rank)).unwrap();
        prop_assert!((resid - s.get(p).copied().unwrap_or(0.0)).abs() <= 1e-12 * s[0].max(1.0));
        prop_assert_eq!(t.error, t.tail.first().copied().unwrap_or(0.0));
    }
}
