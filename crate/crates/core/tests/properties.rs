use proptest::prelude::*;
use tucker_recover::hosvd::{h_mode1, mode1_first_order, st_hosvd};
use tucker_recover::tangent::{fused_retract, project_dense};
use tucker_recover::{DenseTensor, MultilinearRank};

fn tensor() -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(2usize..6, 2..5).prop_flat_map(|dims| {
        let len: usize = dims.iter().product();
        prop::collection::vec(-1.0f64..1.0, len).prop_map(move |data| DenseTensor::new(dims.clone(), data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matricize_then_tensorize_is_identity(t in tensor(), k in 0usize..4) {
        let k = k % t.order();
        let back = DenseTensor::tensorize(&t.matricize(k).unwrap(), t.dims(), k).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn permute_preserves_entries(t in tensor()) {
        let d = t.order();
        let perm: Vec<usize> = (0..d).rev().collect();
        let p = t.permute(&perm).unwrap();
        prop_assert!((p.frob_norm() - t.frob_norm()).abs() <= 1e-12 * (1.0 + t.frob_norm()));
        prop_assert_eq!(p.permute(&perm).unwrap(), t);
    }

    #[test]
    fn tangent_projection_is_idempotent(t in tensor(), r in 1usize..3) {
        let r1 = r.min(t.dims()[0]);
        let (_, basis) = h_mode1(&t, r1).unwrap();
        let p = project_dense(&t, &basis).unwrap();
        let pp = project_dense(&p, &basis).unwrap();
        prop_assert!(p.distance(&pp).unwrap() <= 1e-10 * (1.0 + t.frob_norm()));
    }

    #[test]
    fn fused_retraction_agrees_with_reference(t in tensor(), r in 1usize..3) {
        let rank = MultilinearRank::new(t.dims().iter().map(|&n| r.min(n)).collect());
        let (_, basis) = h_mode1(&t, rank[0]).unwrap();
        let fast = fused_retract(&t, &basis, &rank).unwrap().tucker.compose();
        let slow = st_hosvd(&project_dense(&t, &basis).unwrap(), &rank, &mode1_first_order(&rank)).unwrap().compose();
        // Ties in the singular spectrum make the truncation ambiguous; both
        // results must still be equally good approximations.
        let proj = project_dense(&t, &basis).unwrap();
        let (ef, es) = (proj.distance(&fast).unwrap(), proj.distance(&slow).unwrap());
        prop_assert!((ef - es).abs() <= 1e-8 * (1.0 + proj.frob_norm()), "{} vs {}", ef, es);
    }
}
