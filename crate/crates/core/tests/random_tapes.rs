mod common;

use common::{random_tape, uniform};
use hotad_core::*;
use proptest::prelude::*;

fn dense(m: &SymSparseMat) -> Vec<f64> {
    m.to_dense().as_slice().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gradient_matches_fd(seed in any::<u64>(), n in 1usize..6, len in 1usize..40) {
        let t = random_tape(seed, n, len);
        let x = uniform(seed ^ 1, n);
        let tr = t.eval_forward(&x).unwrap();
        let g = reverse_gradient(&t, &tr).unwrap();
        prop_assert!(rel_err(&g, &fd_gradient(&t, &x).unwrap()) < 1e-5);
    }

    #[test]
    fn hessian_matches_fd(seed in any::<u64>(), n in 1usize..6, len in 1usize..40) {
        let t = random_tape(seed, n, len);
        let x = uniform(seed ^ 2, n);
        let tr = t.eval_forward(&x).unwrap();
        let h = edge_pushing_with(&t, &tr, SweepOptions::checked()).unwrap();
        prop_assert!(h.report.as_ref().unwrap().is_clean());
        let fd = fd_hessian(&t, &x).unwrap();
        prop_assert!(rel_err(&dense(&h.hessian), fd.as_slice()) < 1e-5);
        prop_assert_eq!(h.gradient, reverse_gradient(&t, &tr).unwrap());
    }

    #[test]
    fn hessian_vector_matches_hessian(seed in any::<u64>(), n in 1usize..6, len in 1usize..40) {
        let t = random_tape(seed, n, len);
        let x = uniform(seed ^ 3, n);
        let d = uniform(seed ^ 4, n);
        let tr = t.eval_forward(&x).unwrap();
        let hv = hessian_vector(&t, &tr, &d).unwrap();
        let wd = edge_pushing(&t, &tr).unwrap().hessian.to_dense().mul_vec(&d);
        prop_assert!(rel_err(&hv, &wd) < 1e-12, "{hv:?} {wd:?}");
    }

    #[test]
    fn td_matches_fd_and_dense(seed in any::<u64>(), n in 1usize..6, len in 1usize..30) {
        let t = random_tape(seed, n, len);
        let x = uniform(seed ^ 5, n);
        let d = uniform(seed ^ 6, n);
        let tr = t.eval_forward(&x).unwrap();
        let r = rev_hedir_with(&t, &tr, &d, SweepOptions::checked()).unwrap();
        let report = r.report.as_ref().unwrap();
        prop_assert!(report.is_clean(), "{report:?}");
        let td = dense(&r.td);
        prop_assert!(rel_err(&td, fd_tensor_vec(&t, &x, &d).unwrap().as_slice()) < 1e-5);
        let full = reverse_tensor_dense(&t, &tr, DEFAULT_DENSE_CAP).unwrap();
        prop_assert!(rel_err(&td, full.contract(&d).unwrap().as_slice()) < 1e-12);

        let h = edge_pushing(&t, &tr).unwrap();
        prop_assert_eq!(&r.hessian, &h.hessian);
        prop_assert_eq!(&r.gradient, &h.gradient);
    }

    #[test]
    fn dense_tensor_hessian_slice(seed in any::<u64>(), n in 1usize..5, len in 1usize..25) {
        // Contracting D³f with e_j equals the FD derivative of the Hessian along e_j.
        let t = random_tape(seed, n, len);
        let x = uniform(seed ^ 7, n);
        let tr = t.eval_forward(&x).unwrap();
        let full = reverse_tensor_dense(&t, &tr, DEFAULT_DENSE_CAP).unwrap();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let fd = fd_tensor_vec(&t, &x, &e).unwrap();
            prop_assert!(rel_err(full.contract(&e).unwrap().as_slice(), fd.as_slice()) < 1e-5);
        }
    }

    #[test]
    fn tangent_traversals_agree(seed in any::<u64>(), n in 1usize..6, len in 1usize..40) {
        let t = random_tape(seed, n, len);
        let x = uniform(seed ^ 8, n);
        let d = uniform(seed ^ 9, n);
        let tr = t.eval_forward(&x).unwrap();
        let a = forward_tangent(&t, &tr, &d).unwrap();
        let b = forward_tangent_by_successors(&t, &tr, &d).unwrap();
        prop_assert!(rel_err(a.as_slice(), b.as_slice()) < 1e-14);
        let g = reverse_gradient(&t, &tr).unwrap();
        let gd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        prop_assert!(rel_err(&[a.output()], &[gd]) < 1e-12);
    }

    #[test]
    fn td_scales_with_direction(seed in any::<u64>(), n in 1usize..6, len in 1usize..30) {
        let t = random_tape(seed, n, len);
        let x = uniform(seed ^ 10, n);
        let d = uniform(seed ^ 11, n);
        let tr = t.eval_forward(&x).unwrap();
        let a = dense(&rev_hedir(&t, &tr, &d).unwrap().td);
        let d4: Vec<f64> = d.iter().map(|v| v * 4.0).collect();
        let b = dense(&rev_hedir(&t, &tr, &d4).unwrap().td);
        let a4: Vec<f64> = a.iter().map(|v| v * 4.0).collect();
        prop_assert_eq!(a4, b);
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 1usize..6, len in 1usize..40) {
        let t = random_tape(seed, n, len);
        let back = Tape::parse_text(&t.dump_text(), n).unwrap();
        prop_assert_eq!(back.dump_text(), t.dump_text());
        let x = uniform(seed, n);
        prop_assert_eq!(
            t.eval_forward(&x).unwrap().output(),
            back.eval_forward(&x).unwrap().output()
        );
    }
}

#[test]
fn dense_tensor_is_permutation_symmetric() {
    let t = random_tape(42, 4, 30);
    let tr = t.eval_forward(&uniform(3, 4)).unwrap();
    let full = reverse_tensor_dense(&t, &tr, DEFAULT_DENSE_CAP).unwrap();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let v = full.get(a, b, c);
                for w in [full.get(a, c, b), full.get(b, a, c), full.get(b, c, a), full.get(c, a, b), full.get(c, b, a)] {
                    assert_eq!(v.to_bits(), w.to_bits());
                }
            }
        }
    }
}
