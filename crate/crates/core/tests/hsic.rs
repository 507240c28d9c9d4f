use lcdr::hsic::{dependence_matrices, generalized_eigen};
use lcdr::{hsic_value, label_kernel, project, solve_projection, ConfidenceMatrix, KernelPair};
use lcdr_oracles::{naive_hsic, naive_matmul, random_distribution, rayleigh_oracle, trace_form};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.sample(StandardNormal))
}

fn random_confidence(rng: &mut ChaCha8Rng, n: usize, q: usize) -> ConfidenceMatrix {
    let mut values = Array2::zeros((n, q));
    for mut row in values.outer_iter_mut() {
        row.assign(&random_distribution(rng, q));
    }
    ConfidenceMatrix { support: Array2::ones((n, q)), values }
}

fn frob(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn label_kernel_matches_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_confidence(&mut rng, 7, 4);
    let k = label_kernel(&f);
    let expected = naive_matmul(f.values.view(), f.values.t());
    assert!(max_abs(&(&k - &expected)) <= 1e-12);
}

#[test]
fn hsic_matches_four_matrix_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let a = gaussian(&mut rng, 8, 3);
        let b = gaussian(&mut rng, 8, 5);
        let k = a.dot(&a.t());
        let l = b.dot(&b.t());
        let fast = hsic_value(k.view(), l.view()).unwrap();
        let slow = naive_hsic(k.view(), l.view());
        assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1.0), "{fast} vs {slow}");
        assert!(fast >= -1e-9);
    }
}

#[test]
fn projection_satisfies_constraint_and_eigen_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for alpha in [0.0, 0.1, 0.5, 1.0] {
        let x = gaussian(&mut rng, 30, 6);
        let f = random_confidence(&mut rng, 30, 4);
        let ft = label_kernel(&f);
        let proj = solve_projection(x.view(), ft.view(), alpha, 4).unwrap();
        let (a, b) = dependence_matrices(x.view(), ft.view(), alpha).unwrap();
        let gram = proj.p.t().dot(&b).dot(&proj.p);
        assert!(max_abs(&(&gram - &Array2::<f64>::eye(4))) <= 1e-8, "alpha {alpha}");
        for (i, &lambda) in proj.eigenvalues.iter().enumerate() {
            let p = proj.p.column(i);
            let r = a.dot(&p) - b.dot(&p) * lambda;
            let bound = 1e-8 * (frob(a.view()) + lambda.abs() * frob(b.view()));
            assert!(r.dot(&r).sqrt() <= bound);
            let col = proj.p.column(i);
            let pivot = col.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(pivot > 0.0);
        }
        assert!(proj.eigenvalues.windows(2).into_iter().all(|w| w[0] >= w[1]));
        if alpha == 0.0 {
            let ptp = proj.p.t().dot(&proj.p);
            assert!(max_abs(&(&ptp - &Array2::<f64>::eye(4))) <= 1e-8);
        }
    }
}

#[test]
fn eigenbasis_beats_random_bases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = gaussian(&mut rng, 10, 4);
    let f = random_confidence(&mut rng, 10, 3);
    let ft = label_kernel(&f);
    let (a, b) = dependence_matrices(x.view(), ft.view(), 0.3).unwrap();
    let proj = solve_projection(x.view(), ft.view(), 0.3, 4).unwrap();
    let best = trace_form(a.view(), proj.p.view());
    let random = rayleigh_oracle(a.view(), b.view(), 1000, 4, 77).unwrap();
    assert!(best >= random - 1e-8 * best.abs().max(1.0));
    // Full-space trace is basis independent: equals tr(B⁻¹A).
    assert!((best - random).abs() <= 1e-8 * best.abs().max(1.0));
    let proj2 = solve_projection(x.view(), ft.view(), 0.3, 2).unwrap();
    let two = trace_form(a.view(), proj2.p.view());
    let random2 = rayleigh_oracle(a.view(), b.view(), 1000, 2, 78).unwrap();
    assert!(two >= random2 - 1e-10);
}

#[test]
fn hsic_decreases_with_fewer_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = gaussian(&mut rng, 40, 8);
    let f = random_confidence(&mut rng, 40, 4);
    let ft = label_kernel(&f);
    let mut prev = f64::INFINITY;
    for d_prime in (1..=8).rev() {
        let proj = solve_projection(x.view(), ft.view(), 0.1, d_prime).unwrap();
        let xt = project(x.view(), &proj).unwrap();
        let h = KernelPair::new(xt.view(), &f).unwrap().hsic().unwrap();
        assert!(h <= prev + 1e-9, "d'={d_prime}: {h} > {prev}");
        prev = h;
    }
}

#[test]
fn label_kernel_scale_does_not_change_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // Centered F̃ has rank q − 1; keep d' below it so the kept eigenvalues
    // are simple.
    let x = gaussian(&mut rng, 25, 5);
    let f = random_confidence(&mut rng, 25, 5);
    let ft = label_kernel(&f);
    let a = solve_projection(x.view(), ft.view(), 0.1, 3).unwrap();
    let b = solve_projection(x.view(), (&ft * 7.5).view(), 0.1, 3).unwrap();
    for i in 0..3 {
        let (pa, pb) = (a.p.column(i), b.p.column(i));
        let same = (&pa - &pb).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let flip = (&pa + &pb).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(same.min(flip) < 1e-7);
        assert!((b.eigenvalues[i] - 7.5 * a.eigenvalues[i]).abs() <= 1e-8 * b.eigenvalues[i].abs().max(1.0));
    }
}

#[test]
fn solver_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = gaussian(&mut rng, 25, 5);
    let f = random_confidence(&mut rng, 25, 3);
    let ft = label_kernel(&f);
    let a = solve_projection(x.view(), ft.view(), 0.1, 3).unwrap();
    let b = solve_projection(x.view(), ft.view(), 0.1, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn generalized_eigen_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let d = rng.random_range(2..12);
        let m = gaussian(&mut rng, d, d);
        let a = (&m + &m.t()) * 0.5;
        let g = gaussian(&mut rng, d, d);
        let b = g.dot(&g.t()) + Array2::<f64>::eye(d) * 0.5;
        let (vals, p) = generalized_eigen(a.view(), b.view(), d).unwrap();
        for i in 0..d {
            let r = a.dot(&p.column(i)) - b.dot(&p.column(i)) * vals[i];
            assert!(r.dot(&r).sqrt() <= 1e-8 * (frob(a.view()) + vals[i].abs() * frob(b.view())));
        }
        // Cross-check eigenvalues against nalgebra on B^{-1/2} A B^{-1/2}.
        let an = nalgebra::DMatrix::from_fn(d, d, |i, j| a[[i, j]]);
        let bn = nalgebra::DMatrix::from_fn(d, d, |i, j| b[[i, j]]);
        let be = nalgebra::SymmetricEigen::new(bn);
        let inv_sqrt = &be.eigenvectors
            * nalgebra::DMatrix::from_diagonal(&be.eigenvalues.map(|v| 1.0 / v.sqrt()))
            * be.eigenvectors.transpose();
        let c = &inv_sqrt * an * &inv_sqrt;
        let mut ref_vals: Vec<f64> = nalgebra::SymmetricEigen::new(c).eigenvalues.iter().cloned().collect();
        ref_vals.sort_by(|x, y| y.total_cmp(x));
        for i in 0..d {
            assert!((vals[i] - ref_vals[i]).abs() <= 1e-8 * ref_vals[0].abs().max(1.0));
        }
    }
}

#[test]
fn project_matches_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = gaussian(&mut rng, 12, 5);
    let f = random_confidence(&mut rng, 12, 3);
    let proj = solve_projection(x.view(), label_kernel(&f).view(), 0.1, 3).unwrap();
    let fast = project(x.view(), &proj).unwrap();
    let slow = naive_matmul(x.view(), proj.p.view());
    assert!(max_abs(&(&fast - &slow)) <= 1e-12);
}
