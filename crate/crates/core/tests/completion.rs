use lowrank_core::complete::{
    circulant1_complete, circulantk_complete, diag_strip_complete, g52_complete, verify_certificate, G52Branch,
    PartialMatrix, PeelOrder,
};
use lowrank_core::fiber::{enumerate_fiber, FiberConfig};
use lowrank_core::generic::generic_completion_rank;
use lowrank_core::linalg;
use lowrank_core::pattern::{circulant, diag_strip, prime_circulant};
use lowrank_core::typical::{min_real_rank, SolverConfig};
use lowrank_core::{Matrix, Rationals, Reals};

/// Coefficients `(a, b, c, d)` of `a xy + b x + c y + d`, the minor of `m`
/// on `rows x cols` as a function of the diagonal entries `x = m[0][0]` and
/// `y = m[1][1]`.
fn bilinear(m: &Matrix<f64>, rows: &[usize], cols: &[usize]) -> [f64; 4] {
    let eval = |x: f64, y: f64| {
        let mut t = m.clone();
        t[(0, 0)] = x;
        t[(1, 1)] = y;
        linalg::determinant(&Reals::default(), &t.select(rows, cols))
    };
    let d = eval(0.0, 0.0);
    let b = eval(1.0, 0.0) - d;
    let c = eval(0.0, 1.0) - d;
    [eval(1.0, 1.0) - b - c - d, b, c, d]
}

/// Roots in `x` of the two bilinear minors avoiding (row 4, col 3) and
/// (row 3, col 4): eliminating `y` leaves a quadratic. Returns its
/// discriminant and roots (real parts when complex).
fn diagonal_fiber_oracle(values: &Matrix<f64>) -> (f64, [f64; 2]) {
    let [a1, b1, c1, d1] = bilinear(values, &[0, 1, 2], &[0, 1, 3]);
    let [a2, b2, c2, d2] = bilinear(values, &[0, 1, 3], &[0, 1, 2]);
    // y = -(b1 x + d1)/(a1 x + c1) substituted into the second equation.
    let qa = a1 * b2 - a2 * b1;
    let qb = b2 * c1 + a1 * d2 - a2 * d1 - c2 * b1;
    let qc = c1 * d2 - c2 * d1;
    let disc = qb * qb - 4.0 * qa * qc;
    let re = -qb / (2.0 * qa);
    let im = disc.abs().sqrt() / (2.0 * qa);
    if disc >= 0.0 {
        let (lo, hi) = ((re - im).min(re + im), (re - im).max(re + im));
        (disc, [lo, hi])
    } else {
        (disc, [re, re])
    }
}

#[test]
fn diagonal_four_fiber_matches_elimination() {
    let cfg = FiberConfig::default();
    let mut real_seen = 0;
    let mut complex_seen = 0;
    for seed in 0..25 {
        let a = PartialMatrix::random_gaussian(circulant(4, 1).unwrap(), seed);
        let report = enumerate_fiber(&a, 2, &cfg).unwrap();
        let (disc, roots) = diagonal_fiber_oracle(a.values());
        assert_eq!(report.total(), 2, "seed {seed}");
        if disc > 0.0 {
            real_seen += 1;
            assert_eq!(report.real_count, 2, "seed {seed}");
            let mut got: Vec<f64> = report.solutions.iter().map(|s| s.re[0]).collect();
            got.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(roots) {
                assert!((g - w).abs() < 1e-6 * (1.0 + w.abs()), "seed {seed}: {g} vs {w}");
            }
        } else {
            complex_seen += 1;
            assert_eq!(report.real_count, 0, "seed {seed}");
            let (s, t) = (&report.solutions[0], &report.solutions[1]);
            for k in 0..4 {
                assert!((s.re[k] - t.re[k]).abs() < 1e-6 && (s.im[k] + t.im[k]).abs() < 1e-6, "not conjugate");
            }
            assert_eq!(min_real_rank(&a, 4, &SolverConfig::default()).unwrap(), 3);
        }
    }
    assert!(real_seen > 0 && complex_seen > 0);
}

#[test]
fn diag_strip_unique_over_rationals() {
    for n in 1..=6 {
        for k in 0..=n.min(3) {
            for seed in 0..3 {
                let a = PartialMatrix::random_integer(diag_strip(n, k).unwrap(), seed);
                let one = diag_strip_complete(&Rationals, &a, PeelOrder::default()).unwrap();
                let two = diag_strip_complete(&Rationals, &a, PeelOrder::ALTERNATE).unwrap();
                assert_eq!(one.achieved_rank, k, "S({n},{k})");
                assert_eq!(one.filled, two.filled, "S({n},{k}) seed {seed}");
                assert!(verify_certificate(&Rationals, &one).valid);
            }
        }
    }
}

#[test]
fn diagonal_corank_three_at_twenty_one() {
    let f = Reals::default();
    for seed in 0..3 {
        let a = PartialMatrix::random_gaussian(circulant(21, 1).unwrap(), seed);
        let cert = circulant1_complete(&f, &a, 3).unwrap();
        assert_eq!(cert.achieved_rank, 18);
        assert!(verify_certificate(&f, &cert).valid);
    }
}

#[test]
fn diagonal_five_has_dependent_leading_columns() {
    let f = Reals::default();
    for seed in 0..20 {
        let a = PartialMatrix::random_gaussian(circulant(5, 1).unwrap(), seed);
        let cert = circulant1_complete(&f, &a, 2).unwrap();
        assert_eq!(cert.achieved_rank, 3);
        let lead = cert.filled.select(&[0, 1, 2, 3, 4], &[0, 1, 2]);
        assert_eq!(linalg::numerical_rank(&lead, 1e-9).unwrap(), 2, "seed {seed}");
    }
}

#[test]
fn banded_six_two_reaches_corank_three() {
    let f = Reals::default();
    let gcc = generic_completion_rank(&prime_circulant(6, 2).unwrap(), 3, 0).gcc;
    assert_eq!(gcc, 3);
    for seed in 0..20 {
        let a = PartialMatrix::random_gaussian(prime_circulant(6, 2).unwrap(), seed);
        let cert = circulantk_complete(&f, &a, 2, 1).unwrap();
        assert_eq!(cert.achieved_rank, 3);
        assert!(verify_certificate(&f, &cert).valid);
    }
}

#[test]
fn g52_certificates_match_their_branch() {
    let cfg = FiberConfig::default();
    for seed in 100..115 {
        let a = PartialMatrix::random_gaussian(prime_circulant(5, 2).unwrap(), seed);
        let out = g52_complete(&a, &cfg).unwrap();
        let expected = match out.branch {
            G52Branch::Rank2 => 2,
            G52Branch::Rank3 => 3,
        };
        assert_eq!(out.certificate.achieved_rank, expected);
        assert!(verify_certificate(&Reals::default(), &out.certificate).valid);
    }
}
