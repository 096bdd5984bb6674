//! Independent oracles for the detection functionals: trapezoid-rule
//! integration with hand-written densities and derivatives, pinned against
//! the adaptive-quadrature path, plus the tabulated-density construction
//! checked against its analytic source.

use fluctlab::{
    detection_error, fisher_information, rho_l, second_fisher, DensityModel, FisherSet,
};

/// Plain trapezoid rule on a uniform grid; spectrally accurate for smooth
/// integrands decaying at the endpoints.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for k in 1..steps {
        sum += f(a + k as f64 * h);
    }
    sum * h
}

#[test]
fn gaussian_fisher_functionals_reduce_to_constants() {
    // For p = N(0,1): F_p = 1 and G_p = E[(x^2-1)^2] = 2; for N(0,2): F_d = 1/2.
    let p = DensityModel::standard_gaussian();
    assert!((fisher_information(&p).unwrap() - 1.0).abs() < 1e-8);
    assert!((second_fisher(&p).unwrap() - 2.0).abs() < 1e-7);
    let pd = DensityModel::gaussian(2.0).unwrap();
    assert!((fisher_information(&pd).unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn logistic_fisher_information_matches_trapezoid_and_closed_form() {
    // Unit-variance logistic: scale s = sqrt(3)/pi, F_p = 1/(3 s^2) = pi^2/9.
    let s = 3f64.sqrt() / std::f64::consts::PI;
    let density = |x: f64| {
        let e = (-x / s).exp();
        e / (s * (1.0 + e) * (1.0 + e))
    };
    // p'/p = -tanh(x / (2s)) / s, all written without the library.
    let score = |x: f64| -(x / (2.0 * s)).tanh() / s;
    let oracle = trapezoid(|x| score(x) * score(x) * density(x), -60.0, 60.0, 400_000);
    let closed = std::f64::consts::PI.powi(2) / 9.0;
    assert!((oracle - closed).abs() < 1e-9, "trapezoid {oracle} vs closed {closed}");
    let fp = fisher_information(&DensityModel::logistic_unit_variance()).unwrap();
    assert!((fp - closed).abs() < 1e-6, "library {fp} vs closed {closed}");
    assert!((fp - oracle).abs() < 1e-6, "library {fp} vs trapezoid {oracle}");
}

#[test]
fn logistic_second_fisher_matches_trapezoid() {
    let s = 3f64.sqrt() / std::f64::consts::PI;
    let density = |x: f64| {
        let e = (-x / s).exp();
        e / (s * (1.0 + e) * (1.0 + e))
    };
    // p'' / p = (score)^2 + (score)' with score = -tanh(x/2s)/s.
    let ratio2 = |x: f64| {
        let t = (x / (2.0 * s)).tanh();
        (t * t) / (s * s) - (1.0 - t * t) / (2.0 * s * s)
    };
    let oracle = trapezoid(|x| ratio2(x) * ratio2(x) * density(x), -60.0, 60.0, 400_000);
    let gp = second_fisher(&DensityModel::logistic_unit_variance()).unwrap();
    assert!(
        (gp - oracle).abs() < 2e-5 * (1.0 + oracle.abs()),
        "library {gp} vs trapezoid {oracle}"
    );
}

#[test]
fn tabulated_gaussian_reproduces_the_analytic_functionals() {
    let grid: Vec<(f64, f64)> = (-480..=480)
        .map(|k| {
            let x = k as f64 * 0.025;
            (x, -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln())
        })
        .collect();
    let tab = DensityModel::from_log_table(&grid).unwrap();
    // Interpolation error of the cubic through smooth data is far below the
    // functional tolerances.
    for &x in &[-3.3, -1.05, 0.0, 0.4, 2.7] {
        let exact = -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!(
            (tab.log_density(x) - exact).abs() < 1e-6,
            "log density at {x}: {} vs {exact}",
            tab.log_density(x)
        );
    }
    let fp = fisher_information(&tab).unwrap();
    assert!((fp - 1.0).abs() < 1e-4, "tabulated F_p = {fp}");
}

#[test]
fn rho_l_closed_form_cases() {
    // Gaussian noise: F_p = 1, F_d = 1/2, G_p = 2 gives
    // rho_L = -(1/4)[log(1-lambda) + lambda(1 - 2*0.5) + (lambda^2/4)(2 - 2)]
    //       = -(1/4) log(1-lambda).
    let fs = FisherSet::new(1.0, 0.5, 2.0).unwrap();
    for lambda in [0.1, 0.35, 0.5, 0.8] {
        let expected = -0.25 * (1.0f64 - lambda).ln();
        let got = rho_l(lambda, &fs).unwrap();
        assert!((got - expected).abs() < 1e-12, "lambda {lambda}: {got} vs {expected}");
    }
}

#[test]
fn detection_error_matches_trapezoid_of_the_gaussian_overlap() {
    // The Type-I error of the threshold test is the Gaussian tail mass
    // P(N(-rho, 2 rho) > 0); by symmetry the Type-II error is equal, so
    // detection_error = 2 * tail.
    for rho in [0.05f64, 0.3, 1.2] {
        let sigma = (2.0 * rho).sqrt();
        let density = |x: f64| {
            let z: f64 = (x + rho) / sigma;
            (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let tail = trapezoid(density, 0.0, rho + 30.0 * sigma, 300_000);
        let got = detection_error(rho).unwrap();
        assert!((got - 2.0 * tail).abs() < 1e-9, "rho {rho}: {got} vs 2*tail {}", 2.0 * tail);
    }
}
