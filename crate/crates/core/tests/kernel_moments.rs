//! Moment checks of the sampling kernels against closed-form theory, all with
//! fixed seeds and a 3-standard-error band at 1e5 draws.

use lcmcr::kernels::RngStream;

const DRAWS: usize = 100_000;

fn mean_and_check(label: &str, samples: &[f64], theory_mean: f64, theory_sd: f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let se = theory_sd / n.sqrt();
    assert!(
        (mean - theory_mean).abs() <= 3.0 * se,
        "{label}: mean {mean} outside {theory_mean} ± {:.3e}",
        3.0 * se
    );
}

#[test]
fn beta_uniform_case_has_mean_half() {
    let mut rng = RngStream::new(101, 0);
    let xs: Vec<f64> = (0..DRAWS).map(|_| rng.sample_beta(1.0, 1.0).unwrap()).collect();
    mean_and_check("beta(1,1)", &xs, 0.5, (1.0f64 / 12.0).sqrt());
}

#[test]
fn beta_4_8_has_mean_one_third() {
    let mut rng = RngStream::new(102, 0);
    let xs: Vec<f64> = (0..DRAWS).map(|_| rng.sample_beta(4.0, 8.0).unwrap()).collect();
    let var: f64 = 4.0 * 8.0 / (144.0 * 13.0);
    mean_and_check("beta(4,8)", &xs, 1.0 / 3.0, var.sqrt());
    // Second moment: E[X^2] = var + mean^2.
    let m2 = xs.iter().map(|x| x * x).sum::<f64>() / DRAWS as f64;
    let m2_theory = var + 1.0 / 9.0;
    assert!((m2 - m2_theory).abs() < 4e-4, "second moment {m2} vs {m2_theory}");
}

#[test]
fn gamma_shape_rate_parameterization() {
    let mut rng = RngStream::new(103, 0);
    let xs: Vec<f64> = (0..DRAWS).map(|_| rng.sample_gamma(2.0, 2.0).unwrap()).collect();
    mean_and_check("gamma(2,2)", &xs, 1.0, (2.0f64 / 4.0).sqrt());
}

#[test]
fn gamma_unit_is_exponential() {
    let mut rng = RngStream::new(104, 0);
    let xs: Vec<f64> = (0..DRAWS).map(|_| rng.sample_gamma(1.0, 1.0).unwrap()).collect();
    let p_gt_1 = xs.iter().filter(|&&x| x > 1.0).count() as f64 / DRAWS as f64;
    let theory = (-1.0f64).exp();
    let se = (theory * (1.0 - theory) / DRAWS as f64).sqrt();
    assert!((p_gt_1 - theory).abs() <= 3.0 * se, "P(X>1) {p_gt_1} vs {theory}");
}

#[test]
fn dirichlet_symmetric_components_average_a_third() {
    let mut rng = RngStream::new(105, 0);
    let mut first = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        first.push(rng.sample_dirichlet(&[1.0, 1.0, 1.0]).unwrap()[0]);
    }
    // Var of one Dirichlet(1,1,1) component is 2/36.
    mean_and_check("dirichlet(1,1,1)[0]", &first, 1.0 / 3.0, (2.0f64 / 36.0).sqrt());
}

#[test]
fn multinomial_cell_frequency() {
    let mut rng = RngStream::new(106, 0);
    let out = rng.sample_multinomial(100_000, &[0.2, 0.8]).unwrap();
    let se = (100_000.0f64 * 0.2 * 0.8).sqrt();
    assert!((out[0] as f64 - 20_000.0).abs() <= 3.0 * se, "count {}", out[0]);
}

#[test]
fn negative_binomial_means() {
    let mut rng = RngStream::new(107, 0);
    let xs: Vec<f64> =
        (0..DRAWS).map(|_| rng.sample_negative_binomial(100, 0.5).unwrap() as f64).collect();
    // mean r(1-p)/p = 100, var r(1-p)/p^2 = 200.
    mean_and_check("negbin(100,0.5)", &xs, 100.0, (200.0f64).sqrt());

    let ys: Vec<f64> =
        (0..DRAWS).map(|_| rng.sample_negative_binomial(10, 0.25).unwrap() as f64).collect();
    // mean 30, var 120.
    mean_and_check("negbin(10,0.25)", &ys, 30.0, (120.0f64).sqrt());
}

#[test]
fn negative_multinomial_component_means_match_theory() {
    // weights (0.2, 0.1), successes 50: means 50*0.2/0.7 and 50*0.1/0.7.
    let mut rng = RngStream::new(108, 0);
    let (mut s0, mut s1) = (0.0, 0.0);
    for _ in 0..DRAWS {
        let out = rng.sample_negative_multinomial(50, &[0.2, 0.1]).unwrap();
        s0 += out[0] as f64;
        s1 += out[1] as f64;
    }
    let n = DRAWS as f64;
    let (m0, m1) = (s0 / n, s1 / n);
    let t0 = 50.0 * 0.2 / 0.7;
    let t1 = 50.0 * 0.1 / 0.7;
    // Component variance of a negative multinomial:
    // r * w_i (1 - sum_w + w_i) / (1 - sum_w)^2.
    let v0 = 50.0 * 0.2 * (0.7 + 0.2) / (0.7 * 0.7);
    let v1 = 50.0 * 0.1 * (0.7 + 0.1) / (0.7 * 0.7);
    assert!((m0 - t0).abs() <= 3.0 * (v0 / n).sqrt(), "component 0: {m0} vs {t0}");
    assert!((m1 - t1).abs() <= 3.0 * (v1 / n).sqrt(), "component 1: {m1} vs {t1}");
}

#[test]
fn negative_multinomial_single_cell_is_negative_binomial() {
    // One cell with weight c: the component is NegBinomial(r, 1-c).
    let mut rng = RngStream::new(109, 0);
    let xs: Vec<f64> = (0..DRAWS)
        .map(|_| rng.sample_negative_multinomial(20, &[0.4]).unwrap()[0] as f64)
        .collect();
    // mean r c/(1-c) = 20*0.4/0.6, var r c/(1-c)^2.
    let mean = 20.0 * 0.4 / 0.6;
    let var: f64 = 20.0 * 0.4 / 0.36;
    mean_and_check("negmulti single cell", &xs, mean, var.sqrt());
}
