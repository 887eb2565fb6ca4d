mod common;

use common::{normal_draws, simpson, sinc};
use fourier_smooth::density::{density_at, EstimatorConfig, Smoothness};
use fourier_smooth::error::Error;
use fourier_smooth::markov::{conditional_mass, simulate_ar1, simulate_bivariate, transition_at, transition_grid, MarkovSeries};
use fourier_smooth::rng::Stream;
use fourier_smooth::sample::{LabeledSample, SampleMatrix};
use fourier_smooth::simulate::{gaussian_nw_baseline, generate, mise, ExampleId, ExampleSpec, Generated};
use proptest::prelude::*;
use std::f64::consts::PI;

fn cfg(r: f64) -> EstimatorConfig {
    EstimatorConfig::with_radius(r).unwrap()
}

fn series(values: &[f64]) -> MarkovSeries {
    MarkovSeries::new(SampleMatrix::from_column(values).unwrap()).unwrap()
}

#[test]
fn two_point_closed_form() {
    let (a, b, r) = (0.4, -0.3, 2.5);
    let s = series(&[a, b]);
    for y in [-1.0, -0.3, 0.0, 0.8] {
        let v = transition_at(&s, &[a], &[y], &cfg(r)).unwrap().value;
        let want = r * sinc(y - b, r) / (PI * (r + sinc(a - b, r)));
        assert!((v - want).abs() < 1e-14);
    }
}

#[test]
fn mass_identity_by_quadrature() {
    let s = series(&normal_draws(30, 3));
    let (x, r) = ([0.25], 2.0);
    let l = 2000.0;
    let m = 800_000;
    let h = 2.0 * l / m as f64;
    let ys: Vec<Vec<f64>> = (0..=m).map(|k| vec![-l + h * k as f64]).collect();
    let vals: Vec<f64> = transition_grid(&s, &x, &ys, &cfg(r)).unwrap().iter().map(|e| e.value).collect();
    let integral = simpson(|y| vals[((y + l) / h).round() as usize], -l, l, m);
    let mass = conditional_mass(&s, &x, &cfg(r)).unwrap();
    assert!((integral - mass).abs() < 1e-3, "{integral} vs {mass}");
}

#[test]
fn mass_near_one_at_a_data_point() {
    let s = simulate_ar1(10_000, 0.6, 0.5, 1).unwrap();
    let x = s.data().row(500).to_vec();
    let r = 3.0;
    let mass = conditional_mass(&s, &x, &cfg(r)).unwrap();
    let weights: Vec<f64> = s.data().rows().map(|p| sinc(x[0] - p[0], r)).collect();
    let total: f64 = weights.iter().sum();
    assert!((1.0 - mass - weights[weights.len() - 1] / total).abs() < 1e-12);
    assert!((1.0 - mass).abs() <= r / total.abs());
}

#[test]
fn independent_series_reduces_to_marginal() {
    let t = 10_000;
    let s = series(&normal_draws(t, 8));
    let c = EstimatorConfig::from_rule(Smoothness::Supersmooth { alpha: 2.0, c1: 0.5 }, 1, t).unwrap();
    let ys: Vec<Vec<f64>> = (0..=80).map(|k| vec![-2.0 + 0.05 * k as f64]).collect();
    let cond = transition_grid(&s, &[0.5], &ys, &c).unwrap();
    let sup = cond
        .iter()
        .map(|e| (e.value - density_at(s.data(), &e.y, &c).unwrap().raw_value).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 0.05, "{sup}");
}

#[test]
fn grid_reuse_matches_pointwise() {
    let s = simulate_bivariate(500, 0.6, 0.3, 0.7, [0.5, 0.2], 4).unwrap();
    let x = [0.3, -0.2];
    let ys: Vec<Vec<f64>> = (0..25).map(|k| vec![-1.0 + 0.1 * k as f64, 0.5 - 0.05 * k as f64]).collect();
    let g = transition_grid(&s, &x, &ys, &cfg(2.0)).unwrap();
    for (e, y) in g.iter().zip(&ys) {
        assert_eq!(*e, transition_at(&s, &x, y, &cfg(2.0)).unwrap());
    }
}

#[test]
fn time_order_matters() {
    let a = series(&[0.0, 1.0, -0.5]);
    let b = series(&[1.0, 0.0, -0.5]);
    let ea = transition_at(&a, &[0.0], &[1.0], &cfg(2.0)).unwrap();
    let eb = transition_at(&b, &[0.0], &[1.0], &cfg(2.0)).unwrap();
    assert!((ea.denominator_mass - eb.denominator_mass).abs() < 1e-15);
    assert_ne!(ea.numerator_mass, eb.numerator_mass);
}

#[test]
fn ar1_properties() {
    let s = simulate_ar1(10_000, 0.6, 0.5, 7).unwrap();
    assert_eq!(s.data().row(0), &[0.5]);
    assert!((s.lag1_autocorrelation(0) - 0.6).abs() <= 0.03);
    assert_eq!(s.data(), simulate_ar1(10_000, 0.6, 0.5, 7).unwrap().data());
    let iid = simulate_ar1(50, 0.0, 2.0, 9).unwrap();
    let mut st = Stream::new(9, 0);
    for t in 1..50 {
        assert_eq!(iid.data().row(t)[0], st.normal());
    }
    assert!(simulate_ar1(10, 1.0, 0.0, 0).is_err());
    assert!(simulate_ar1(1, 0.5, 0.0, 0).is_err());
    assert!(MarkovSeries::new(SampleMatrix::from_column(&[1.0]).unwrap()).is_err());
}

#[test]
fn first_example_noise_is_the_seeded_draw() {
    let Generated::Labeled(l) = generate(&ExampleSpec::new(ExampleId::Ex1, 11).with_n(3)).unwrap() else { panic!() };
    let mut st = Stream::new(11, 0);
    for i in 0..3 {
        let (x1, z, eps) = (st.normal(), st.normal(), st.normal());
        let x2 = x1 + 0.1 * z;
        assert_eq!(l.x.row(i), &[x1, x2]);
        assert_eq!(l.y[i], x1 * x1 - 3.0 * x2 + eps);
    }
}

#[test]
fn noiseless_linear_example() {
    let Generated::Labeled(l) = generate(&ExampleSpec::new(ExampleId::Ex2, 1).with_n(50).set("noise", 0.0)).unwrap() else {
        panic!()
    };
    assert_eq!(l.d(), 4);
    for (row, y) in l.x.rows().zip(&l.y) {
        let want = 0.25 * row[0] + 0.5 * row[1] + 0.75 * row[2] + 1.0 * row[3];
        assert!((y - want).abs() <= 1e-15 * (1.0 + want.abs()));
    }
}

#[test]
fn markov_example_delegates() {
    let Generated::Series(s) = generate(&ExampleSpec::new(ExampleId::Ex6, 5).with_n(200)).unwrap() else { panic!() };
    assert_eq!(s.data(), simulate_ar1(200, 0.6, 0.5, 5).unwrap().data());
    let Generated::Series(s2) = generate(&ExampleSpec::new(ExampleId::Ex6, 5).with_n(200).set("dim", 2.0)).unwrap() else {
        panic!()
    };
    assert_eq!(s2.d(), 2);
}

#[test]
fn first_example_marginals() {
    let n = 100_000;
    let Generated::Labeled(l) = generate(&ExampleSpec::new(ExampleId::Ex1, 3).with_n(n)).unwrap() else { panic!() };
    let x1 = l.x.column(0);
    let mean = x1.iter().sum::<f64>() / n as f64;
    let var = x1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "{mean}");
    assert!((var - 1.0).abs() <= 4.0 * (2.0 / n as f64).sqrt(), "{var}");
}

#[test]
fn generator_errors() {
    assert!(generate(&ExampleSpec::new(ExampleId::Ex7, 0)).is_err());
    assert!(generate(&ExampleSpec::new(ExampleId::Ex1, 0).set("bogus", 1.0)).is_err());
    assert!(generate(&ExampleSpec::new(ExampleId::Ex4, 0).set("weight", 2.0)).is_err());
    assert!(generate(&ExampleSpec::new(ExampleId::Ex1, 0).with_n(0)).is_err());
}

#[test]
fn mise_examples() {
    let a = [1.0, 2.0, 3.0];
    assert_eq!(mise(&a, &a, &[0.5, 0.5, 0.5]).unwrap(), 0.0);
    let shifted = [1.5, 2.5, 3.5];
    let v = mise(&shifted, &a, &[1.0, 1.0, 1.0]).unwrap();
    assert!((v - 0.25 * 3.0).abs() < 1e-15);
    assert!(mise(&a, &a[..2], &[1.0; 3]).is_err());
}

#[test]
fn baseline_edge_cases() {
    let one = LabeledSample::new(SampleMatrix::from_column(&[0.2]).unwrap(), vec![4.0]).unwrap();
    assert_eq!(gaussian_nw_baseline(&one, &[1.0], 0.5).unwrap(), 4.0);
    assert!(matches!(gaussian_nw_baseline(&one, &[1e6], 0.01), Err(Error::DegenerateWeights(_))));
    assert!(gaussian_nw_baseline(&one, &[0.0], 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_is_ratio_of_weight_sums(values in prop::collection::vec(-2.0f64..2.0, 2..40), x in -2.0f64..2.0, r in 0.5f64..4.0) {
        let s = series(&values);
        let w: Vec<f64> = values.iter().map(|v| sinc(x - v, r)).collect();
        let total: f64 = w.iter().sum();
        prop_assume!(total.abs() > 1e-6);
        let want = w[..w.len() - 1].iter().sum::<f64>() / total;
        let got = conditional_mass(&s, &[x], &cfg(r)).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn value_matches_definition(values in prop::collection::vec(-2.0f64..2.0, 2..40), x in -2.0f64..2.0, y in -2.0f64..2.0, r in 0.5f64..4.0) {
        let s = series(&values);
        let e = transition_at(&s, &[x], &[y], &cfg(r)).unwrap();
        let num: f64 = values.windows(2).map(|w| sinc(x - w[0], r) * sinc(y - w[1], r)).sum();
        let den: f64 = values.iter().map(|v| sinc(x - v, r)).sum();
        prop_assert!((e.numerator_mass - num).abs() <= 1e-10 * (1.0 + num.abs()));
        prop_assert!((e.denominator_mass - den).abs() <= 1e-10 * (1.0 + den.abs()));
        if e.reliable {
            prop_assert!((e.value - num / (PI * den)).abs() <= 1e-9 * (1.0 + e.value.abs()));
        }
    }

    #[test]
    fn generators_are_seeded(seed in any::<u64>(), which in 1u8..=6) {
        let id: ExampleId = which.to_string().parse().unwrap();
        let spec = ExampleSpec::new(id, seed).with_n(40);
        prop_assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn baseline_is_affine(shift in -5.0f64..5.0, scale in -3.0f64..3.0, seed in 0u64..50) {
        let Generated::Labeled(l) = generate(&ExampleSpec::new(ExampleId::Ex1, seed).with_n(100)).unwrap() else { panic!() };
        let moved = LabeledSample::new(l.x.clone(), l.y.iter().map(|v| scale * v + shift).collect()).unwrap();
        let a = gaussian_nw_baseline(&l, &[0.2, 0.1], 0.5).unwrap();
        let b = gaussian_nw_baseline(&moved, &[0.2, 0.1], 0.5).unwrap();
        prop_assert!((b - (scale * a + shift)).abs() <= 1e-10 * (1.0 + a.abs()));
    }
}
