mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use graphbargain::params::{beta_cdf, cell_probability, sample_baseline, sample_from_q, ParamCell, DIMS};
use graphbargain::{BetaSpec, ParamBounds, QVector, RmatParams};

fn arb_spec() -> impl Strategy<Value = BetaSpec> {
    (0.01f64..100.0, 0.01f64..100.0).prop_map(|(a, b)| BetaSpec::new(a, b).unwrap())
}

fn arb_q() -> impl Strategy<Value = QVector> {
    prop::array::uniform4(arb_spec()).prop_map(QVector)
}

fn sorted_cuts(mut v: Vec<f64>) -> Vec<f64> {
    v.push(0.0);
    v.push(1.0);
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #[test]
    fn cdf_is_monotone_and_bounded(spec in arb_spec(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let (fl, fh) = (beta_cdf(lo, spec).unwrap(), beta_cdf(hi, spec).unwrap());
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
        prop_assert!(fl <= fh + 1e-15);
    }

    #[test]
    fn cdf_reflection(spec in arb_spec(), x in 0.0f64..1.0) {
        let mirrored = BetaSpec::new(spec.beta, spec.alpha).unwrap();
        let sum = beta_cdf(x, spec).unwrap() + beta_cdf(1.0 - x, mirrored).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cell_probabilities_partition_the_cube(
        q in arb_q(),
        cuts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 0..4), DIMS),
    ) {
        let cuts: Vec<Vec<f64>> = cuts.into_iter().map(sorted_cuts).collect();
        let mut total = 0.0;
        let mut idx = [0usize; DIMS];
        loop {
            let cell = ParamCell {
                lo: std::array::from_fn(|k| cuts[k][idx[k]]),
                hi: std::array::from_fn(|k| cuts[k][idx[k] + 1]),
            };
            let p = cell_probability(&q, &cell).unwrap();
            prop_assert!(p >= 0.0);
            total += p;
            let mut k = 0;
            while k < DIMS {
                idx[k] += 1;
                if idx[k] + 1 < cuts[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == DIMS {
                break;
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-10, "total {total}");
    }
}

#[test]
fn quadrature_oracle_on_textbook_case() {
    // I_0.3(2, 5) has the closed form 1 - 0.7^6 - 6 * 0.3 * 0.7^5
    let closed = 1.0 - 0.7f64.powi(6) - 6.0 * 0.3 * 0.7f64.powi(5);
    assert!((common::beta_cdf_quadrature(0.3, 2.0, 5.0) - closed).abs() < 1e-13);
    assert!((beta_cdf(0.3, BetaSpec::new(2.0, 5.0).unwrap()).unwrap() - closed).abs() < 1e-13);
}

#[test]
fn cell_probability_matches_monte_carlo() {
    let q = QVector::reference_result();
    let cell = ParamCell { lo: [0.0, 0.95, 0.95, 0.0], hi: [0.05, 1.0, 1.0, 0.05] };
    let exact = cell_probability(&q, &cell).unwrap();

    let samplers: Vec<Beta<f64>> = q.0.iter().map(|s| Beta::new(s.alpha, s.beta).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let draws = 1_000_000;
    let hits = (0..draws)
        .filter(|_| {
            (0..DIMS).all(|k| {
                let x = samplers[k].sample(&mut rng);
                x >= cell.lo[k] && x <= cell.hi[k]
            })
        })
        .count();
    let p_hat = hits as f64 / draws as f64;
    let se = (exact * (1.0 - exact) / draws as f64).sqrt();
    assert!(exact > 1e-4, "cell should carry visible mass, got {exact}");
    assert!((p_hat - exact).abs() <= 3.0 * se, "MC {p_hat} vs exact {exact} (se {se})");
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn uniform_q_reproduces_the_baseline_distribution() {
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base: Vec<RmatParams> = (0..n).map(|_| sample_baseline(1000, 10_000, &mut rng).unwrap()).collect();
    let from_q: Vec<RmatParams> =
        (0..n).map(|_| sample_from_q(&QVector::UNIFORM, 1000, 10_000, &mut rng).unwrap()).collect();
    // c(alpha = 0.001) * sqrt(2 / n)
    let critical = 1.949 * (2.0 / n as f64).sqrt();
    let unit_n = |p: &RmatParams| ParamBounds::for_edges(p.e_param).unwrap().unit_n(p.n_param);
    let columns: [(&str, fn(&RmatParams) -> f64); 4] = [
        ("a", |p| p.r[0]),
        ("b", |p| p.r[1]),
        ("c", |p| p.r[2]),
        ("d", |p| p.r[3]),
    ];
    for (name, f) in columns {
        let d = ks_statistic(base.iter().map(f).collect(), from_q.iter().map(f).collect());
        assert!(d < critical, "{name}: KS {d} >= {critical}");
    }
    let d = ks_statistic(base.iter().map(unit_n).collect(), from_q.iter().map(unit_n).collect());
    assert!(d < critical, "n: KS {d} >= {critical}");
    let d = ks_statistic(
        base.iter().map(|p| p.e_param as f64).collect(),
        from_q.iter().map(|p| p.e_param as f64).collect(),
    );
    assert!(d < critical, "e: KS {d} >= {critical}");
}

#[test]
fn samples_respect_the_feasible_region() {
    let q = QVector::reference_result();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5000 {
        let p = sample_from_q(&q, 19, 5000, &mut rng).unwrap();
        p.validate().unwrap();
        let bounds = ParamBounds::for_edges(p.e_param).unwrap();
        assert!((bounds.n_min..=bounds.n_max).contains(&p.n_param));
        assert!(p.n_param * (p.n_param - 1) >= 20 * p.e_param);
    }
}
