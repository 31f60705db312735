//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerical routines.

#![allow(dead_code)]

use graphbargain::Graph;
use rand::Rng;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) integral of `f` over `[a, b]`:
/// bisects the interval with the largest error estimate until the summed
/// estimate drops below `rel_tol` times the integral or the interval
/// budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (k, err) = gk15(f, a, b);
    let mut parts = vec![(a, b, k, err)];
    for _ in 0..5000 {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        let total: f64 = parts.iter().map(|p| p.2).sum();
        if total_err <= rel_tol * total.abs() {
            break;
        }
        let worst = (0..parts.len()).max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3)).unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (k1, e1) = gk15(f, lo, mid);
        let (k2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, k1, e1));
        parts.push((mid, hi, k2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// Unnormalized `int_0^x t^(a-1) (1-t)^(b-1) dt`. Endpoint singularities
/// are removed by `t = u^(1/a)` below 1/2 and `1 - t = v^(1/b)` above.
fn incomplete_beta_integral(x: f64, a: f64, b: f64) -> f64 {
    let tol = 1e-14;
    let left_end = x.min(0.5);
    let left = if a < 1.0 {
        let g = |u: f64| (1.0 - u.powf(1.0 / a)).powf(b - 1.0) / a;
        integrate(&g, 0.0, left_end.powf(a), tol)
    } else {
        let g = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        integrate(&g, 0.0, left_end, tol)
    };
    if x <= 0.5 {
        return left;
    }
    let right = if b < 1.0 {
        let g = |v: f64| (1.0 - v.powf(1.0 / b)).powf(a - 1.0) / b;
        integrate(&g, (1.0 - x).powf(b), 0.5f64.powf(b), tol)
    } else {
        let g = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        integrate(&g, 0.5, x, tol)
    };
    left + right
}

/// Beta CDF by quadrature, normalized by the same quadrature over `[0, 1]`.
pub fn beta_cdf_quadrature(x: f64, a: f64, b: f64) -> f64 {
    incomplete_beta_integral(x, a, b) / incomplete_beta_integral(1.0, a, b)
}

/// Mean local clustering by checking every neighbor pair against a dense
/// adjacency matrix.
pub fn brute_force_clustering(g: &Graph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut adj = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        adj[u as usize][v as usize] = true;
        adj[v as usize][u as usize] = true;
    }
    let mut sum = 0.0;
    for v in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&w| adj[v][w]).collect();
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut closed = 0usize;
        for i in 0..k {
            for j in i + 1..k {
                if adj[nb[i]][nb[j]] {
                    closed += 1;
                }
            }
        }
        sum += closed as f64 / (k * (k - 1) / 2) as f64;
    }
    sum / n as f64
}

/// Erdos-Renyi style graph on `n` nodes with edge probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u as u32, v as u32));
            }
        }
    }
    Graph::from_edges(n, edges)
}

pub fn complete_graph(n: usize) -> Graph {
    Graph::from_edges(n, (0..n as u32).flat_map(|u| (u + 1..n as u32).map(move |v| (u, v))))
}

/// Pearson chi-square statistic of observed counts against probabilities.
/// Categories with zero expected count must have zero observed count.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper 0.001 critical values of the chi-square distribution, indexed by
/// degrees of freedom.
pub const CHI2_CRIT_001: [f64; 4] = [f64::NAN, 10.828, 13.816, 16.266];
