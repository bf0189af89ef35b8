//! Independent brute-force references for the dynamic programs and fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specocc::classify::svm::{SvmOptions, SvmProblem};
use specocc::classify::tree::{entropy, entropy_of_counts};
use specocc::classify::{Classifier, Dataset, LrModel, NbcKernel, NbcModel};
use specocc::hmm::{
    forward, path_log_probability, viterbi, HmmModel, ObservationSequence, StateSequence,
};
use specocc::labeling::PuLabelVector;
use specocc::outage::{find_free_blocks, FreeBlock};

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn random_hmm(rng: &mut ChaCha8Rng, m: usize) -> HmmModel {
    HmmModel::new(
        (0..2).map(|_| random_row(rng, 2)).collect(),
        (0..2).map(|_| random_row(rng, m)).collect(),
        random_row(rng, 2),
    )
    .unwrap()
}

/// Joint probability of every state path, by direct multiplication.
fn enumerate_paths(m: &HmmModel, obs: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let t = obs.len();
    (0..1usize << t)
        .map(|code| {
            let q: Vec<usize> = (0..t).map(|i| (code >> i) & 1).collect();
            let mut p = m.initial[q[0]] * m.emission[q[0]][obs[0]];
            for i in 1..t {
                p *= m.transition[q[i - 1]][q[i]] * m.emission[q[i]][obs[i]];
            }
            (q, p)
        })
        .collect()
}

pub fn forward_matches_path_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in 1..=12 {
        for _ in 0..5 {
            let m = random_hmm(&mut rng, 3);
            let obs: Vec<usize> = (0..t).map(|_| rng.random_range(0..3)).collect();
            let brute: f64 = enumerate_paths(&m, &obs).iter().map(|(_, p)| p).sum();
            let ll = forward(&m, &ObservationSequence(obs)).unwrap();
            assert!(
                (ll - brute.ln()).abs() < 1e-10,
                "T={t}: {ll} vs {}",
                brute.ln()
            );
        }
    }
}

pub fn forward_three_steps_within_1e12() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_hmm(&mut rng, 2);
    let obs = vec![0, 1, 1];
    let brute: f64 = enumerate_paths(&m, &obs).iter().map(|(_, p)| p).sum();
    let lik = forward(&m, &ObservationSequence(obs)).unwrap().exp();
    assert!((lik - brute).abs() < 1e-12);
}

pub fn viterbi_matches_best_enumerated_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for t in 1..=12 {
        for _ in 0..5 {
            let m = random_hmm(&mut rng, 2);
            let obs: Vec<usize> = (0..t).map(|_| rng.random_range(0..2)).collect();
            let paths = enumerate_paths(&m, &obs);
            let best = paths.iter().map(|(_, p)| *p).fold(0.0, f64::max);
            let o = ObservationSequence(obs);
            let v = viterbi(&m, &o).unwrap();
            assert!((v.log_probability - best.ln()).abs() < 1e-10);
            let own = path_log_probability(&m, &v.states, &o).unwrap();
            assert!((own - v.log_probability).abs() < 1e-10);
            for (q, p) in &paths {
                assert!(
                    v.log_probability >= p.ln() - 1e-10,
                    "path {q:?} beats viterbi"
                );
            }
        }
    }
}

pub fn viterbi_tie_break_prefers_state_zero() {
    let m = HmmModel::uniform(2);
    for t in 1..=8 {
        let obs = ObservationSequence((0..t).map(|i| i % 2).collect());
        assert_eq!(viterbi(&m, &obs).unwrap().states, StateSequence(vec![0; t]));
    }
}

/// Bayes rule over smoothed Bernoulli estimates computed from raw counts.
/// The label is decided in exact integer arithmetic, so ties are exact.
fn bayes_oracle(rows: &[Vec<u8>], labels: &[u8], x: &[u8]) -> ([f64; 2], u8) {
    let n = labels.len() as f64;
    let k = x.len();
    let mut joint = [0.0; 2];
    // joint_c = (nc / n) * prod_j num_cj / (nc + 2)
    let mut num = [1u128; 2];
    let mut den = [1u128; 2];
    for c in 0..2u8 {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        let nc = idx.len();
        let mut p = nc as f64 / n;
        num[c as usize] = nc as u128;
        for j in 0..k {
            let ones = idx.iter().filter(|&&i| rows[i][j] == 1).count();
            let theta_num = if x[j] == 1 { ones + 1 } else { nc - ones + 1 };
            p *= theta_num as f64 / (nc + 2) as f64;
            num[c as usize] *= theta_num as u128;
            den[c as usize] *= (nc + 2) as u128;
        }
        joint[c as usize] = p;
    }
    let z = joint[0] + joint[1];
    let post = [joint[0] / z, joint[1] / z];
    (post, u8::from(num[1] * den[0] > num[0] * den[1]))
}

pub fn nbc_matches_enumerated_bayes_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 1..=4 {
        for trial in 0..25 {
            let n = rng.random_range(2..=16);
            let rows: Vec<Vec<u8>> = (0..n)
                .map(|_| (0..k).map(|_| rng.random_range(0..2)).collect())
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let d = Dataset::from_rows(&rows, &labels).unwrap();
            let m = NbcModel::fit(&d, NbcKernel::Bernoulli);
            for code in 0..1u32 << k {
                let x: Vec<u8> = (0..k).map(|j| ((code >> j) & 1) as u8).collect();
                let (post, label) = bayes_oracle(&rows, &labels, &x);
                assert_eq!(m.predict_one(&x), label, "k={k} trial={trial} x={x:?}");
                let p = m.posterior(&x);
                assert!((p[1] - post[1]).abs() < 1e-10);
            }
        }
    }
}

pub fn nbc_exact_tie_goes_to_zero() {
    let rows = vec![vec![0, 1], vec![1, 0]];
    let d = Dataset::from_rows(&rows, &[0, 1]).unwrap();
    let m = NbcModel::fit(&d, NbcKernel::Bernoulli);
    // symmetric data: (0,0) and (1,1) are exact ties
    assert_eq!(m.predict_one(&[0, 0]), 0);
    assert_eq!(m.predict_one(&[1, 1]), 0);
}

/// OLS residual sum of squares of `y` on an intercept plus `cols`, solved by
/// Gaussian elimination of the normal equations. `None` when singular.
fn ols_sse(rows: &[Vec<u8>], y: &[f64], cols: &[usize]) -> Option<f64> {
    let m = cols.len() + 1;
    let design = |i: usize, c: usize| {
        if c == 0 {
            1.0
        } else {
            rows[i][cols[c - 1]] as f64
        }
    };
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..rows.len() {
        for r in 0..m {
            for c in 0..m {
                a[r][c] += design(i, r) * design(i, c);
            }
            a[r][m] += design(i, r) * y[i];
        }
    }
    for p in 0..m {
        let piv = (p..m)
            .max_by(|&x, &z| a[x][p].abs().total_cmp(&a[z][p].abs()))
            .unwrap();
        if a[piv][p].abs() < 1e-9 {
            return None;
        }
        a.swap(p, piv);
        for r in 0..m {
            if r != p {
                let f = a[r][p] / a[p][p];
                for c in p..=m {
                    a[r][c] -= f * a[p][c];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..m).map(|r| a[r][m] / a[r][r]).collect();
    Some(
        (0..rows.len())
            .map(|i| {
                let fit: f64 = (0..m).map(|c| beta[c] * design(i, c)).sum();
                (y[i] - fit).powi(2)
            })
            .sum(),
    )
}

pub fn stepwise_choice_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked_steps = 0;
    for _ in 0..200 {
        let k = 3;
        let rows: Vec<Vec<u8>> = (0..8)
            .map(|_| (0..k).map(|_| rng.random_range(0..2)).collect())
            .collect();
        let labels: Vec<u8> = (0..8).map(|_| rng.random_range(0..2)).collect();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let d = Dataset::from_rows(&rows, &labels).unwrap();
        let model = LrModel::fit(&d, 3).unwrap();

        let mut selected: Vec<usize> = Vec::new();
        let mut sse = ols_sse(&rows, &y, &[]).unwrap();
        assert!((model.sse_history[0] - sse).abs() < 1e-10);
        for step in 0..=model.selected_features.len() {
            let scan: Vec<(usize, f64)> = (0..k)
                .filter(|j| !selected.contains(j))
                .filter_map(|j| {
                    let mut cols = selected.clone();
                    cols.push(j);
                    ols_sse(&rows, &y, &cols).map(|s| (j, s))
                })
                .collect();
            let best = scan.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
            if step == model.selected_features.len() {
                // selection stopped: no candidate improves SSE by the tolerance
                assert!(sse == 0.0 || scan.is_empty() || sse - best < 1e-4 * sse + 1e-10);
                break;
            }
            let chosen = model.selected_features[step];
            let chosen_sse = scan
                .iter()
                .find(|(j, _)| *j == chosen)
                .expect("chosen is a valid candidate")
                .1;
            assert!(
                chosen_sse <= best + 1e-10,
                "step {step}: chose {chosen} ({chosen_sse}) over best {best}"
            );
            assert!((model.sse_history[step + 1] - chosen_sse).abs() < 1e-10);
            selected.push(chosen);
            sse = chosen_sse;
            checked_steps += 1;
        }
    }
    assert!(checked_steps > 100);
}

/// Maximal all-zero windows of length at least `out_su`, by checking every window.
fn window_oracle(v: &[u8], out_su: usize) -> Vec<FreeBlock> {
    let n = v.len();
    let mut out = Vec::new();
    for s in 0..n {
        for e in s + 1..=n {
            let free = v[s..e].iter().all(|&x| x == 0);
            let left_closed = s == 0 || v[s - 1] == 1;
            let right_closed = e == n || v[e] == 1;
            if free && left_closed && right_closed && e - s >= out_su {
                out.push(FreeBlock {
                    start: s,
                    length: e - s,
                });
            }
        }
    }
    out
}

pub fn free_blocks_match_window_enumeration() {
    for n in 0..=12usize {
        for code in 0..1u32 << n {
            let v: Vec<u8> = (0..n).map(|i| ((code >> i) & 1) as u8).collect();
            for out_su in 1..=4 {
                let got = find_free_blocks(&PuLabelVector(v.clone()), out_su).unwrap();
                assert_eq!(got, window_oracle(&v, out_su), "{v:?} out_su={out_su}");
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..2000 {
        let v: Vec<u8> = (0..16).map(|_| u8::from(rng.random_bool(0.4))).collect();
        let out_su = rng.random_range(1..=6);
        assert_eq!(
            find_free_blocks(&PuLabelVector(v.clone()), out_su).unwrap(),
            window_oracle(&v, out_su)
        );
    }
}

pub fn entropy_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..1000 {
        let p: f64 = rng.random();
        let direct = -(p * p.log2() + (1.0 - p) * (1.0 - p).log2());
        assert!((entropy(&[p, 1.0 - p]) - direct).abs() < 1e-12);
        let (a, b) = (rng.random_range(1..100usize), rng.random_range(1..100usize));
        let pa = a as f64 / (a + b) as f64;
        let direct = -(pa * pa.log2() + (1.0 - pa) * (1.0 - pa).log2());
        assert!((entropy_of_counts(a, b) - direct).abs() < 1e-12);
    }
}

/// Direction (radians) of the maximum-margin separator, by scanning unit
/// normals on a 0.01 degree grid. For each normal the best offset is the
/// midpoint between the classes, so the margin is half the projected gap.
fn max_margin_direction(points: &[[f64; 2]], labels: &[u8]) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for step in 0..36_000 {
        let th = (step as f64 * 0.01).to_radians();
        let u = [th.cos(), th.sin()];
        let proj = |p: &[f64; 2]| u[0] * p[0] + u[1] * p[1];
        let lo_pos = points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == 1)
            .map(|(p, _)| proj(p))
            .fold(f64::INFINITY, f64::min);
        let hi_neg = points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == 0)
            .map(|(p, _)| proj(p))
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = 0.5 * (lo_pos - hi_neg);
        if margin > best.0 {
            best = (margin, th);
        }
    }
    (best.1, best.0)
}

fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d).to_degrees()
}

pub fn svm_matches_grid_max_margin() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut cases = 0;
    while cases < 10 {
        // random separable 6-point set with a clear gap
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let u = [th.cos(), th.sin()];
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..6 {
            let p = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let s = u[0] * p[0] + u[1] * p[1];
            if s.abs() < 0.5 {
                continue;
            }
            pts.push(p);
            labels.push(u8::from(s > 0.0));
        }
        if pts.len() != 6 || labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        let (oracle_th, oracle_margin) = max_margin_direction(&pts, &labels);
        let flat: Vec<f64> = pts.iter().flatten().copied().collect();
        let fit = SvmProblem::new(&flat, 2, &labels)
            .unwrap()
            .solve(1e4, &SvmOptions::default())
            .unwrap();
        let w = &fit.model.weights;
        let learned = w[1].atan2(w[0]);
        assert!(
            angle_between(learned, oracle_th) < 2.0,
            "learned {learned} vs oracle {oracle_th}"
        );
        // geometric margin agrees
        let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
        assert!((1.0 / norm - oracle_margin).abs() < 0.02 * oracle_margin.max(1e-3));
        let preds = fit.model.predict_dense(&flat);
        assert_eq!(preds, labels);
        cases += 1;
    }
}
