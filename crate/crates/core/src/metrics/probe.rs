use crate::error::{Error, Result};
use crate::numerics::Matrix;

const EPOCHS: usize = 500;
const L2: f64 = 1e-3;

/// Mean held-out accuracy of a one-vs-rest logistic-regression probe over
/// stratified folds.
///
/// Folds are assigned deterministically: within each class, samples are
/// dealt round-robin to folds in index order. Features are standardised with
/// training-fold statistics; each binary classifier runs `EPOCHS` full-batch
/// gradient steps with an L2 penalty (bias unpenalised) and a step size of
/// `4 / (features + 1)`, below the stability limit of the logistic loss on
/// standardised inputs.
pub fn linear_probe(y: &Matrix, labels: &[usize], folds: usize) -> Result<f64> {
    if labels.len() != y.rows() {
        return Err(Error::Dimension(format!("{} labels for {} samples", labels.len(), y.rows())));
    }
    if folds < 2 {
        return Err(Error::Input("need at least two folds".into()));
    }
    if y.rows() < 10 * folds {
        return Err(Error::Input(format!("need at least {} samples for {folds} folds", 10 * folds)));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels);
    }

    let mut fold_of = vec![0usize; labels.len()];
    for &c in &classes {
        for (rank, i) in (0..labels.len()).filter(|&i| labels[i] == c).enumerate() {
            fold_of[i] = rank % folds;
        }
    }

    let mut total = 0.0;
    for k in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != k).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == k).collect();
        let (mean, std) = standardisation(y, &train);
        let features = |i: usize| -> Vec<f64> {
            let mut f: Vec<f64> = y.row(i).iter().zip(&mean).zip(&std).map(|((v, m), s)| (v - m) / s).collect();
            f.push(1.0);
            f
        };
        let train_x: Vec<Vec<f64>> = train.iter().map(|&i| features(i)).collect();
        let models: Vec<Vec<f64>> = classes
            .iter()
            .map(|&c| {
                let targets: Vec<f64> = train.iter().map(|&i| if labels[i] == c { 1.0 } else { 0.0 }).collect();
                fit_logistic(&train_x, &targets)
            })
            .collect();
        let correct = test
            .iter()
            .filter(|&&i| {
                let f = features(i);
                let best = models
                    .iter()
                    .map(|w| w.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>())
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(idx, _)| classes[idx])
                    .unwrap();
                best == labels[i]
            })
            .count();
        total += correct as f64 / test.len() as f64;
    }
    Ok(total / folds as f64)
}

fn standardisation(y: &Matrix, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let m = y.cols();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; m];
    for &i in rows {
        for (a, v) in mean.iter_mut().zip(y.row(i)) {
            *a += v / n;
        }
    }
    let mut std = vec![0.0; m];
    for &i in rows {
        for ((s, v), mu) in std.iter_mut().zip(y.row(i)).zip(&mean) {
            *s += (v - mu).powi(2) / n;
        }
    }
    let std = std.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (mean, std)
}

fn fit_logistic(x: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
    let dim = x[0].len();
    let lr = (4.0 / dim as f64).min(1.0);
    let n = x.len() as f64;
    let mut w = vec![0.0; dim];
    for _ in 0..EPOCHS {
        let mut grad = vec![0.0; dim];
        for (xi, t) in x.iter().zip(targets) {
            let z: f64 = w.iter().zip(xi).map(|(a, b)| a * b).sum();
            let err = 1.0 / (1.0 + (-z).exp()) - t;
            for (g, v) in grad.iter_mut().zip(xi) {
                *g += err * v / n;
            }
        }
        for j in 0..dim {
            let penalty = if j + 1 < dim { L2 * w[j] } else { 0.0 };
            w[j] -= lr * (grad[j] + penalty);
        }
    }
    w
}
