//! One-vs-rest logistic regression, the downstream probe for every
//! classification task.
//!
//! Training is deliberately boring: full-batch Adam on the L2-regularized
//! log loss from a zero start, stopped when the gradient's infinity norm
//! drops below 1e-6 or after 500 iterations. No randomness, so identical
//! inputs give identical classifiers.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::Error;
use crate::Result;

const MAX_ITERS: usize = 500;
const TOL: f64 = 1e-6;
const LR: f64 = 0.1;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// A fitted one-vs-rest model: one binary separator per class.
#[derive(Debug, Clone)]
pub struct LogReg {
    /// (num_classes, dim) weight matrix.
    w: Array2<f64>,
    /// Per-class intercepts.
    b: Array1<f64>,
}

/// Fit an OVR classifier on rows of `x` with class ids `y`. `l2` is the
/// ridge strength applied to the weights (not the intercepts), scaled by
/// 1/n as in the usual `C = 1/l2` convention.
pub fn logreg_ovr(x: ArrayView2<'_, f64>, y: &[usize], num_classes: usize, l2: f64) -> Result<LogReg> {
    if x.nrows() != y.len() {
        return Err(Error::Metric(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() == 0 || num_classes < 2 {
        return Err(Error::Metric(
            "logistic regression needs data and at least two classes".into(),
        ));
    }
    if y.iter().any(|&c| c >= num_classes) {
        return Err(Error::Metric("class id out of range".into()));
    }

    let dim = x.ncols();
    let mut w = Array2::zeros((num_classes, dim));
    let mut b = Array1::zeros(num_classes);
    let mut targets = Array1::zeros(x.nrows());
    for c in 0..num_classes {
        for (t, &yi) in targets.iter_mut().zip(y) {
            *t = if yi == c { 1.0 } else { 0.0 };
        }
        let (wc, bc) = fit_binary(x, &targets, l2);
        w.row_mut(c).assign(&wc);
        b[c] = bc;
    }
    Ok(LogReg { w, b })
}

/// Minimize (1/n) Σ log-loss + l2/(2n) ‖w‖² with full-batch Adam.
fn fit_binary(x: ArrayView2<'_, f64>, y: &Array1<f64>, l2: f64) -> (Array1<f64>, f64) {
    let (n, dim) = (x.nrows(), x.ncols());
    let nf = n as f64;
    let mut w = Array1::zeros(dim);
    let mut b = 0.0f64;

    let mut m_w: Array1<f64> = Array1::zeros(dim);
    let mut v_w: Array1<f64> = Array1::zeros(dim);
    let (mut m_b, mut v_b) = (0.0f64, 0.0f64);

    for step in 1..=MAX_ITERS {
        // Residual σ(margin) − y drives both gradients.
        let mut resid = x.dot(&w);
        resid += b;
        resid.mapv_inplace(sigmoid);
        resid -= y;

        let mut g_w = x.t().dot(&resid);
        g_w.mapv_inplace(|g| g / nf);
        g_w.scaled_add(l2 / nf, &w);
        let g_b = resid.sum() / nf;

        let g_inf = g_w.iter().fold(g_b.abs(), |a, g| a.max(g.abs()));
        if g_inf <= TOL {
            break;
        }

        let bc1 = 1.0 - BETA1.powi(step as i32);
        let bc2 = 1.0 - BETA2.powi(step as i32);
        for ((w, m), (v, g)) in w
            .iter_mut()
            .zip(m_w.iter_mut())
            .zip(v_w.iter_mut().zip(g_w.iter()))
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *w -= LR * (*m / bc1) / ((*v / bc2).sqrt() + EPS);
        }
        m_b = BETA1 * m_b + (1.0 - BETA1) * g_b;
        v_b = BETA2 * v_b + (1.0 - BETA2) * g_b * g_b;
        b -= LR * (m_b / bc1) / ((v_b / bc2).sqrt() + EPS);
    }
    (w, b)
}

fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

impl LogReg {
    pub fn num_classes(&self) -> usize {
        self.w.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Raw per-class margins, one row per input row.
    pub fn decision(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Metric(format!(
                "classifier expects {} features, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        let mut d = x.dot(&self.w.t());
        d += &self.b;
        Ok(d)
    }

    /// Scores for ranking a binary task: the margin of class 1.
    pub fn binary_scores(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if self.num_classes() != 2 {
            return Err(Error::Metric("binary scores need a two-class model".into()));
        }
        Ok(self.decision(x)?.index_axis(Axis(1), 1).to_vec())
    }

    /// Highest-margin class per row.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let d = self.decision(x)?;
        Ok(d
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite margins"))
                    .map(|(i, _)| i)
                    .expect("at least one class")
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separates_a_linearly_separable_binary_problem() {
        let x = array![[-2.0], [-1.5], [-1.0], [1.0], [1.5], [2.0]];
        let y = vec![0, 0, 0, 1, 1, 1];
        let model = logreg_ovr(x.view(), &y, 2, 1.0).unwrap();
        assert_eq!(model.predict(x.view()).unwrap(), y);
        let scores = model.binary_scores(x.view()).unwrap();
        assert!(scores[0] < 0.0 && scores[5] > 0.0);
        // The two OVR separators of a binary problem mirror each other.
        assert!((model.w[(0, 0)] + model.w[(1, 0)]).abs() < 1e-4);
    }

    #[test]
    fn three_class_blobs_are_recovered() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let centers = [[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]];
        for (c, center) in centers.iter().enumerate() {
            for i in 0..8 {
                let dx = (i % 3) as f64 * 0.3 - 0.3;
                let dy = (i / 3) as f64 * 0.3 - 0.3;
                rows.push([center[0] + dx, center[1] + dy]);
                y.push(c);
            }
        }
        let x = Array2::from_shape_vec((24, 2), rows.concat()).unwrap();
        let model = logreg_ovr(x.view(), &y, 3, 1.0).unwrap();
        assert_eq!(model.predict(x.view()).unwrap(), y);
    }

    #[test]
    fn heavier_regularization_shrinks_weights() {
        let x = array![[-1.0], [1.0]];
        let y = vec![0, 1];
        let loose = logreg_ovr(x.view(), &y, 2, 0.01).unwrap();
        let tight = logreg_ovr(x.view(), &y, 2, 10.0).unwrap();
        assert!(tight.w[(1, 0)].abs() < loose.w[(1, 0)].abs());
    }

    #[test]
    fn deterministic_across_fits() {
        let x = array![[0.1, 1.0], [0.9, -0.2], [-0.4, 0.4], [0.7, 0.7]];
        let y = vec![0, 1, 0, 1];
        let a = logreg_ovr(x.view(), &y, 2, 1.0).unwrap();
        let b = logreg_ovr(x.view(), &y, 2, 1.0).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.b, b.b);
    }

    #[test]
    fn shape_and_label_validation() {
        let x = array![[0.0, 1.0]];
        assert!(logreg_ovr(x.view(), &[0, 1], 2, 1.0).is_err());
        assert!(logreg_ovr(x.view(), &[5], 2, 1.0).is_err());
        let model = logreg_ovr(array![[-1.0], [1.0]].view(), &[0, 1], 2, 1.0).unwrap();
        assert!(model.decision(x.view()).is_err());
    }
}
