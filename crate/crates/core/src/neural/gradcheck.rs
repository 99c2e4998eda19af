//! Central finite-difference verification of analytic gradients.

use ndarray::Array2;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Something with a scalar loss over a list of tensors (parameters and inputs).
pub trait Differentiable {
    /// Every tensor whose gradient is checked, in a fixed order.
    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>>;

    /// Loss at the current values and the analytic gradient of each tensor,
    /// in the order of [`Differentiable::tensors_mut`].
    fn loss_and_grad(&mut self) -> (f64, Vec<Array2<f64>>);

    fn loss(&mut self) -> f64 {
        self.loss_and_grad().0
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(tensor, flat element)` where the maximum occurred.
    pub worst: (usize, usize),
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub entries_checked: usize,
}

/// Compares the analytic gradient against `(L(θ+h) − L(θ−h)) / 2h` on every entry.
pub fn grad_check<D: Differentiable + ?Sized>(target: &mut D, h: f64) -> GradCheckReport {
    let (_, analytic) = target.loss_and_grad();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (0, 0),
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        entries_checked: 0,
    };
    let shapes: Vec<usize> = target.tensors_mut().iter().map(|t| t.len()).collect();
    for (ti, &len) in shapes.iter().enumerate() {
        for e in 0..len {
            let original = flat_get(target, ti, e);
            flat_set(target, ti, e, original + h);
            let plus = target.loss();
            flat_set(target, ti, e, original - h);
            let minus = target.loss();
            flat_set(target, ti, e, original);
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[ti].iter().nth(e).copied().unwrap_or(0.0);
            let err = relative_error(a, numeric);
            report.entries_checked += 1;
            if err > report.max_relative_error || err.is_nan() {
                report.max_relative_error = err;
                report.worst = (ti, e);
                report.analytic_at_worst = a;
                report.numeric_at_worst = numeric;
            }
        }
    }
    report
}

fn flat_get<D: Differentiable + ?Sized>(target: &mut D, tensor: usize, elem: usize) -> f64 {
    let ts = target.tensors_mut();
    *ts[tensor].iter().nth(elem).expect("element in range")
}

fn flat_set<D: Differentiable + ?Sized>(target: &mut D, tensor: usize, elem: usize, v: f64) {
    let mut ts = target.tensors_mut();
    *ts[tensor].iter_mut().nth(elem).expect("element in range") = v;
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// L = Σ x_i³ with a switchable fault in the analytic gradient.
    struct Cubic {
        x: Array2<f64>,
        corrupt: bool,
    }

    impl Differentiable for Cubic {
        fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
            vec![&mut self.x]
        }

        fn loss_and_grad(&mut self) -> (f64, Vec<Array2<f64>>) {
            let loss = self.x.iter().map(|v| v * v * v).sum();
            let mut g = self.x.mapv(|v| 3.0 * v * v);
            if self.corrupt {
                g[[0, 1]] *= 1.1;
            }
            (loss, vec![g])
        }
    }

    #[test]
    fn exact_gradient_passes() {
        let mut c = Cubic { x: array![[0.5, -1.5, 2.0]], corrupt: false };
        let r = grad_check(&mut c, DEFAULT_STEP);
        assert_eq!(r.entries_checked, 3);
        assert!(r.max_relative_error < 1e-8, "{r:?}");
    }

    #[test]
    fn injected_fault_is_caught() {
        let mut c = Cubic { x: array![[0.5, -1.5, 2.0]], corrupt: true };
        let r = grad_check(&mut c, DEFAULT_STEP);
        assert!(r.max_relative_error > 1e-2);
        assert_eq!(r.worst, (0, 1));
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
        assert!((relative_error(0.0, 1e-9) - 0.1).abs() < 1e-15);
    }
}
