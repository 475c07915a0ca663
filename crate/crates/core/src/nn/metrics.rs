use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{argmax, Dataset, Mlp, NnError};

/// Classification metrics; rows of `confusion` are true classes, columns
/// predicted classes. Precision or recall with an empty denominator is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_f1: f64,
    pub confusion: Vec<Vec<u64>>,
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Result<Metrics, NnError> {
        let k = confusion.len();
        if k == 0 || confusion.iter().any(|r| r.len() != k) {
            return Err(NnError::Dataset("confusion matrix must be square"));
        }
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(NnError::EmptySet);
        }
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
        let mut precision = Vec::with_capacity(k);
        let mut recall = Vec::with_capacity(k);
        let mut f1 = Vec::with_capacity(k);
        for (c, row) in confusion.iter().enumerate() {
            let tp = row[c];
            let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
            let actual: u64 = row.iter().sum();
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            precision.push(p);
            recall.push(r);
            f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        }
        let macro_f1 = f1.iter().sum::<f64>() / k as f64;
        Ok(Metrics {
            accuracy: ratio(correct, total),
            precision,
            recall,
            f1,
            macro_f1,
            confusion,
        })
    }

    pub fn from_predictions(classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Metrics, NnError> {
        if truth.is_empty() {
            return Err(NnError::EmptySet);
        }
        if truth.len() != predicted.len() {
            return Err(NnError::Shape {
                expected: truth.len(),
                found: predicted.len(),
            });
        }
        let mut confusion = vec![vec![0u64; classes]; classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes || p >= classes {
                return Err(NnError::Dataset("class index out of range"));
            }
            confusion[t][p] += 1;
        }
        Metrics::from_confusion(confusion)
    }
}

/// Argmax predictions of `net` on the rows `indices` of `data`.
pub fn evaluate(net: &Mlp, data: &Dataset, indices: &[usize]) -> Result<Metrics, NnError> {
    if indices.is_empty() {
        return Err(NnError::EmptySet);
    }
    let classes = net.output_size();
    let mut truth = Vec::with_capacity(indices.len());
    let mut predicted = Vec::with_capacity(indices.len());
    for &i in indices {
        truth.push(argmax(&data.targets()[i]));
        predicted.push(net.predict(&data.features()[i])?);
    }
    Metrics::from_predictions(classes, &truth, &predicted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let m = Metrics::from_predictions(3, &[0, 1, 2, 2], &[0, 1, 2, 2]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn one_class_predictor_on_balanced_set() {
        let truth = [0, 0, 1, 1, 2, 2];
        let m = Metrics::from_predictions(3, &truth, &[0; 6]).unwrap();
        assert!((m.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.precision[1], 0.0);
    }

    #[test]
    fn hand_computed_confusion() {
        // Precision: 8/9, 9/10, 9/11; recall: 8/10, 9/10, 9/10.
        let m = Metrics::from_confusion(vec![vec![8, 1, 1], vec![0, 9, 1], vec![1, 0, 9]]).unwrap();
        assert!((m.accuracy - 26.0 / 30.0).abs() < 1e-15);
        assert!((m.precision[0] - 8.0 / 9.0).abs() < 1e-15);
        assert!((m.precision[2] - 9.0 / 11.0).abs() < 1e-15);
        let f = |p: f64, r: f64| 2.0 * p * r / (p + r);
        let expected = (f(8.0 / 9.0, 0.8) + f(0.9, 0.9) + f(9.0 / 11.0, 0.9)) / 3.0;
        assert!((m.macro_f1 - expected).abs() < 1e-15);
    }

    #[test]
    fn empty_split_is_an_error() {
        assert_eq!(Metrics::from_predictions(3, &[], &[]), Err(NnError::EmptySet));
    }
}
