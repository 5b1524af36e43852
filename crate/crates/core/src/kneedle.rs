//! Knee detection on a cumulative explained-variance curve.

/// Upper bound on the number of retained components.
pub const MAX_COMPONENTS: usize = 10;
/// Cumulative fraction used when the curve has no knee.
pub const FALLBACK_CUMULATIVE: f64 = 0.95;
const SENSITIVITY: f64 = 1.0;

/// Knee of the cumulative curve of the leading `MAX_COMPONENTS` fractions,
/// read as a component count. Falls back to the smallest count reaching 95 %
/// cumulative. Always in `[1, MAX_COMPONENTS]`.
pub fn select_components(fractions: &[f64]) -> usize {
    let fractions = &fractions[..fractions.len().min(MAX_COMPONENTS)];
    let k = fractions.len();
    if k <= 1 {
        return 1;
    }
    let cumulative: Vec<f64> = fractions
        .iter()
        .scan(0.0, |acc, f| {
            *acc += f;
            Some(*acc)
        })
        .collect();
    let n = knee(&cumulative).unwrap_or_else(|| fallback(&cumulative));
    n.clamp(1, MAX_COMPONENTS)
}

fn fallback(cumulative: &[f64]) -> usize {
    let total = cumulative[cumulative.len() - 1];
    if total <= 0.0 {
        return 1;
    }
    cumulative
        .iter()
        .position(|&c| c >= FALLBACK_CUMULATIVE * total.min(1.0) - 1e-12)
        .map_or(cumulative.len(), |i| i + 1)
}

/// Offline kneedle for a concave increasing curve sampled at x = 1..=k.
/// Returns the 1-based index of the first confirmed knee.
fn knee(y: &[f64]) -> Option<usize> {
    let k = y.len();
    let (y_min, y_max) = (y[0], y[k - 1]);
    let span = y_max - y_min;
    if !(span > 0.0) {
        return None;
    }
    let step = 1.0 / (k - 1) as f64;
    let diff: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - y_min) / span - i as f64 * step)
        .collect();

    let is_max = |i: usize| diff[i] > diff[i - 1] && diff[i] >= diff[i + 1];
    let maxima: Vec<usize> = (1..k - 1).filter(|&i| is_max(i)).collect();
    for (m, &i) in maxima.iter().enumerate() {
        let threshold = diff[i] - SENSITIVITY * step;
        let stop = maxima.get(m + 1).copied().unwrap_or(k);
        if (i + 1..stop.min(k)).any(|j| diff[j] < threshold) {
            return Some(i + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_component_spectrum() {
        let mut f = vec![9.0 / 14.0, 4.0 / 14.0, 1.0 / 14.0];
        f.extend(std::iter::repeat(1e-9).take(97));
        assert_eq!(select_components(&f), 3);
        assert_eq!(select_components(&f[..10]), 3);
        assert_eq!(select_components(&[0.643, 0.286, 0.071]), 3);
    }

    #[test]
    fn single_component() {
        assert_eq!(select_components(&[1.0]), 1);
        assert_eq!(select_components(&[1.0, 0.0, 0.0, 0.0]), 1);
    }

    #[test]
    fn flat_spectrum_uses_fallback() {
        assert_eq!(select_components(&[0.25; 4]), 4);
        assert_eq!(select_components(&[0.01; 100]), MAX_COMPONENTS);
        assert_eq!(select_components(&[0.1; 10]), MAX_COMPONENTS);
    }

    #[test]
    fn zero_spectrum() {
        assert_eq!(select_components(&[0.0; 10]), 1);
    }

    #[test]
    fn slowly_decaying_noise_tail_is_ignored() {
        let mut f = vec![0.6864, 0.1355, 0.0235];
        let rest = (1.0 - f.iter().sum::<f64>()) / 97.0;
        f.extend(std::iter::repeat(rest).take(97));
        assert_eq!(select_components(&f), 3);
    }

    #[test]
    fn two_dominant_modes() {
        let f = [0.7, 0.25, 0.01, 0.01, 0.01, 0.01, 0.005, 0.005, 0.005, 0.005];
        assert_eq!(select_components(&f), 2);
    }

    proptest! {
        #[test]
        fn always_in_range(mut f in prop::collection::vec(0.0f64..1.0, 1..60)) {
            f.sort_by(|a, b| b.total_cmp(a));
            let s: f64 = f.iter().sum();
            if s > 0.0 {
                f.iter_mut().for_each(|x| *x /= s);
            }
            let n = select_components(&f);
            prop_assert!((1..=MAX_COMPONENTS).contains(&n));
        }
    }
}
