use crate::signal_model::SignalVector;

/// Indices of the `s` largest magnitudes, ties broken toward the lower index.
fn top_indices(z: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
    idx.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()).then(a.cmp(&b)));
    idx.truncate(s);
    idx
}

/// Keeps the `s` largest-magnitude entries of `z` and zeroes the rest.
pub fn truncate(z: &[f64], s: usize) -> SignalVector {
    let mut out = vec![0.0; z.len()];
    for i in top_indices(z, s) {
        out[i] = z[i];
    }
    SignalVector::new(out)
}

/// `e_s(f)_p = ‖f − truncate(f, s)‖_p` for `p ∈ {1, 2}`.
///
/// # Panics
/// If `p` is not 1 or 2.
pub fn sparse_approx_error(f: &[f64], s: usize, p: u32) -> f64 {
    let kept = truncate(f, s);
    let tail = f.iter().zip(kept.iter()).map(|(a, b)| (a - b).abs());
    match p {
        1 => tail.sum(),
        2 => tail.map(|d| d * d).sum::<f64>().sqrt(),
        _ => panic!("sparse_approx_error supports p = 1 or 2, got {p}"),
    }
}
