use crate::error::{Error, Result};

/// Ranks (1-based) of units by unfolded angle, ascending. Ties go to the
/// unit whose id sorts first. Angles are used as given, without re-wrapping.
pub fn unfold_ranks(entries: &[(String, Option<f64>)]) -> Result<Vec<usize>> {
    let mut order: Vec<(usize, f64)> = entries
        .iter()
        .enumerate()
        .map(|(i, (id, a))| a.map(|a| (i, a)).ok_or_else(|| Error::InvalidInput(format!("unit {id:?} has no defined mean"))))
        .collect::<Result<_>>()?;
    order.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| entries[x.0].0.cmp(&entries[y.0].0)));
    let mut ranks = vec![0; entries.len()];
    for (r, (i, _)) in order.into_iter().enumerate() {
        ranks[i] = r + 1;
    }
    Ok(ranks)
}

/// Ranks with ties given the mean of the positions they span.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of the midranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("rankings differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidInput("Spearman correlation needs at least two units".into()));
    }
    let (ra, rb) = (midranks(a), midranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::InvalidInput("a ranking with all ties has no rank correlation".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}
