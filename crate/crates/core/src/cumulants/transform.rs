/// Raw moments `m_1..m_N` to cumulants `C_1..C_N` by
/// `C_n = m_n − Σ_{k=1}^{n−1} binom(n−1, k−1) C_k m_{n−k}`.
pub fn moments_to_cumulants(moments: &[f64]) -> Vec<f64> {
    let n = moments.len();
    let binom = binomial_rows(n);
    let mut c = vec![0.0; n];
    for i in 1..=n {
        let mut acc = moments[i - 1];
        for k in 1..i {
            acc -= binom[i - 1][k - 1] * c[k - 1] * moments[i - k - 1];
        }
        c[i - 1] = acc;
    }
    c
}

/// Inverse of [`moments_to_cumulants`]: `m_n = Σ_{k=1}^{n} binom(n−1, k−1) C_k m_{n−k}`, `m_0 = 1`.
pub fn cumulants_to_moments(cumulants: &[f64]) -> Vec<f64> {
    let n = cumulants.len();
    let binom = binomial_rows(n);
    let mut m = vec![1.0; n + 1];
    for i in 1..=n {
        let mut acc = 0.0;
        for k in 1..=i {
            acc += binom[i - 1][k - 1] * cumulants[k - 1] * m[i - k];
        }
        m[i] = acc;
    }
    m.remove(0);
    m
}

fn binomial_rows(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![1.0; i + 1];
        for k in 1..i {
            row[k] = rows[i - 1][k - 1] + rows[i - 1][k];
        }
        rows.push(row);
    }
    rows
}
